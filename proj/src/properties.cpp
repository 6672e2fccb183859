// Copyright 2026 The LLM Auction Simulator Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "llm_auction/properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace llm_auction {

MonotonicityResult monotonicity_sweep(const AuctionEnv& env, std::span<const double> grid, double tolerance) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("bid grid must be ascending");
  MonotonicityResult out;
  out.bids.assign(grid.begin(), grid.end());
  out.itctr.reserve(grid.size());
  for (double b : grid) out.itctr.push_back(env.itctr(b));
  for (std::size_t k = 1; k < out.itctr.size(); ++k) {
    const double drop = out.itctr[k - 1] - out.itctr[k];
    out.max_violation = std::max(out.max_violation, drop);
    if (drop > tolerance) ++out.violations;
  }
  return out;
}

ContinuitySweep continuity_sweep(const AuctionEnv& env, double b_min, double b_max, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("continuity sweep needs delta > 0");
  ContinuitySweep out;
  out.bids = make_grid(b_min, b_max, delta);
  double prev = env.itctr(out.bids.front());
  for (std::size_t k = 1; k < out.bids.size(); ++k) {
    const double cur = env.itctr(out.bids[k]);
    out.jumps.push_back(std::abs(cur - prev));
    out.max_jump = std::max(out.max_jump, out.jumps.back());
    prev = cur;
  }
  out.bids.pop_back();
  return out;
}

RefinementCheck continuity_refinement(const AuctionEnv& env, double b_min, double b_max, double delta) {
  RefinementCheck out;
  out.coarse_jump = continuity_sweep(env, b_min, b_max, delta).max_jump;
  out.fine_jump = continuity_sweep(env, b_min, b_max, delta / 2.0).max_jump;
  if (out.coarse_jump <= 1e-15 && out.fine_jump <= 1e-15) {
    out.pass = true;
    return out;
  }
  out.ratio = out.coarse_jump > 0.0 ? out.fine_jump / out.coarse_jump : 1.0;
  out.pass = out.ratio >= kRefinementRatioLow && out.ratio <= kRefinementRatioHigh;
  return out;
}

namespace {

std::vector<double> dirichlet(Rng& rng, std::size_t n, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> w(n);
  do {
    for (double& x : w) x = gamma(rng);
  } while (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0);
  return w;
}

}  // namespace

OptimalityCheck optimality_perturbation_test(const AuctionContext& context, const ResponseSpace& space,
                                             const BasePolicy& base, const CtrSource& ctr,
                                             const MechanismConfig& mech, int trials, double magnitude, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("optimality test needs at least one trial");
  const TiltedDistribution star = optimal_policy_with_partition(context, space, base, ctr, mech);
  const double best = objective(star.policy, context, space, base, ctr, mech);
  OptimalityCheck out;
  out.log_partition_residual = std::abs(best - mech.beta * star.log_partition);
  out.worst_gap = -std::numeric_limits<double>::infinity();
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = space.size();
  for (int t = 0; t < trials; ++t) {
    std::vector<double> w(n);
    if (t % 3 == 0) {
      const double eps = magnitude * uniform01(rng);
      const PolicyDistribution noise = PolicyDistribution::renormalized(dirichlet(rng, n, 1.0));
      for (std::size_t i = 0; i < n; ++i) w[i] = (1.0 - eps) * star.policy[i] + eps * noise[i];
    } else if (t % 3 == 1) {
      for (std::size_t i = 0; i < n; ++i) w[i] = star.policy[i] * std::exp(magnitude * normal(rng));
    } else {
      w = dirichlet(rng, n, 0.1 + uniform01(rng));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (base.probs[i] == 0.0) w[i] = 0.0;
    }
    const PolicyDistribution pi = PolicyDistribution::renormalized(std::move(w));
    out.worst_gap = std::max(out.worst_gap, objective(pi, context, space, base, ctr, mech) - best);
  }
  out.pass = out.worst_gap <= kOptimalityTolerance && out.log_partition_residual <= kOptimalityTolerance;
  return out;
}

std::vector<double> unbiasedness_gap(const PolicyDistribution& policy, const AuctionContext& context,
                                     const ResponseSpace& space, const PctrModel& pctr, const UserModelParams& user) {
  std::vector<double> gap(context.n_ads(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    for (int ad : space[i].exposed) {
      gap[static_cast<std::size_t>(ad)] += policy[i] * (predict_pctr(pctr, context, ad, space[i]) -
                                                        true_ctr(user, context, ad, space[i]));
    }
  }
  for (double& g : gap) g = std::abs(g);
  return gap;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two equal-length samples");
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

BidClickCurve bid_click_experiment(const ContextAllocator& allocate, std::span<const AuctionContext> contexts,
                                   const ResponseSpace& space, const UserModelParams& user,
                                   double format_error_rate, std::span<const double> grid, int reps,
                                   std::uint64_t seed) {
  if (grid.size() < 2) throw std::invalid_argument("bid click experiment needs at least two bids");
  BidClickCurve out;
  out.bids.assign(grid.begin(), grid.end());
  out.clicks.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    Rng pick = make_rng(seed, {k});
    const auto ad = static_cast<std::size_t>(uniform01(pick) * static_cast<double>(contexts[k].n_ads()));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const AuctionContext ctx = contexts[k].with_bid(ad, grid[g]);
      const PolicyDistribution pi = allocate(ctx);
      Rng rng = make_rng(seed, {k, g + 1});
      for (int r = 0; r < reps; ++r) {
        const ResponseOutcome y = generate_response(rng, space, pi, format_error_rate);
        if (sample_clicks(rng, user, ctx, y).clicked(static_cast<int>(ad))) out.clicks[g] += 1.0;
      }
    }
  }
  out.spearman = spearman(out.bids, out.clicks);
  return out;
}

}  // namespace llm_auction
