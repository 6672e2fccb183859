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

#include "llm_auction/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace llm_auction {

AuctionEnv::AuctionEnv(AuctionContext context, int focal, const ResponseSpace& space, const CtrSource& ctr,
                       Allocation allocation)
    : context_(std::move(context)), focal_(focal), space_(&space), allocation_(std::move(allocation)) {
  context_.validate();
  if (focal < 0 || static_cast<std::size_t>(focal) >= context_.n_ads()) {
    throw std::invalid_argument("focal ad out of range");
  }
  focal_ctr_.assign(space.size(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space[i].exposes(focal)) focal_ctr_[i] = ctr(context_, focal, space[i]);
  }
}

double AuctionEnv::itctr(const PolicyDistribution& policy) const {
  double total = 0.0;
  for (std::size_t i = 0; i < focal_ctr_.size(); ++i) total += policy[i] * focal_ctr_[i];
  return total;
}

double AuctionEnv::itctr(double bid) const { return itctr(allocation(bid)); }

AuctionEnv make_optimal_env(AuctionContext context, int focal, const ResponseSpace& space, const BasePolicy& base,
                            const CtrSource& ctr, const MechanismConfig& mech) {
  mech.validate();
  context.validate();
  // R(y) = fixed(y) + bid * slope(y); only the focal term moves with the bid.
  std::vector<double> fixed(space.size()), slope(space.size(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ResponseOutcome& y = space[i];
    fixed[i] = mech.reward.lambda * response_experience(y, mech.reward);
    for (int ad : y.exposed) {
      const double c = ctr(context, ad, y);
      if (ad == focal) {
        slope[i] = c;
      } else {
        fixed[i] += context.bids[static_cast<std::size_t>(ad)] * c;
      }
    }
  }
  auto allocation = [fixed = std::move(fixed), slope = std::move(slope), probs = base.probs,
                     beta = mech.beta](double bid) {
    std::vector<double> r(fixed.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = fixed[i] + bid * slope[i];
    return exponential_tilt(probs, r, beta).policy;
  };
  return AuctionEnv(std::move(context), focal, space, ctr, std::move(allocation));
}

AuctionEnv make_policy_env(AuctionContext context, int focal, const ResponseSpace& space, const BasePolicy& base,
                           const PolicyParams& params, const CtrSource& ctr) {
  auto allocation = [context, focal, &space, base, params](double bid) {
    return policy_distribution(params, context.with_bid(static_cast<std::size_t>(focal), bid), space, base);
  };
  return AuctionEnv(std::move(context), focal, space, ctr, std::move(allocation));
}

AuctionEnv make_slot_env(AuctionContext context, int focal, const ResponseSpace& space, const CtrSource& ctr) {
  const int top_quality = space.quality_levels() - 1;
  std::vector<std::size_t> slot(context.n_ads());
  std::vector<double> slot_ctr(context.n_ads());
  for (std::size_t ad = 0; ad < context.n_ads(); ++ad) {
    ResponseOutcome y{{static_cast<int>(ad)}, top_quality, quality_grid_value(top_quality, space.quality_levels()), false};
    slot[ad] = space.index_of(y);
    slot_ctr[ad] = ctr(context, static_cast<int>(ad), y);
  }
  auto allocation = [bids = std::vector<double>(context.bids.values().begin(), context.bids.values().end()), focal,
                     slot, slot_ctr, n = space.size()](double bid) {
    std::size_t winner = 0;
    double best = -1.0;
    for (std::size_t ad = 0; ad < bids.size(); ++ad) {
      const double score = (static_cast<int>(ad) == focal ? bid : bids[ad]) * slot_ctr[ad];
      if (score > best) {
        best = score;
        winner = ad;
      }
    }
    std::vector<double> p(n, 0.0);
    p[slot[winner]] = 1.0;
    return PolicyDistribution(std::move(p));
  };
  return AuctionEnv(std::move(context), focal, space, ctr, std::move(allocation));
}

void AgentSpec::validate() const {
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("agent value must be non-negative");
  if (kind == BidderKind::kValue && !(roi >= 1.0)) throw std::invalid_argument("value maximizer roi must be >= 1");
}

double AgentSpec::truthful_bid() const { return kind == BidderKind::kValue ? value / roi : value; }

std::string to_string(BidderKind kind) { return kind == BidderKind::kValue ? "VM" : "UM"; }

BidderKind parse_bidder_kind(const std::string& s) {
  if (s == "UM") return BidderKind::kUtility;
  if (s == "VM") return BidderKind::kValue;
  throw std::invalid_argument("unknown bidder kind '" + s + "' (expected UM or VM)");
}

double um_utility(const AuctionEnv& env, const AgentSpec& agent, double bid) {
  if (!(bid >= 0.0)) throw std::invalid_argument("bid must be non-negative");
  return (agent.value - bid) * env.itctr(bid);
}

VmObjective vm_objective(const AuctionEnv& env, const AgentSpec& agent, double bid) {
  if (!(bid >= 0.0)) throw std::invalid_argument("bid must be non-negative");
  const double rate = env.itctr(bid);
  if (rate <= 0.0) return {0.0, true};
  // Relative slack so that bid = v / roi stays feasible after rounding.
  const double spend = agent.roi * bid * rate, value = agent.value * rate;
  return {value, spend <= value * (1.0 + 1e-12)};
}

double agent_utility(const AuctionEnv& env, const AgentSpec& agent, double bid) {
  if (agent.kind == BidderKind::kUtility) return um_utility(env, agent, bid);
  const VmObjective o = vm_objective(env, agent, bid);
  return o.feasible ? o.value : -std::numeric_limits<double>::infinity();
}

BestResponse best_response(const AuctionEnv& env, const AgentSpec& agent, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("bid grid is empty");
  std::vector<double> u(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) u[g] = agent_utility(env, agent, grid[g]);
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (u[g] > u[best]) best = g;
  }
  if (agent.kind == BidderKind::kValue && std::isfinite(u[best])) {
    const double floor = u[best] - 1e-12 * std::max(1.0, std::abs(u[best]));
    for (std::size_t g = grid.size(); g-- > best;) {
      if (u[g] >= floor) {
        best = g;
        break;
      }
    }
  }
  return {grid[best], u[best]};
}

double ic_regret(const AuctionEnv& env, const AgentSpec& agent, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("bid grid is empty");
  const double truthful = agent_utility(env, agent, agent.truthful_bid());
  double regret = 0.0;
  for (double b : grid) regret = std::max(regret, agent_utility(env, agent, b) - truthful);
  return regret;
}

namespace {

double snap_down(std::span<const double> grid, double bid) {
  double out = grid.front();
  for (double g : grid) {
    if (g <= bid + 1e-12) out = g;
  }
  return out;
}

}  // namespace

DynamicsResult best_response_dynamics(const AuctionContext& start, const EnvFactory& factory,
                                      std::span<const AgentSpec> agents, std::span<const double> grid,
                                      int max_iters) {
  if (agents.empty()) throw std::invalid_argument("best response dynamics needs at least one agent");
  if (agents.size() > start.n_ads()) throw std::invalid_argument("more agents than candidate ads");
  if (grid.empty()) throw std::invalid_argument("bid grid is empty");
  for (const AgentSpec& a : agents) a.validate();

  DynamicsResult result;
  AuctionContext ctx = start;
  for (std::size_t k = 0; k < agents.size(); ++k) ctx = ctx.with_bid(k, snap_down(grid, agents[k].truthful_bid()));

  for (int iter = 0;; ++iter) {
    std::vector<double> next(agents.size());
    double epsilon = 0.0;
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const AuctionEnv env = factory(ctx, static_cast<int>(k));
      const BestResponse br = best_response(env, agents[k], grid);
      const double current = agent_utility(env, agents[k], env.focal_bid());
      const double regret = std::isfinite(current) ? std::max(0.0, br.utility - current)
                                                   : std::numeric_limits<double>::infinity();
      epsilon = std::max(epsilon, regret);
      result.trace.push_back({iter, static_cast<int>(k), env.focal_bid(), current, regret});
      // Keep the current bid when it is already a best response.
      next[k] = regret <= 0.0 ? env.focal_bid() : br.bid;
    }
    result.epsilon = epsilon;
    if (epsilon <= 0.0) {
      result.converged = true;
      break;
    }
    if (iter >= max_iters) break;
    for (std::size_t k = 0; k < agents.size(); ++k) ctx = ctx.with_bid(k, next[k]);
    ++result.rounds;
  }
  for (std::size_t k = 0; k < agents.size(); ++k) result.bids.push_back(ctx.bids[k]);
  return result;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("invalid grid specification");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> grid(n + 1);
  for (std::size_t k = 0; k <= n; ++k) grid[k] = lo + static_cast<double>(k) * step;
  return grid;
}

}  // namespace llm_auction
