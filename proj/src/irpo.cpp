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

#include "llm_auction/irpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "llm_auction/properties.hpp"

namespace llm_auction {

PolicyFeatures policy_features(const AuctionContext& context, const ResponseOutcome& response) {
  PolicyFeatures f{};
  for (int ad : response.exposed) {
    const AdCandidate& a = context.ads[static_cast<std::size_t>(ad)];
    const double bid = context.bids[static_cast<std::size_t>(ad)] / kBidScale;
    f[0] += bid;
    f[1] += a.relevance;
    f[2] += bid * a.relevance;
    f[3] += response.quality;
    f[4] += a.intrinsic_quality;
  }
  const double n = response.n_ads();
  f[5] = n;
  f[6] = n * n;
  return f;
}

namespace {

double dot(const PolicyFeatures& a, const PolicyFeatures& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < kPolicyFeatures; ++k) s += a[k] * b[k];
  return s;
}

// log sigmoid(z) without overflow.
double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

struct ContextPolicy {
  std::vector<PolicyFeatures> features;
  std::vector<double> log_probs;
  std::vector<double> probs;
};

ContextPolicy evaluate(const PolicyParams& params, const AuctionContext& context, const ResponseSpace& space,
                       const BasePolicy& base) {
  if (base.probs.size() != space.size()) throw std::invalid_argument("base policy does not match the space");
  ContextPolicy out;
  out.features.reserve(space.size());
  out.log_probs.assign(space.size(), -std::numeric_limits<double>::infinity());
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < space.size(); ++i) {
    out.features.push_back(policy_features(context, space[i]));
    if (base.probs[i] > 0.0) {
      out.log_probs[i] = std::log(base.probs[i]) + dot(params.theta, out.features[i]);
      shift = std::max(shift, out.log_probs[i]);
    }
  }
  double z = 0.0;
  for (double lp : out.log_probs) z += std::exp(lp - shift);
  const double log_z = shift + std::log(z);
  out.probs.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    out.log_probs[i] -= log_z;
    out.probs[i] = std::exp(out.log_probs[i]);
  }
  return out;
}

}  // namespace

PolicyDistribution policy_distribution(const PolicyParams& params, const AuctionContext& context,
                                       const ResponseSpace& space, const BasePolicy& base) {
  return PolicyDistribution::renormalized(evaluate(params, context, space, base).probs);
}

std::vector<double> log_probs(const PolicyParams& params, const AuctionContext& context, const ResponseSpace& space,
                              const BasePolicy& base) {
  return evaluate(params, context, space, base).log_probs;
}

double log_prob(const PolicyParams& params, const AuctionContext& context, const ResponseSpace& space,
                const BasePolicy& base, std::size_t response) {
  return log_probs(params, context, space, base).at(response);
}

PolicyFeatures log_prob_gradient(const PolicyParams& params, const AuctionContext& context,
                                 const ResponseSpace& space, const BasePolicy& base, std::size_t response) {
  const ContextPolicy cp = evaluate(params, context, space, base);
  PolicyFeatures g = cp.features.at(response);
  for (std::size_t i = 0; i < space.size(); ++i) {
    for (std::size_t k = 0; k < kPolicyFeatures; ++k) g[k] -= cp.probs[i] * cp.features[i][k];
  }
  return g;
}

PreferenceSet build_preference_set(std::span<const double> rewards, double delta_th) {
  if (rewards.size() < 2) throw std::invalid_argument("preference set needs at least two rewards");
  PreferenceSet set;
  for (std::size_t m = 1; m < rewards.size(); ++m) {
    if (rewards[m] > rewards[set.winner]) set.winner = m;
  }
  for (std::size_t m = 0; m < rewards.size(); ++m) {
    if (rewards[set.winner] - rewards[m] > delta_th) set.losers.push_back(m);
  }
  return set;
}

DpoLoss dpo_loss_and_gradient(const PolicyParams& params, const PolicyParams& reference, const AuctionContext& context,
                              const ResponseSpace& space, const BasePolicy& base, std::size_t winner,
                              std::span<const std::size_t> losers, double beta) {
  if (losers.empty()) throw std::invalid_argument("DPO loss needs a non-empty loser set");
  const ContextPolicy cur = evaluate(params, context, space, base);
  const std::vector<double> ref = log_probs(reference, context, space, base);
  const double margin_w = cur.log_probs.at(winner) - ref.at(winner);
  DpoLoss out;
  for (std::size_t l : losers) {
    const double z = beta * (margin_w - (cur.log_probs.at(l) - ref.at(l)));
    out.loss -= log_sigmoid(z);
    // d/dz [-log sigmoid(z)] = -sigmoid(-z); the policy's mean feature cancels
    // between the two log-probability gradients.
    const double scale = -sigmoid(-z) * beta;
    for (std::size_t k = 0; k < kPolicyFeatures; ++k) {
      out.gradient[k] += scale * (cur.features[winner][k] - cur.features[l][k]);
    }
  }
  const double inv = 1.0 / static_cast<double>(losers.size());
  out.loss *= inv;
  for (double& g : out.gradient) g *= inv;
  return out;
}

void DpoConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("dpo.beta must be positive");
  if (!(delta_th >= 0.0)) throw std::invalid_argument("dpo.delta_th must be non-negative");
  if (m_samples < 2) throw std::invalid_argument("dpo.m_samples must be >= 2");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("dpo.learning_rate must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("dpo.batch_size must be >= 1");
  if (passes < 0) throw std::invalid_argument("dpo.passes must be non-negative");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("dpo.lr_decay must be in (0, 1]");
}

void IrpoConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("irpo.epochs must be >= 1");
  if (train_contexts < 1) throw std::invalid_argument("irpo.train_contexts must be >= 1");
  if (reward_samples < 1) throw std::invalid_argument("irpo.reward_samples must be >= 1");
  if (!(pctr_learning_rate >= 0.0)) throw std::invalid_argument("irpo.pctr_learning_rate must be non-negative");
  if (pctr_iterations < 0) throw std::invalid_argument("irpo.pctr_iterations must be non-negative");
  dpo.validate();
}

PolicyEvaluation evaluate_policy(const PolicyParams& params, std::span<const AuctionContext> contexts,
                                 const ResponseSpace& space, const BasePolicy& base, const UserModelParams& user,
                                 const RewardConfig& reward) {
  PolicyEvaluation ev;
  if (contexts.empty()) return ev;
  const CtrSource oracle = CtrSource::oracle(user);
  for (const AuctionContext& ctx : contexts) {
    const PolicyDistribution pi = policy_distribution(params, ctx, space, base);
    for (std::size_t i = 0; i < space.size(); ++i) ev.oracle_reward += pi[i] * response_reward(ctx, space[i], oracle, reward);
    for (int ad = 0; ad < static_cast<int>(ctx.n_ads()); ++ad) ev.revenue += expected_payment(pi, ctx, space, ad, oracle);
  }
  ev.oracle_reward /= static_cast<double>(contexts.size());
  ev.revenue /= static_cast<double>(contexts.size());
  return ev;
}

namespace {

// Stream identifiers for derived generators.
enum Stream : std::uint64_t {
  kTrainContexts = 11,
  kPhase1 = 12,
  kPhase2Contexts = 13,
  kPhase2Samples = 14,
};

struct OfflineSample {
  AuctionContext context;
  std::size_t winner = 0;
  std::vector<std::size_t> losers;
};

}  // namespace

IrpoResult run_irpo(const ScenarioConfig& scenario, const ResponseSpace& space, const BasePolicy& base,
                    const MechanismConfig& mech, const IrpoConfig& cfg, std::uint64_t seed,
                    std::span<const AuctionContext> monitor) {
  scenario.validate();
  mech.validate();
  cfg.validate();

  std::vector<AuctionContext> train;
  train.reserve(static_cast<std::size_t>(cfg.train_contexts));
  for (int k = 0; k < cfg.train_contexts; ++k) {
    Rng rng = make_rng(seed, {kTrainContexts, static_cast<std::uint64_t>(k)});
    train.push_back(sample_context(rng, scenario));
  }

  IrpoResult result;
  result.pctr.feature_set = cfg.misspecified_pctr ? PctrFeatureSet::kNoCrowding : PctrFeatureSet::kFull;
  result.snapshots.push_back(result.policy);

  ClickDataset online;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t = static_cast<std::uint64_t>(epoch);
    const PolicyParams reference = result.policy;

    // Phase 1: deploy the current policy on freshly bid queries, log clicks,
    // refit the pCTR model.
    if (!cfg.accumulate_clicks) online = ClickDataset{};
    for (std::size_t k = 0; k < train.size(); ++k) {
      Rng rng = make_rng(seed, {kPhase1, t, k});
      AuctionContext ctx = train[k];
      ctx.bids = sample_bids(rng, scenario);
      const PolicyDistribution pi = policy_distribution(reference, ctx, space, base);
      const std::size_t id = online.add_context(ctx);
      for (int s = 0; s < cfg.reward_samples; ++s) {
        const ResponseOutcome y = generate_response(rng, space, pi, base.format_error_rate);
        online.add_impression(id, y, sample_clicks(rng, scenario.user_model, ctx, y));
      }
    }
    EpochRecord record;
    record.epoch = epoch;
    if (!online.empty()) {
      PctrTrainResult fit = train_pctr(result.pctr, online, cfg.pctr_learning_rate, cfg.pctr_iterations);
      result.pctr = fit.model;
      record.bce = fit.loss_trace.back();
    }

    // Phase 2: fresh queries and bids, M samples each, scored by the refit
    // reward model; DPO against the epoch's reference policy.
    const CtrSource reward_model = CtrSource::predicted(result.pctr);
    std::vector<OfflineSample> offline;
    for (int k = 0; k < cfg.train_contexts; ++k) {
      Rng ctx_rng = make_rng(seed, {kPhase2Contexts, t, static_cast<std::uint64_t>(k)});
      Rng rng = make_rng(seed, {kPhase2Samples, t, static_cast<std::uint64_t>(k)});
      AuctionContext ctx = sample_context(ctx_rng, scenario);
      const PolicyDistribution pi = policy_distribution(reference, ctx, space, base);
      std::vector<ResponseOutcome> ys;
      std::vector<double> rewards;
      for (int m = 0; m < cfg.dpo.m_samples; ++m) {
        ys.push_back(generate_response(rng, space, pi, base.format_error_rate));
        rewards.push_back(response_reward(ctx, ys.back(), reward_model, mech.reward));
      }
      PreferenceSet pref = build_preference_set(rewards, cfg.dpo.delta_th);
      // Queries without a loser stay in the batch with zero loss, so a round
      // that yields few pairs also takes proportionally smaller steps.
      if (pref.losers.empty()) ++record.skipped;
      OfflineSample sample{std::move(ctx), space.index_of(ys[pref.winner]), {}};
      for (std::size_t l : pref.losers) sample.losers.push_back(space.index_of(ys[l]));
      record.pairs += sample.losers.size();
      offline.push_back(std::move(sample));
    }

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    const double eta = cfg.dpo.learning_rate * std::pow(cfg.dpo.lr_decay, epoch - 1);
    for (int pass = 0; pass < cfg.dpo.passes; ++pass) {
      for (std::size_t start = 0; start < offline.size(); start += static_cast<std::size_t>(cfg.dpo.batch_size)) {
        const std::size_t stop = std::min(offline.size(), start + static_cast<std::size_t>(cfg.dpo.batch_size));
        PolicyFeatures grad{};
        for (std::size_t s = start; s < stop; ++s) {
          if (offline[s].losers.empty()) continue;
          const DpoLoss d = dpo_loss_and_gradient(result.policy, reference, offline[s].context, space, base,
                                                  offline[s].winner, offline[s].losers, cfg.dpo.beta);
          if (!std::isfinite(d.loss)) {
            throw TrainingError("DPO loss diverged in epoch " + std::to_string(epoch) + ", pass " +
                                std::to_string(pass));
          }
          loss_sum += d.loss;
          ++loss_count;
          for (std::size_t k = 0; k < kPolicyFeatures; ++k) grad[k] += d.gradient[k];
        }
        const double inv = 1.0 / static_cast<double>(stop - start);
        for (std::size_t k = 0; k < kPolicyFeatures; ++k) {
          result.policy.theta[k] -= eta * grad[k] * inv;
        }
      }
    }
    for (double th : result.policy.theta) {
      if (!std::isfinite(th)) throw TrainingError("policy parameters diverged in epoch " + std::to_string(epoch));
    }
    record.dpo_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;

    if (!monitor.empty()) {
      const PolicyEvaluation ev =
          evaluate_policy(result.policy, monitor, space, base, scenario.user_model, mech.reward);
      record.oracle_reward_per_query = ev.oracle_reward;
      record.revenue_per_query = ev.revenue;
      // Bias of the refit pCTR under the policy this epoch hands on; worst ad
      // per query, averaged over queries.
      double gap = 0.0;
      for (const AuctionContext& ctx : monitor) {
        const PolicyDistribution pi = policy_distribution(result.policy, ctx, space, base);
        const std::vector<double> g = unbiasedness_gap(pi, ctx, space, result.pctr, scenario.user_model);
        gap += *std::max_element(g.begin(), g.end());
      }
      record.unbiasedness_gap = gap / static_cast<double>(monitor.size());
    }
    result.history.epochs.push_back(record);
    result.snapshots.push_back(result.policy);
  }
  return result;
}

ResponseOutcome mosaic_select(const BasePolicy& base, const AuctionContext& context, const ResponseSpace& space,
                              const CtrSource& ctr, const RewardConfig& reward, int m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("mosaic_select needs m >= 1");
  ResponseOutcome best = generate_response(rng, space, base.probs, base.format_error_rate);
  double best_reward = response_reward(context, best, ctr, reward);
  for (int j = 1; j < m; ++j) {
    ResponseOutcome y = generate_response(rng, space, base.probs, base.format_error_rate);
    const double r = response_reward(context, y, ctr, reward);
    if (r > best_reward) {
      best = std::move(y);
      best_reward = r;
    }
  }
  return best;
}

}  // namespace llm_auction
