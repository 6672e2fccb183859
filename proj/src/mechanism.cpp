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

#include "llm_auction/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace llm_auction {

void RewardConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("reward.lambda must be non-negative");
  if (!(ad_count_penalty >= 0.0) || !(format_error_penalty >= 0.0)) {
    throw std::invalid_argument("reward penalties must be non-negative");
  }
}

void MechanismConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("mechanism.beta must be positive");
  reward.validate();
}

BasePolicy make_base_policy(const ResponseSpace& space, double kappa, double format_error_rate) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("base policy kappa must be non-negative");
  if (!(format_error_rate >= 0.0 && format_error_rate < 1.0)) {
    throw std::invalid_argument("format_error_rate must lie in [0,1)");
  }
  std::vector<double> w(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) w[i] = std::exp(-kappa * space[i].n_ads());
  return BasePolicy{PolicyDistribution::renormalized(std::move(w)), kappa, format_error_rate};
}

double CtrSource::operator()(const AuctionContext& context, int ad, const ResponseOutcome& response) const {
  if (const auto* params = std::get_if<UserModelParams>(&source_)) return true_ctr(*params, context, ad, response);
  return predict_pctr(std::get<PctrModel>(source_), context, ad, response);
}

double response_experience(const ResponseOutcome& response, const RewardConfig& cfg) {
  const double n = response.n_ads();
  return -cfg.ad_count_penalty * n * n - (response.format_error ? cfg.format_error_penalty : 0.0);
}

double response_reward(const AuctionContext& context, const ResponseOutcome& response, const CtrSource& ctr,
                       const RewardConfig& cfg) {
  double value = 0.0;
  for (int ad : response.exposed) value += context.bids[static_cast<std::size_t>(ad)] * ctr(context, ad, response);
  return value + cfg.lambda * response_experience(response, cfg);
}

std::vector<double> reward_vector(const AuctionContext& context, const ResponseSpace& space, const CtrSource& ctr,
                                  const RewardConfig& cfg) {
  std::vector<double> r(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) r[i] = response_reward(context, space[i], ctr, cfg);
  return r;
}

TiltedDistribution exponential_tilt(const PolicyDistribution& base, const std::vector<double>& rewards, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("tilt temperature must be positive");
  if (rewards.size() != base.size()) throw std::invalid_argument("reward vector does not match the policy");
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (base[i] > 0.0) shift = std::max(shift, rewards[i] / beta);
  }
  std::vector<double> w(rewards.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (base[i] > 0.0) w[i] = base[i] * std::exp(rewards[i] / beta - shift);
    z += w[i];
  }
  for (double& x : w) x /= z;
  return TiltedDistribution{PolicyDistribution(std::move(w)), shift + std::log(z)};
}

TiltedDistribution optimal_policy_with_partition(const AuctionContext& context, const ResponseSpace& space,
                                                 const BasePolicy& base, const CtrSource& ctr,
                                                 const MechanismConfig& mech) {
  return exponential_tilt(base.probs, reward_vector(context, space, ctr, mech.reward), mech.beta);
}

PolicyDistribution optimal_policy(const AuctionContext& context, const ResponseSpace& space, const BasePolicy& base,
                                  const CtrSource& ctr, const MechanismConfig& mech) {
  return optimal_policy_with_partition(context, space, base, ctr, mech).policy;
}

double itctr(const PolicyDistribution& policy, const AuctionContext& context, const ResponseSpace& space, int ad,
             const CtrSource& ctr) {
  if (policy.size() != space.size()) throw std::invalid_argument("policy does not match the response space");
  double total = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (policy[i] > 0.0 && space[i].exposes(ad)) total += policy[i] * ctr(context, ad, space[i]);
  }
  return total;
}

double kl_divergence(const PolicyDistribution& p, const PolicyDistribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("KL: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw std::invalid_argument("KL: policy puts mass outside the base support");
    kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return kl;
}

double kl_to_optimal(const PolicyDistribution& p, const AuctionContext& context, const ResponseSpace& space,
                     const BasePolicy& base, const CtrSource& ctr, const MechanismConfig& mech) {
  if (p.size() != space.size()) throw std::invalid_argument("KL: size mismatch");
  const std::vector<double> rewards = reward_vector(context, space, ctr, mech.reward);
  const double log_z = exponential_tilt(base.probs, rewards, mech.beta).log_partition;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (base.probs[i] == 0.0) throw std::invalid_argument("KL: policy puts mass outside the base support");
    kl += p[i] * (std::log(p[i]) - std::log(base.probs[i]) - rewards[i] / mech.beta + log_z);
  }
  return std::max(kl, 0.0);
}

double objective(const PolicyDistribution& policy, const AuctionContext& context, const ResponseSpace& space,
                 const BasePolicy& base, const CtrSource& ctr, const MechanismConfig& mech) {
  const double kl = kl_divergence(policy, base.probs);
  double value = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (policy[i] > 0.0) value += policy[i] * response_reward(context, space[i], ctr, mech.reward);
  }
  return value - mech.beta * kl;
}

double expected_payment(const PolicyDistribution& policy, const AuctionContext& context, const ResponseSpace& space,
                        int ad, const CtrSource& ctr) {
  return context.bids[static_cast<std::size_t>(ad)] * itctr(policy, context, space, ad, ctr);
}

std::vector<double> realized_payment(const ClickRecord& clicks, const BidProfile& bids) {
  std::vector<double> pay(bids.size(), 0.0);
  for (const auto& [ad, clicked] : clicks.clicks) {
    if (clicked) pay.at(static_cast<std::size_t>(ad)) = bids[static_cast<std::size_t>(ad)];
  }
  return pay;
}

ResponseOutcome generate_response(Rng& rng, const ResponseSpace& space, const PolicyDistribution& policy,
                                  double format_error_rate) {
  ResponseOutcome y = space[policy.sample(rng)];
  // Consumed unconditionally so the stream does not depend on the draw.
  if (uniform01(rng) < format_error_rate) y = y.with_format_error();
  return y;
}

}  // namespace llm_auction
