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

#pragma once

#include <variant>
#include <vector>

#include "llm_auction/ctr_model.hpp"
#include "llm_auction/domain.hpp"
#include "llm_auction/user_model.hpp"

namespace llm_auction {

struct RewardConfig {
  double lambda = 1.0;  // weight of the user-experience term
  double ad_count_penalty = 10.0;
  double format_error_penalty = 500.0;

  void validate() const;
};

struct MechanismConfig {
  double beta = 0.1;  // KL temperature
  RewardConfig reward;

  void validate() const;
};

// Pretrained allocation pi_0(y) proportional to exp(-kappa * N_ad(y)),
// uniform over quality, independent of bids. Generated samples are turned
// into their malformed variant with probability format_error_rate.
struct BasePolicy {
  PolicyDistribution probs;
  double kappa = 1.0;
  double format_error_rate = 0.02;
};

BasePolicy make_base_policy(const ResponseSpace& space, double kappa, double format_error_rate);

// Where per-ad click probabilities come from: the simulated user's ground
// truth, or a learned pCTR model.
class CtrSource {
 public:
  static CtrSource oracle(const UserModelParams& params) { return CtrSource(params); }
  static CtrSource predicted(const PctrModel& model) { return CtrSource(model); }

  double operator()(const AuctionContext& context, int ad, const ResponseOutcome& response) const;
  bool is_oracle() const { return std::holds_alternative<UserModelParams>(source_); }

 private:
  explicit CtrSource(UserModelParams p) : source_(p) {}
  explicit CtrSource(PctrModel m) : source_(m) {}

  std::variant<UserModelParams, PctrModel> source_;
};

// User-experience score of a response: -penalty*N_ad^2 - 500*[format error].
double response_experience(const ResponseOutcome& response, const RewardConfig& cfg);

// Bid-weighted click value plus lambda times the experience score.
double response_reward(const AuctionContext& context, const ResponseOutcome& response, const CtrSource& ctr,
                       const RewardConfig& cfg);

// Rewards of every response in the space, in space order.
std::vector<double> reward_vector(const AuctionContext& context, const ResponseSpace& space, const CtrSource& ctr,
                                  const RewardConfig& cfg);

struct TiltedDistribution {
  PolicyDistribution policy;
  double log_partition = 0.0;  // log sum_y base(y) exp(reward(y)/beta)
};

// base(y) * exp(reward(y) / beta) / Z, computed with a max shift.
TiltedDistribution exponential_tilt(const PolicyDistribution& base, const std::vector<double>& rewards, double beta);

// Exact maximizer of E_pi[R] - beta * KL(pi || pi_0).
TiltedDistribution optimal_policy_with_partition(const AuctionContext& context, const ResponseSpace& space,
                                                 const BasePolicy& base, const CtrSource& ctr,
                                                 const MechanismConfig& mech);
PolicyDistribution optimal_policy(const AuctionContext& context, const ResponseSpace& space, const BasePolicy& base,
                                  const CtrSource& ctr, const MechanismConfig& mech);

// Probability that `ad` is both exposed and clicked.
double itctr(const PolicyDistribution& policy, const AuctionContext& context, const ResponseSpace& space, int ad,
             const CtrSource& ctr);

// KL(p || q) with 0 log 0 = 0. Throws when p is not absolutely continuous
// with respect to q.
double kl_divergence(const PolicyDistribution& p, const PolicyDistribution& q);

// KL(p || pi*) evaluated through log pi* = log pi_0 + R / beta - log Z, so it
// stays finite when pi* underflows on part of the support.
double kl_to_optimal(const PolicyDistribution& p, const AuctionContext& context, const ResponseSpace& space,
                     const BasePolicy& base, const CtrSource& ctr, const MechanismConfig& mech);

// E_y[sum_i b_i ctr_i 1{i in y} + lambda * experience(y)] - beta * KL(pi || pi_0).
double objective(const PolicyDistribution& policy, const AuctionContext& context, const ResponseSpace& space,
                 const BasePolicy& base, const CtrSource& ctr, const MechanismConfig& mech);

// First-price expected payment b_i * itctr_i.
double expected_payment(const PolicyDistribution& policy, const AuctionContext& context, const ResponseSpace& space,
                        int ad, const CtrSource& ctr);

// Pay-per-click: each clicked ad pays its own bid.
std::vector<double> realized_payment(const ClickRecord& clicks, const BidProfile& bids);

// Draws one response from `policy` and applies the generation noise.
ResponseOutcome generate_response(Rng& rng, const ResponseSpace& space, const PolicyDistribution& policy,
                                  double format_error_rate);

}  // namespace llm_auction
