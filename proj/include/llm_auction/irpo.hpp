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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "llm_auction/ctr_model.hpp"
#include "llm_auction/domain.hpp"
#include "llm_auction/mechanism.hpp"
#include "llm_auction/user_model.hpp"

namespace llm_auction {

// Bids enter the policy features divided by this scale (top of the bid support).
inline constexpr double kBidScale = 100.0;

// Policy feature map, summed over the exposed ads of a response:
//   0: sum b_i/100      1: sum rel_i       2: sum (b_i/100)*rel_i
//   3: sum quality      4: sum iq_i        5: N_ad           6: N_ad^2
inline constexpr std::size_t kPolicyFeatures = 7;
using PolicyFeatures = std::array<double, kPolicyFeatures>;

PolicyFeatures policy_features(const AuctionContext& context, const ResponseOutcome& response);

// Softmax policy with logits log pi_0(y) + theta . features(y). theta = 0 is
// the pretrained policy.
struct PolicyParams {
  PolicyFeatures theta{};
};

PolicyDistribution policy_distribution(const PolicyParams& params, const AuctionContext& context,
                                       const ResponseSpace& space, const BasePolicy& base);

// Log-probabilities of every response, in space order.
std::vector<double> log_probs(const PolicyParams& params, const AuctionContext& context, const ResponseSpace& space,
                              const BasePolicy& base);

double log_prob(const PolicyParams& params, const AuctionContext& context, const ResponseSpace& space,
                const BasePolicy& base, std::size_t response);

// d/dtheta log pi(y) = features(y) - E_pi[features].
PolicyFeatures log_prob_gradient(const PolicyParams& params, const AuctionContext& context,
                                 const ResponseSpace& space, const BasePolicy& base, std::size_t response);

struct PreferenceSet {
  std::size_t winner = 0;
  std::vector<std::size_t> losers;  // positions l with r_w - r_l > delta_th
};

// Winner is the first maximal reward.
PreferenceSet build_preference_set(std::span<const double> rewards, double delta_th);

struct DpoLoss {
  double loss = 0.0;
  PolicyFeatures gradient{};
};

// Mean over losers of -log sigmoid(beta * (margin_w - margin_l)), where
// margin_y = log pi_theta(y) - log pi_ref(y). Winner and losers are response
// indices. Throws when `losers` is empty.
DpoLoss dpo_loss_and_gradient(const PolicyParams& params, const PolicyParams& reference, const AuctionContext& context,
                              const ResponseSpace& space, const BasePolicy& base, std::size_t winner,
                              std::span<const std::size_t> losers, double beta);

struct DpoConfig {
  double beta = 0.1;
  double delta_th = 10.0;
  int m_samples = 5;
  double learning_rate = 8.0;
  int batch_size = 64;
  int passes = 80;  // passes over the offline set per epoch
  double lr_decay = 0.02;  // learning rate of epoch t is learning_rate * lr_decay^(t-1)

  void validate() const;
};

struct IrpoConfig {
  int epochs = 3;
  int train_contexts = 500;
  int reward_samples = 10;  // responses per query when collecting clicks
  double pctr_learning_rate = 0.1;
  int pctr_iterations = 2000;  // gradient steps per epoch, warm-started
  bool misspecified_pctr = false;
  bool accumulate_clicks = true;  // keep earlier epochs' click logs in the pCTR fit
  DpoConfig dpo;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double bce = 0.0;
  double dpo_loss = 0.0;
  double oracle_reward_per_query = 0.0;
  double revenue_per_query = 0.0;
  double unbiasedness_gap = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;  // offline samples without losers
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
};

struct IrpoResult {
  PolicyParams policy;
  PctrModel pctr;
  TrainingHistory history;
  std::vector<PolicyParams> snapshots;  // parameters before epoch 1, after each epoch
};

// Exact per-query averages of a policy over a set of contexts, under the
// ground-truth user model.
struct PolicyEvaluation {
  double oracle_reward = 0.0;
  double revenue = 0.0;
};

PolicyEvaluation evaluate_policy(const PolicyParams& params, std::span<const AuctionContext> contexts,
                                 const ResponseSpace& space, const BasePolicy& base, const UserModelParams& user,
                                 const RewardConfig& reward);

// Alternates click collection + pCTR fitting with DPO updates of the policy.
// `monitor` contexts are only used for the per-epoch history.
IrpoResult run_irpo(const ScenarioConfig& scenario, const ResponseSpace& space, const BasePolicy& base,
                    const MechanismConfig& mech, const IrpoConfig& cfg, std::uint64_t seed,
                    std::span<const AuctionContext> monitor);

// Samples m responses from the base policy and keeps the highest-reward one
// (first sample wins ties).
ResponseOutcome mosaic_select(const BasePolicy& base, const AuctionContext& context, const ResponseSpace& space,
                              const CtrSource& ctr, const RewardConfig& reward, int m, Rng& rng);

}  // namespace llm_auction
