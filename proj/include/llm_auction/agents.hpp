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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "llm_auction/domain.hpp"
#include "llm_auction/irpo.hpp"
#include "llm_auction/mechanism.hpp"

namespace llm_auction {

// The auction seen by one bidder: everything but the focal ad's bid is fixed.
// The referenced ResponseSpace must outlive the env.
class AuctionEnv {
 public:
  using Allocation = std::function<PolicyDistribution(double focal_bid)>;

  AuctionEnv(AuctionContext context, int focal, const ResponseSpace& space, const CtrSource& ctr,
             Allocation allocation);

  const AuctionContext& context() const { return context_; }
  const ResponseSpace& space() const { return *space_; }
  int focal() const { return focal_; }
  double focal_bid() const { return context_.bids[static_cast<std::size_t>(focal_)]; }

  PolicyDistribution allocation(double bid) const { return allocation_(bid); }
  // itctr of the focal ad when it bids `bid`.
  double itctr(double bid) const;
  double itctr(const PolicyDistribution& policy) const;

 private:
  AuctionContext context_;
  int focal_ = 0;
  const ResponseSpace* space_ = nullptr;
  std::vector<double> focal_ctr_;  // ctr of the focal ad per response, 0 if unexposed
  Allocation allocation_;
};

// Allocation = exact optimal policy, rewards scored with `ctr`.
AuctionEnv make_optimal_env(AuctionContext context, int focal, const ResponseSpace& space, const BasePolicy& base,
                            const CtrSource& ctr, const MechanismConfig& mech);

// Allocation = parametric softmax policy.
AuctionEnv make_policy_env(AuctionContext context, int focal, const ResponseSpace& space, const BasePolicy& base,
                           const PolicyParams& params, const CtrSource& ctr);

// Negative control: a single-slot auction that deterministically shows the
// ad with the highest bid * ctr at top quality. Allocation is a step function
// of the bid.
AuctionEnv make_slot_env(AuctionContext context, int focal, const ResponseSpace& space, const CtrSource& ctr);

// Builds the env for `focal` given the full current bid profile.
using EnvFactory = std::function<AuctionEnv(const AuctionContext& context, int focal)>;

enum class BidderKind { kUtility, kValue };

struct AgentSpec {
  BidderKind kind = BidderKind::kUtility;
  double value = 0.0;  // private value per click
  double roi = 1.0;    // target ROI, value maximizers only

  void validate() const;
  // v for utility maximizers, v / roi for value maximizers.
  double truthful_bid() const;
};

std::string to_string(BidderKind kind);
BidderKind parse_bidder_kind(const std::string& s);

// (v - bid) * itctr(bid).
double um_utility(const AuctionEnv& env, const AgentSpec& agent, double bid);

struct VmObjective {
  double value = 0.0;
  bool feasible = true;
};

// value = v * itctr(bid); feasible iff roi * bid * itctr <= v * itctr, up to
// a relative 1e-12. An ad that is never clicked is feasible with zero value.
VmObjective vm_objective(const AuctionEnv& env, const AgentSpec& agent, double bid);

struct BestResponse {
  double bid = 0.0;
  double utility = 0.0;
};

// Utility maximizers: argmax on the grid, lowest bid on ties. Value
// maximizers: argmax among feasible grid bids; values within a relative 1e-12
// of the best are ties and resolve to the highest such bid.
BestResponse best_response(const AuctionEnv& env, const AgentSpec& agent, std::span<const double> grid);

// Agent's objective at `bid`, -inf for infeasible value-maximizer bids.
double agent_utility(const AuctionEnv& env, const AgentSpec& agent, double bid);

// max over the grid of utility(bid) - utility(truthful bid), floored at 0.
double ic_regret(const AuctionEnv& env, const AgentSpec& agent, std::span<const double> grid);

struct DynamicsRow {
  int iter = 0;
  int agent = 0;
  double bid = 0.0;
  double utility = 0.0;
  double regret = 0.0;  // best grid utility minus current utility
};

struct DynamicsResult {
  std::vector<double> bids;  // final bids, agent k bids for ad k
  double epsilon = 0.0;      // max regret at the final profile
  bool converged = false;
  int rounds = 0;  // simultaneous updates performed
  std::vector<DynamicsRow> trace;
};

// Iterated simultaneous best response. Agent k controls ad k of `start`;
// every agent starts from its truthful bid rounded down onto the grid.
DynamicsResult best_response_dynamics(const AuctionContext& start, const EnvFactory& factory,
                                      std::span<const AgentSpec> agents, std::span<const double> grid,
                                      int max_iters);

// lo, lo + step, ... up to hi (inclusive when it lands on the grid).
std::vector<double> make_grid(double lo, double hi, double step);

}  // namespace llm_auction
