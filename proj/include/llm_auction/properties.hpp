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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "llm_auction/agents.hpp"
#include "llm_auction/ctr_model.hpp"
#include "llm_auction/mechanism.hpp"

namespace llm_auction {

inline constexpr double kMonotonicityTolerance = 1e-9;

struct MonotonicityResult {
  std::vector<double> bids;
  std::vector<double> itctr;
  int violations = 0;          // strict decreases beyond the tolerance
  double max_violation = 0.0;  // largest decrease between adjacent grid bids
};

// itctr of the focal ad along an ascending bid grid.
MonotonicityResult monotonicity_sweep(const AuctionEnv& env, std::span<const double> grid,
                                      double tolerance = kMonotonicityTolerance);

struct ContinuitySweep {
  std::vector<double> bids;   // grid points b_min + k*delta
  std::vector<double> jumps;  // |itctr(b_{k+1}) - itctr(b_k)|, aligned with bids[k]
  double max_jump = 0.0;
};

ContinuitySweep continuity_sweep(const AuctionEnv& env, double b_min, double b_max, double delta);

// A continuous (piecewise C^1) allocation has max_jump proportional to delta,
// so halving delta halves the largest adjacent jump. A step allocation keeps
// its jump.
struct RefinementCheck {
  double coarse_jump = 0.0;
  double fine_jump = 0.0;
  double ratio = 0.0;  // fine / coarse; 0 when both are zero
  bool pass = false;
};

inline constexpr double kRefinementRatioLow = 0.4;
inline constexpr double kRefinementRatioHigh = 0.6;

RefinementCheck continuity_refinement(const AuctionEnv& env, double b_min, double b_max, double delta);

struct OptimalityCheck {
  bool pass = false;
  double worst_gap = 0.0;  // max over trials of objective(pi) - objective(pi*)
  double log_partition_residual = 0.0;  // |objective(pi*) - beta log Z|
};

inline constexpr double kOptimalityTolerance = 1e-10;

// Compares the closed-form optimum against random valid distributions: mixtures
// with Dirichlet noise (near), multiplicative log-space noise, and raw
// Dirichlet draws (far).
OptimalityCheck optimality_perturbation_test(const AuctionContext& context, const ResponseSpace& space,
                                             const BasePolicy& base, const CtrSource& ctr,
                                             const MechanismConfig& mech, int trials, double magnitude, Rng& rng);

// |E_pi[pctr_i 1{i in y}] - E_pi[ctr_i 1{i in y}]| per ad.
std::vector<double> unbiasedness_gap(const PolicyDistribution& policy, const AuctionContext& context,
                                     const ResponseSpace& space, const PctrModel& pctr, const UserModelParams& user);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

using ContextAllocator = std::function<PolicyDistribution(const AuctionContext&)>;

struct BidClickCurve {
  std::vector<double> bids;
  std::vector<double> clicks;  // clicks on the perturbed ad, summed over contexts
  double spearman = 0.0;
};

// Bid perturbation experiment: for each context pick one ad at random, set
// its bid to each grid value, sample `reps` responses with simulated clicks
// and count the clicks it receives. Generators are derived from `seed` per
// context, so different allocators see the same random numbers.
BidClickCurve bid_click_experiment(const ContextAllocator& allocate, std::span<const AuctionContext> contexts,
                                   const ResponseSpace& space, const UserModelParams& user,
                                   double format_error_rate, std::span<const double> grid, int reps,
                                   std::uint64_t seed);

}  // namespace llm_auction
