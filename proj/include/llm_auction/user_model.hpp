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

#include "llm_auction/domain.hpp"
#include "llm_auction/random.hpp"

namespace llm_auction {

// Ground-truth click model of the simulated user. Each exposed ad is
// clicked with probability
//   sigmoid(bias + w_relevance*rel + w_quality*quality + w_intrinsic*iq
//           - w_crowding*(n_exposed - 1)).
struct UserModelParams {
  double bias = -2.0;
  double w_relevance = 3.0;
  double w_quality = 1.0;
  double w_crowding = 0.7;
  double w_intrinsic = 0.5;

  void validate() const;
};

struct ScenarioConfig {
  int n_ads = 5;
  int k_max = 2;
  int quality_levels = 2;
  int bid_min = 1;  // bids are uniform integers on [bid_min, bid_max]
  int bid_max = 100;
  int query_dim = 2;
  int user_dim = 2;
  UserModelParams user_model;
  std::uint64_t seed = 1;

  void validate() const;
};

double sigmoid(double z);

// Draws features (uniform on [0,1]) and a fresh bid profile.
AuctionContext sample_context(Rng& rng, const ScenarioConfig& scenario);
BidProfile sample_bids(Rng& rng, const ScenarioConfig& scenario);

// Click probability of an exposed ad. Never reads the bids.
double true_ctr(const UserModelParams& params, const AuctionContext& context, int ad,
                const ResponseOutcome& response);

// Independent Bernoulli clicks for every exposed ad. Malformed responses
// receive no clicks.
ClickRecord sample_clicks(Rng& rng, const UserModelParams& params, const AuctionContext& context,
                          const ResponseOutcome& response);

}  // namespace llm_auction
