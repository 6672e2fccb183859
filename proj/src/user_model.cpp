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

#include "llm_auction/user_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace llm_auction {

void UserModelParams::validate() const {
  for (double w : {bias, w_relevance, w_quality, w_crowding, w_intrinsic}) {
    if (!std::isfinite(w)) throw std::invalid_argument("user model weights must be finite");
  }
  if (w_crowding < 0.0) throw std::invalid_argument("w_crowding must be non-negative");
}

void ScenarioConfig::validate() const {
  if (n_ads < 1) throw std::invalid_argument("scenario.n_ads must be >= 1");
  if (k_max < 0) throw std::invalid_argument("scenario.k_max must be >= 0");
  if (quality_levels < 1) throw std::invalid_argument("scenario.quality_levels must be >= 1");
  if (bid_min < 0 || bid_max < bid_min) throw std::invalid_argument("scenario bid range is invalid");
  if (query_dim < 0 || user_dim < 0) throw std::invalid_argument("feature dimensions must be non-negative");
  user_model.validate();
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

BidProfile sample_bids(Rng& rng, const ScenarioConfig& scenario) {
  const int span = scenario.bid_max - scenario.bid_min + 1;
  std::vector<double> bids(scenario.n_ads);
  for (double& b : bids) {
    int k = static_cast<int>(uniform01(rng) * span);
    b = static_cast<double>(scenario.bid_min + std::min(k, span - 1));
  }
  return BidProfile(std::move(bids));
}

AuctionContext sample_context(Rng& rng, const ScenarioConfig& scenario) {
  AuctionContext ctx;
  ctx.query_features.resize(scenario.query_dim);
  for (double& x : ctx.query_features) x = uniform01(rng);
  ctx.user_features.resize(scenario.user_dim);
  for (double& h : ctx.user_features) h = uniform01(rng);
  ctx.ads.resize(scenario.n_ads);
  for (int i = 0; i < scenario.n_ads; ++i) {
    ctx.ads[i].id = i;
    ctx.ads[i].relevance = uniform01(rng);
    ctx.ads[i].intrinsic_quality = uniform01(rng);
  }
  ctx.bids = sample_bids(rng, scenario);
  return ctx;
}

double true_ctr(const UserModelParams& params, const AuctionContext& context, int ad,
                const ResponseOutcome& response) {
  if (!response.exposes(ad)) throw std::invalid_argument("true_ctr: ad is not exposed in the response");
  const AdCandidate& a = context.ads.at(static_cast<std::size_t>(ad));
  double z = params.bias + params.w_relevance * a.relevance + params.w_quality * response.quality +
             params.w_intrinsic * a.intrinsic_quality - params.w_crowding * (response.n_ads() - 1);
  return sigmoid(z);
}

ClickRecord sample_clicks(Rng& rng, const UserModelParams& params, const AuctionContext& context,
                          const ResponseOutcome& response) {
  ClickRecord record;
  for (int ad : response.exposed) {
    // Draw even for malformed responses so the stream stays aligned.
    double u = uniform01(rng);
    record.clicks[ad] = !response.format_error && u < true_ctr(params, context, ad, response);
  }
  return record;
}

}  // namespace llm_auction
