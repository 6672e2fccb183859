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

#include "llm_auction/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace llm_auction {

BidProfile::BidProfile(std::vector<double> bids) : bids_(std::move(bids)) {
  for (double b : bids_) {
    if (!std::isfinite(b) || b < 0.0) throw std::invalid_argument("bids must be finite and non-negative");
  }
}

BidProfile BidProfile::with_bid(std::size_t ad, double bid) const {
  if (ad >= bids_.size()) throw std::invalid_argument("bid index out of range");
  std::vector<double> next = bids_;
  next[ad] = bid;
  return BidProfile(std::move(next));
}

void AuctionContext::validate() const {
  if (ads.empty()) throw std::invalid_argument("context has no candidate ads");
  if (bids.size() != ads.size()) throw std::invalid_argument("bid profile length differs from ad count");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(query_features) || !finite(user_features)) {
    throw std::invalid_argument("context features must be finite");
  }
  for (const AdCandidate& ad : ads) {
    if (!(ad.relevance >= 0.0 && ad.relevance <= 1.0) ||
        !(ad.intrinsic_quality >= 0.0 && ad.intrinsic_quality <= 1.0)) {
      throw std::invalid_argument("ad relevance and intrinsic quality must lie in [0,1]");
    }
  }
}

AuctionContext AuctionContext::with_bid(std::size_t ad, double bid) const {
  AuctionContext next = *this;
  next.bids = bids.with_bid(ad, bid);
  return next;
}

bool ResponseOutcome::exposes(int ad) const {
  return std::binary_search(exposed.begin(), exposed.end(), ad);
}

std::string ResponseOutcome::key() const {
  std::string out = "S=";
  for (std::size_t i = 0; i < exposed.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(exposed[i]);
  }
  out += ";q=";
  out += empty() ? std::string("-") : std::to_string(quality_index);
  out += format_error ? ";fe=1" : ";fe=0";
  return out;
}

ResponseOutcome ResponseOutcome::clean() const {
  ResponseOutcome out = *this;
  out.format_error = false;
  return out;
}

ResponseOutcome ResponseOutcome::with_format_error() const {
  ResponseOutcome out = *this;
  // The empty response has a single canonical form.
  out.format_error = !empty();
  return out;
}

double quality_grid_value(int index, int levels) {
  if (levels < 1 || index < 0 || index >= levels) throw std::invalid_argument("quality index out of range");
  return static_cast<double>(index + 1) / static_cast<double>(levels);
}

int ResponseSpace::find(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? -1 : static_cast<int>(it->second);
}

std::size_t ResponseSpace::index_of(const ResponseOutcome& response) const {
  int i = find(response.clean().key());
  if (i < 0) throw std::invalid_argument("response not in space: " + response.key());
  return static_cast<std::size_t>(i);
}

namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Visits all k-subsets of {0..n-1} in lexicographic order.
template <typename Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

std::size_t response_space_size(int n_ads, int k_max, int quality_levels) {
  double total = 0.0;
  for (int s = 1; s <= std::min(k_max, n_ads); ++s) total += binomial(n_ads, s);
  return 1 + static_cast<std::size_t>(quality_levels * total + 0.5);
}

ResponseSpace enumerate_responses(int n_ads, int k_max, int quality_levels) {
  if (n_ads < 1 || k_max < 0 || quality_levels < 1) {
    throw std::invalid_argument("enumerate_responses: need n_ads >= 1, k_max >= 0, quality_levels >= 1");
  }
  ResponseSpace space;
  space.n_ads_ = n_ads;
  space.k_max_ = k_max;
  space.quality_levels_ = quality_levels;
  space.responses_.push_back(ResponseOutcome{});
  for (int s = 1; s <= std::min(k_max, n_ads); ++s) {
    for_each_subset(n_ads, s, [&](const std::vector<int>& subset) {
      for (int q = 0; q < quality_levels; ++q) {
        space.responses_.push_back(ResponseOutcome{subset, q, quality_grid_value(q, quality_levels), false});
      }
    });
  }
  for (std::size_t i = 0; i < space.responses_.size(); ++i) {
    space.index_.emplace(space.responses_[i].key(), i);
  }
  return space;
}

PolicyDistribution::PolicyDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("empty policy distribution");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("policy probabilities must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("policy probabilities must sum to one");
  }
}

PolicyDistribution PolicyDistribution::renormalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and non-negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("weights have no mass");
  for (double& w : weights) w /= sum;
  return PolicyDistribution(std::move(weights));
}

std::size_t PolicyDistribution::sample(Rng& rng) const {
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    if (u < acc) return i;
  }
  // Rounding left u above the last partial sum; take the last supported entry.
  for (std::size_t i = probs_.size(); i-- > 0;) {
    if (probs_[i] > 0.0) return i;
  }
  return probs_.size() - 1;
}

bool ClickRecord::clicked(int ad) const {
  auto it = clicks.find(ad);
  return it != clicks.end() && it->second;
}

int ClickRecord::total() const {
  int n = 0;
  for (const auto& [ad, c] : clicks) n += c ? 1 : 0;
  return n;
}

}  // namespace llm_auction
