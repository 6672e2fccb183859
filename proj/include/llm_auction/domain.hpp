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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "llm_auction/random.hpp"

namespace llm_auction {

struct AdCandidate {
  int id = 0;
  double relevance = 0.0;          // match quality to the query, [0,1]
  double intrinsic_quality = 0.0;  // [0,1]
};

// Per-click bids, one per candidate ad.
class BidProfile {
 public:
  BidProfile() = default;
  explicit BidProfile(std::vector<double> bids);

  std::size_t size() const { return bids_.size(); }
  double operator[](std::size_t i) const { return bids_[i]; }
  std::span<const double> values() const { return bids_; }

  // Returns a copy with bid `ad` replaced.
  BidProfile with_bid(std::size_t ad, double bid) const;

 private:
  std::vector<double> bids_;
};

// One query instance: query features x, user features h, candidate ads a
// and the bid profile b.
struct AuctionContext {
  std::vector<double> query_features;
  std::vector<double> user_features;
  std::vector<AdCandidate> ads;
  BidProfile bids;

  std::size_t n_ads() const { return ads.size(); }
  // Throws std::invalid_argument when the context is malformed.
  void validate() const;
  AuctionContext with_bid(std::size_t ad, double bid) const;
};

// One element of the finite response space: which ads are exposed, at which
// placement quality, and whether the generated text was malformed.
struct ResponseOutcome {
  std::vector<int> exposed;  // sorted ascending
  int quality_index = -1;    // -1 only for the empty response
  double quality = 0.0;      // grid value in [0,1]
  bool format_error = false;

  int n_ads() const { return static_cast<int>(exposed.size()); }
  bool empty() const { return exposed.empty(); }
  bool exposes(int ad) const;
  // "S=<indices>;q=<index>;fe=<0|1>", "S=;q=-;fe=0" for the empty response.
  std::string key() const;
  // The same response without the format error flag.
  ResponseOutcome clean() const;
  ResponseOutcome with_format_error() const;

  friend bool operator==(const ResponseOutcome&, const ResponseOutcome&) = default;
};

// Value of quality level `index` on a grid of `levels` points: (index+1)/levels.
double quality_grid_value(int index, int levels);

// Enumerated stand-in for the response space, ordered by |S|, then S
// lexicographically, then quality index. The empty response comes first.
class ResponseSpace {
 public:
  std::size_t size() const { return responses_.size(); }
  const ResponseOutcome& operator[](std::size_t i) const { return responses_[i]; }
  std::span<const ResponseOutcome> responses() const { return responses_; }
  auto begin() const { return responses_.begin(); }
  auto end() const { return responses_.end(); }

  int n_ads() const { return n_ads_; }
  int k_max() const { return k_max_; }
  int quality_levels() const { return quality_levels_; }

  // Index of the (clean) response with this key; -1 when absent.
  int find(const std::string& key) const;
  // Index of `response` ignoring its format error flag. Throws if absent.
  std::size_t index_of(const ResponseOutcome& response) const;

 private:
  friend ResponseSpace enumerate_responses(int n_ads, int k_max, int quality_levels);

  std::vector<ResponseOutcome> responses_;
  std::unordered_map<std::string, std::size_t> index_;
  int n_ads_ = 0;
  int k_max_ = 0;
  int quality_levels_ = 0;
};

ResponseSpace enumerate_responses(int n_ads, int k_max, int quality_levels);

// Expected size of the enumeration: 1 + q * sum_{s=1..min(k,n)} C(n, s).
std::size_t response_space_size(int n_ads, int k_max, int quality_levels);

// Probability vector aligned with a ResponseSpace.
class PolicyDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  PolicyDistribution() = default;
  // Rejects negative entries and sums further than kSumTolerance from 1.
  explicit PolicyDistribution(std::vector<double> probs);
  // Scales a non-negative vector with positive mass to sum to one.
  static PolicyDistribution renormalized(std::vector<double> weights);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

  // Inverse-CDF draw of a response index.
  std::size_t sample(Rng& rng) const;

 private:
  std::vector<double> probs_;
};

// Click labels for the exposed ads of one response.
struct ClickRecord {
  std::map<int, bool> clicks;

  bool clicked(int ad) const;
  int total() const;
};

}  // namespace llm_auction
