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
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "llm_auction/domain.hpp"
#include "llm_auction/user_model.hpp"

namespace llm_auction {

// Feature map order: (1, relevance, quality, intrinsic_quality, n_exposed - 1).
inline constexpr std::size_t kPctrFeatures = 5;
using PctrFeatures = std::array<double, kPctrFeatures>;

enum class PctrFeatureSet {
  kFull,
  kNoCrowding,  // drops the co-exposure feature (misspecified model)
};

struct PctrModel {
  PctrFeatures weights{};
  int version = 0;
  PctrFeatureSet feature_set = PctrFeatureSet::kFull;

  // Weights that reproduce `params` exactly under the full feature map.
  static PctrModel from_user_model(const UserModelParams& params);
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClickRow {
  std::size_t context_id = 0;
  ResponseOutcome response;
  int ad = 0;
  bool click = false;
};

// Logged clicks over a set of contexts.
struct ClickDataset {
  std::vector<AuctionContext> contexts;
  std::vector<ClickRow> rows;

  bool empty() const { return rows.empty(); }
  std::size_t add_context(AuctionContext context);
  // Adds one row per exposed ad of `response`.
  void add_impression(std::size_t context_id, const ResponseOutcome& response, const ClickRecord& clicks);
  void validate() const;
};

PctrFeatures featurize(const AuctionContext& context, int ad, const ResponseOutcome& response,
                       PctrFeatureSet feature_set = PctrFeatureSet::kFull);

double predict_pctr(const PctrModel& model, const AuctionContext& context, int ad,
                    const ResponseOutcome& response);

inline constexpr double kProbabilityClamp = 1e-12;

double bce_loss(const PctrModel& model, const ClickDataset& data);
PctrFeatures bce_gradient(const PctrModel& model, const ClickDataset& data);

struct PctrTrainResult {
  PctrModel model;
  std::vector<double> loss_trace;  // loss before each step, then the final loss
};

// Full-batch gradient descent from the given (warm-start) weights.
PctrTrainResult train_pctr(const PctrModel& model, const ClickDataset& data, double learning_rate,
                           int iterations);

// CSV with header context_id,response_key,ad_id,click. Keys are quoted
// because they contain commas.
void write_click_csv(std::ostream& out, const ClickDataset& data);

}  // namespace llm_auction
