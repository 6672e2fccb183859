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

#include "llm_auction/ctr_model.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

namespace llm_auction {

PctrModel PctrModel::from_user_model(const UserModelParams& params) {
  PctrModel m;
  m.weights = {params.bias, params.w_relevance, params.w_quality, params.w_intrinsic, -params.w_crowding};
  return m;
}

std::size_t ClickDataset::add_context(AuctionContext context) {
  contexts.push_back(std::move(context));
  return contexts.size() - 1;
}

void ClickDataset::add_impression(std::size_t context_id, const ResponseOutcome& response,
                                  const ClickRecord& clicks) {
  for (int ad : response.exposed) rows.push_back(ClickRow{context_id, response, ad, clicks.clicked(ad)});
}

void ClickDataset::validate() const {
  for (const ClickRow& row : rows) {
    if (row.context_id >= contexts.size()) throw std::invalid_argument("click row references unknown context");
    if (!row.response.exposes(row.ad)) throw std::invalid_argument("click row ad is not exposed");
  }
}

PctrFeatures featurize(const AuctionContext& context, int ad, const ResponseOutcome& response,
                       PctrFeatureSet feature_set) {
  if (!response.exposes(ad)) throw std::invalid_argument("featurize: ad is not exposed in the response");
  const AdCandidate& a = context.ads.at(static_cast<std::size_t>(ad));
  double crowd = feature_set == PctrFeatureSet::kFull ? static_cast<double>(response.n_ads() - 1) : 0.0;
  return {1.0, a.relevance, response.quality, a.intrinsic_quality, crowd};
}

namespace {

double dot(const PctrFeatures& w, const PctrFeatures& f) {
  double z = 0.0;
  for (std::size_t k = 0; k < kPctrFeatures; ++k) z += w[k] * f[k];
  return z;
}

double clamp_probability(double p) {
  return std::min(std::max(p, kProbabilityClamp), 1.0 - kProbabilityClamp);
}

struct DesignMatrix {
  std::vector<PctrFeatures> features;
  std::vector<double> labels;
};

DesignMatrix build_design(const ClickDataset& data, PctrFeatureSet feature_set) {
  if (data.empty()) throw std::invalid_argument("click dataset is empty");
  DesignMatrix d;
  d.features.reserve(data.rows.size());
  d.labels.reserve(data.rows.size());
  for (const ClickRow& row : data.rows) {
    d.features.push_back(featurize(data.contexts.at(row.context_id), row.ad, row.response, feature_set));
    d.labels.push_back(row.click ? 1.0 : 0.0);
  }
  return d;
}

double loss_on(const PctrFeatures& w, const DesignMatrix& d) {
  double total = 0.0;
  for (std::size_t r = 0; r < d.features.size(); ++r) {
    double p = clamp_probability(sigmoid(dot(w, d.features[r])));
    total -= d.labels[r] * std::log(p) + (1.0 - d.labels[r]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(d.features.size());
}

PctrFeatures gradient_on(const PctrFeatures& w, const DesignMatrix& d) {
  PctrFeatures g{};
  for (std::size_t r = 0; r < d.features.size(); ++r) {
    double residual = sigmoid(dot(w, d.features[r])) - d.labels[r];
    for (std::size_t k = 0; k < kPctrFeatures; ++k) g[k] += residual * d.features[r][k];
  }
  for (double& gk : g) gk /= static_cast<double>(d.features.size());
  return g;
}

}  // namespace

double predict_pctr(const PctrModel& model, const AuctionContext& context, int ad,
                    const ResponseOutcome& response) {
  return sigmoid(dot(model.weights, featurize(context, ad, response, model.feature_set)));
}

double bce_loss(const PctrModel& model, const ClickDataset& data) {
  return loss_on(model.weights, build_design(data, model.feature_set));
}

PctrFeatures bce_gradient(const PctrModel& model, const ClickDataset& data) {
  return gradient_on(model.weights, build_design(data, model.feature_set));
}

PctrTrainResult train_pctr(const PctrModel& model, const ClickDataset& data, double learning_rate,
                           int iterations) {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("pctr learning rate must be non-negative");
  if (iterations < 0) throw std::invalid_argument("pctr iterations must be non-negative");
  const DesignMatrix design = build_design(data, model.feature_set);
  PctrTrainResult result{model, {}};
  result.loss_trace.reserve(static_cast<std::size_t>(iterations) + 1);
  for (int it = 0; it <= iterations; ++it) {
    double loss = loss_on(result.model.weights, design);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "pctr training diverged at iteration " << it << " (learning rate " << learning_rate << ")";
      throw TrainingError(msg.str());
    }
    result.loss_trace.push_back(loss);
    if (it == iterations) break;
    PctrFeatures g = gradient_on(result.model.weights, design);
    for (std::size_t k = 0; k < kPctrFeatures; ++k) result.model.weights[k] -= learning_rate * g[k];
  }
  if (result.model.feature_set == PctrFeatureSet::kNoCrowding) result.model.weights[4] = 0.0;
  result.model.version = model.version + 1;
  return result;
}

void write_click_csv(std::ostream& out, const ClickDataset& data) {
  out << "context_id,response_key,ad_id,click\n";
  for (const ClickRow& row : data.rows) {
    out << row.context_id << ",\"" << row.response.key() << "\"," << row.ad << ',' << (row.click ? 1 : 0) << '\n';
  }
}

}  // namespace llm_auction
