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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "llm_auction/ctr_model.hpp"

namespace llm_auction {

namespace {

AuctionContext make_context(std::vector<double> relevance, std::vector<double> iq) {
  AuctionContext ctx;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    ctx.ads.push_back({static_cast<int>(i), relevance[i], iq[i]});
  }
  ctx.bids = BidProfile(std::vector<double>(relevance.size(), 10.0));
  return ctx;
}

ResponseOutcome response(std::vector<int> exposed, double quality) {
  ResponseOutcome y;
  y.exposed = std::move(exposed);
  y.quality_index = 0;
  y.quality = quality;
  return y;
}

// Independent reference: per-row sigmoid and log-loss written out directly.
double reference_loss(const PctrFeatures& w, const ClickDataset& data) {
  double total = 0.0;
  for (const ClickRow& row : data.rows) {
    const AdCandidate& a = data.contexts[row.context_id].ads[static_cast<std::size_t>(row.ad)];
    const double z = w[0] + w[1] * a.relevance + w[2] * row.response.quality + w[3] * a.intrinsic_quality +
                     w[4] * (row.response.n_ads() - 1);
    const double p = 1.0 / (1.0 + std::exp(-z));
    total += row.click ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(data.rows.size());
}

ClickDataset random_dataset(Rng& rng, int contexts, int impressions_each) {
  ClickDataset data;
  for (int c = 0; c < contexts; ++c) {
    std::vector<double> rel, iq;
    for (int i = 0; i < 4; ++i) {
      rel.push_back(uniform01(rng));
      iq.push_back(uniform01(rng));
    }
    std::size_t id = data.add_context(make_context(rel, iq));
    for (int m = 0; m < impressions_each; ++m) {
      int first = static_cast<int>(rng() % 4);
      std::vector<int> s = {first};
      if (rng() % 2) {
        int second = (first + 1 + static_cast<int>(rng() % 3)) % 4;
        s = {std::min(first, second), std::max(first, second)};
      }
      ClickRecord clicks;
      for (int ad : s) clicks.clicks[ad] = (rng() % 3) == 0;
      data.add_impression(id, response(s, (rng() % 2) ? 0.5 : 1.0), clicks);
    }
  }
  return data;
}

TEST(Featurize, GoldenVector) {
  const AuctionContext ctx = make_context({0.2, 0.7, 0.4}, {0.9, 0.3, 0.1});
  const PctrFeatures f = featurize(ctx, 1, response({0, 1, 2}, 0.5));
  const PctrFeatures expected = {1.0, 0.7, 0.5, 0.3, 2.0};
  EXPECT_EQ(f, expected);
  const PctrFeatures g = featurize(ctx, 1, response({0, 1, 2}, 0.5), PctrFeatureSet::kNoCrowding);
  EXPECT_EQ(g[4], 0.0);
  EXPECT_THROW(featurize(ctx, 2, response({0, 1}, 0.5)), std::invalid_argument);
}

TEST(PredictPctr, TrueWeightsReproduceUserModel) {
  const UserModelParams params;
  const PctrModel model = PctrModel::from_user_model(params);
  Rng rng = make_rng(4, {});
  for (int t = 0; t < 200; ++t) {
    const AuctionContext ctx = make_context({uniform01(rng), uniform01(rng)}, {uniform01(rng), uniform01(rng)});
    const ResponseOutcome y = response({0, 1}, uniform01(rng));
    for (int ad : {0, 1}) EXPECT_NEAR(predict_pctr(model, ctx, ad, y), true_ctr(params, ctx, ad, y), 1e-15);
  }
}

TEST(BceLoss, ZeroWeightsGiveLogTwo) {
  ClickDataset data;
  std::size_t id = data.add_context(make_context({0.5, 0.5}, {0.0, 0.0}));
  ClickRecord clicks;
  clicks.clicks = {{0, true}, {1, false}};
  data.add_impression(id, response({0, 1}, 1.0), clicks);
  EXPECT_NEAR(bce_loss(PctrModel{}, data), std::log(2.0), 1e-15);
}

TEST(BceLoss, MeanOfRowLosses) {
  // Rows built so that the model predicts 0.9 (clicked), 0.2 (not clicked)
  // and 0.5 (clicked).
  ClickDataset data;
  PctrModel model;
  model.weights = {0.0, 1.0, 0.0, 0.0, 0.0};
  const double z09 = std::log(0.9 / 0.1);
  const double z02 = std::log(0.2 / 0.8);
  std::size_t id = data.add_context(make_context({z09, z02, 0.0}, {0.0, 0.0, 0.0}));
  ClickRecord c;
  c.clicks = {{0, true}, {1, false}, {2, true}};
  data.add_impression(id, response({0, 1, 2}, 0.0), c);
  const double expected = (-std::log(0.9) - std::log(0.8) + std::log(2.0)) / 3.0;
  EXPECT_NEAR(bce_loss(model, data), expected, 1e-12);
}

TEST(BceLoss, ClampKeepsLossFinite) {
  ClickDataset data;
  std::size_t id = data.add_context(make_context({1.0}, {0.0}));
  ClickRecord c;
  c.clicks = {{0, false}};
  data.add_impression(id, response({0}, 0.0), c);
  PctrModel model;
  model.weights = {800.0, 0.0, 0.0, 0.0, 0.0};
  const double loss = bce_loss(model, data);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(kProbabilityClamp), 1e-3);
}

TEST(BceGradient, SingleRowAtZero) {
  ClickDataset data;
  std::size_t id = data.add_context(make_context({0.6, 0.1}, {0.25, 0.0}));
  ClickRecord c;
  c.clicks = {{0, true}, {1, true}};
  ResponseOutcome y = response({0, 1}, 0.5);
  data.add_impression(id, y, c);
  data.rows.pop_back();  // keep only ad 0
  const PctrFeatures g = bce_gradient(PctrModel{}, data);
  const PctrFeatures f = featurize(data.contexts[0], 0, y);
  for (std::size_t k = 0; k < kPctrFeatures; ++k) EXPECT_NEAR(g[k], -0.5 * f[k], 1e-15);
}

TEST(BceGradient, MatchesCentralDifferences) {
  Rng rng = make_rng(17, {});
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const ClickDataset data = random_dataset(rng, 3, 4);
    PctrModel model;
    for (double& w : model.weights) w = 2.0 * uniform01(rng) - 1.0;
    const PctrFeatures g = bce_gradient(model, data);
    for (std::size_t k = 0; k < kPctrFeatures; ++k) {
      PctrFeatures up = model.weights, down = model.weights;
      up[k] += h;
      down[k] -= h;
      const double fd = (reference_loss(up, data) - reference_loss(down, data)) / (2.0 * h);
      const double scale = std::max(std::abs(fd), 1e-3);
      EXPECT_LE(std::abs(g[k] - fd) / scale, 1e-6) << "trial " << trial << " coord " << k;
    }
    EXPECT_NEAR(bce_loss(model, data), reference_loss(model.weights, data), 1e-12);
  }
}

TEST(TrainPctr, ZeroStepLeavesWeightsUnchanged) {
  Rng rng = make_rng(8, {});
  const ClickDataset data = random_dataset(rng, 5, 5);
  PctrModel model;
  model.weights = {0.3, -0.2, 0.1, 0.4, -0.5};
  const PctrTrainResult r = train_pctr(model, data, 0.0, 50);
  EXPECT_EQ(r.model.weights, model.weights);
  EXPECT_EQ(r.loss_trace.size(), 51u);
  EXPECT_EQ(r.model.version, model.version + 1);
}

TEST(TrainPctr, LossDoesNotIncrease) {
  Rng rng = make_rng(9, {});
  const ClickDataset data = random_dataset(rng, 20, 5);
  const PctrTrainResult r = train_pctr(PctrModel{}, data, 0.1, 200);
  EXPECT_LE(r.loss_trace.back(), r.loss_trace.front());
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) EXPECT_LE(r.loss_trace[i], r.loss_trace[i - 1] + 1e-15);
}

TEST(TrainPctr, RecoversGeneratingWeights) {
  const UserModelParams params;
  Rng rng = make_rng(21, {});
  ClickDataset data;
  while (data.rows.size() < 50000) {
    std::vector<double> rel, iq;
    for (int i = 0; i < 4; ++i) {
      rel.push_back(uniform01(rng));
      iq.push_back(uniform01(rng));
    }
    const AuctionContext ctx = make_context(rel, iq);
    std::size_t id = data.add_context(ctx);
    const int n = 1 + static_cast<int>(rng() % 3);
    std::vector<int> s;
    for (int i = 0; i < n; ++i) s.push_back(i);
    const ResponseOutcome y = response(s, (rng() % 2) ? 0.5 : 1.0);
    data.add_impression(id, y, sample_clicks(rng, params, ctx, y));
  }
  const PctrTrainResult r = train_pctr(PctrModel{}, data, 2.0, 3000);
  const PctrModel truth = PctrModel::from_user_model(params);
  for (std::size_t k = 0; k < kPctrFeatures; ++k) EXPECT_NEAR(r.model.weights[k], truth.weights[k], 0.1) << k;
}

TEST(TrainPctr, NonFiniteInputRaisesTrainingError) {
  ClickDataset data;
  std::size_t id = data.add_context(make_context({std::numeric_limits<double>::quiet_NaN()}, {0.0}));
  ClickRecord c;
  c.clicks = {{0, true}};
  data.add_impression(id, response({0}, 0.5), c);
  EXPECT_THROW(train_pctr(PctrModel{}, data, 0.1, 10), TrainingError);
}

TEST(TrainPctr, RejectsBadArguments) {
  Rng rng = make_rng(1, {});
  const ClickDataset data = random_dataset(rng, 1, 1);
  EXPECT_THROW(train_pctr(PctrModel{}, data, -1.0, 1), std::invalid_argument);
  EXPECT_THROW(train_pctr(PctrModel{}, data, 0.1, -1), std::invalid_argument);
  EXPECT_THROW(train_pctr(PctrModel{}, ClickDataset{}, 0.1, 1), std::invalid_argument);
}

TEST(ClickCsv, HeaderAndRows) {
  ClickDataset data;
  std::size_t id = data.add_context(make_context({0.1, 0.2, 0.3}, {0.0, 0.0, 0.0}));
  ResponseOutcome y = response({0, 2}, 1.0);
  y.quality_index = 1;
  ClickRecord c;
  c.clicks = {{0, false}, {2, true}};
  data.add_impression(id, y, c);
  std::ostringstream out;
  write_click_csv(out, data);
  EXPECT_EQ(out.str(),
            "context_id,response_key,ad_id,click\n"
            "0,\"S=0,2;q=1;fe=0\",0,0\n"
            "0,\"S=0,2;q=1;fe=0\",2,1\n");
}

TEST(ClickDataset, Validation) {
  ClickDataset data;
  data.add_context(make_context({0.1}, {0.0}));
  data.rows.push_back(ClickRow{3, response({0}, 0.5), 0, false});
  EXPECT_THROW(data.validate(), std::invalid_argument);
  data.rows[0].context_id = 0;
  EXPECT_NO_THROW(data.validate());
  data.rows[0].ad = 1;
  EXPECT_THROW(data.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace llm_auction
