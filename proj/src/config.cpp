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

#include "llm_auction/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace llm_auction {

using nlohmann::json;

void ExperimentConfig::validate() const {
  try {
    scenario.validate();
    mechanism.validate();
    irpo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(base_kappa >= 0.0)) throw ConfigError("mechanism.kappa must be non-negative");
  if (!(format_error_rate >= 0.0 && format_error_rate < 1.0)) {
    throw ConfigError("mechanism.format_error_rate must lie in [0,1)");
  }
  if (evaluation.test_contexts < 1) throw ConfigError("evaluation.test_contexts must be >= 1");
  if (evaluation.mosaic_m < 1) throw ConfigError("evaluation.mosaic_m must be >= 1");
  if (evaluation.samples_per_query < 1) throw ConfigError("evaluation.samples_per_query must be >= 1");
  if (evaluation.spearman_reps < 1) throw ConfigError("evaluation.spearman_reps must be >= 1");
  if (verify.monotonicity_envs < 0 || verify.continuity_envs < 0 || verify.optimality_envs < 0 ||
      verify.ic_envs < 0) {
    throw ConfigError("verify env counts must be non-negative");
  }
  if (!(verify.continuity_delta > 0.0)) throw ConfigError("verify.continuity_delta must be positive");
  if (verify.optimality_trials < 1) throw ConfigError("verify.optimality_trials must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

namespace {

// Reads the members of one JSON object, rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + " must be a JSON object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + path_ + "." + key);
    }
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      } else {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError("invalid type for " + path_ + "." + key);
    }
  }

  // Calls fn(reader) for a nested object when present.
  template <typename Fn>
  void nested(const std::string& key, Fn&& fn) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    ObjectReader child(*it, path_ + "." + key);
    fn(child);
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

CtrSourceKind parse_ctr_kind(const std::string& s) {
  if (s == "oracle") return CtrSourceKind::kOracle;
  if (s == "pctr") return CtrSourceKind::kPctr;
  throw ConfigError("evaluation.metrics_ctr_source must be 'oracle' or 'pctr'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  {
    ObjectReader root(doc, "config");
    if (!doc.contains("seed")) throw ConfigError("config.seed is required");
    root.read("seed", cfg.seed);
    root.read("output_dir", cfg.output_dir);
    root.nested("scenario", [&](ObjectReader& r) {
      ScenarioConfig& s = cfg.scenario;
      r.read("n_ads", s.n_ads);
      r.read("k_max", s.k_max);
      r.read("quality_levels", s.quality_levels);
      r.read("bid_min", s.bid_min);
      r.read("bid_max", s.bid_max);
      r.read("query_dim", s.query_dim);
      r.read("user_dim", s.user_dim);
      r.nested("user_model", [&](ObjectReader& u) {
        u.read("bias", s.user_model.bias);
        u.read("w_relevance", s.user_model.w_relevance);
        u.read("w_quality", s.user_model.w_quality);
        u.read("w_crowding", s.user_model.w_crowding);
        u.read("w_intrinsic", s.user_model.w_intrinsic);
      });
    });
    root.nested("mechanism", [&](ObjectReader& r) {
      r.read("beta", cfg.mechanism.beta);
      r.read("kappa", cfg.base_kappa);
      r.read("format_error_rate", cfg.format_error_rate);
      r.nested("reward", [&](ObjectReader& w) {
        w.read("lambda", cfg.mechanism.reward.lambda);
        w.read("ad_count_penalty", cfg.mechanism.reward.ad_count_penalty);
        w.read("format_error_penalty", cfg.mechanism.reward.format_error_penalty);
      });
    });
    root.nested("irpo", [&](ObjectReader& r) {
      IrpoConfig& i = cfg.irpo;
      r.read("epochs", i.epochs);
      r.read("train_contexts", i.train_contexts);
      r.read("reward_samples", i.reward_samples);
      r.read("pctr_learning_rate", i.pctr_learning_rate);
      r.read("pctr_iterations", i.pctr_iterations);
      r.read("misspecified_pctr", i.misspecified_pctr);
      r.read("accumulate_clicks", i.accumulate_clicks);
      r.nested("dpo", [&](ObjectReader& d) {
        d.read("beta", i.dpo.beta);
        d.read("delta_th", i.dpo.delta_th);
        d.read("m_samples", i.dpo.m_samples);
        d.read("learning_rate", i.dpo.learning_rate);
        d.read("batch_size", i.dpo.batch_size);
        d.read("passes", i.dpo.passes);
        d.read("lr_decay", i.dpo.lr_decay);
      });
    });
    root.nested("evaluation", [&](ObjectReader& r) {
      EvaluationConfig& e = cfg.evaluation;
      r.read("test_contexts", e.test_contexts);
      r.read("mosaic_m", e.mosaic_m);
      std::string source = e.metrics_ctr_source == CtrSourceKind::kOracle ? "oracle" : "pctr";
      r.read("metrics_ctr_source", source);
      e.metrics_ctr_source = parse_ctr_kind(source);
      r.read("samples_per_query", e.samples_per_query);
      r.read("spearman_reps", e.spearman_reps);
    });
    root.nested("verify", [&](ObjectReader& r) {
      VerifyConfig& v = cfg.verify;
      r.read("monotonicity_envs", v.monotonicity_envs);
      r.read("continuity_envs", v.continuity_envs);
      r.read("continuity_delta", v.continuity_delta);
      r.read("optimality_envs", v.optimality_envs);
      r.read("optimality_trials", v.optimality_trials);
      r.read("optimality_magnitude", v.optimality_magnitude);
      r.read("ic_envs", v.ic_envs);
      r.read("run_training", v.run_training);
    });
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  const IrpoConfig& i = cfg.irpo;
  json doc = {
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"scenario",
       {{"n_ads", s.n_ads},
        {"k_max", s.k_max},
        {"quality_levels", s.quality_levels},
        {"bid_min", s.bid_min},
        {"bid_max", s.bid_max},
        {"query_dim", s.query_dim},
        {"user_dim", s.user_dim},
        {"user_model",
         {{"bias", s.user_model.bias},
          {"w_relevance", s.user_model.w_relevance},
          {"w_quality", s.user_model.w_quality},
          {"w_crowding", s.user_model.w_crowding},
          {"w_intrinsic", s.user_model.w_intrinsic}}}}},
      {"mechanism",
       {{"beta", cfg.mechanism.beta},
        {"kappa", cfg.base_kappa},
        {"format_error_rate", cfg.format_error_rate},
        {"reward",
         {{"lambda", cfg.mechanism.reward.lambda},
          {"ad_count_penalty", cfg.mechanism.reward.ad_count_penalty},
          {"format_error_penalty", cfg.mechanism.reward.format_error_penalty}}}}},
      {"irpo",
       {{"epochs", i.epochs},
        {"train_contexts", i.train_contexts},
        {"reward_samples", i.reward_samples},
        {"pctr_learning_rate", i.pctr_learning_rate},
        {"pctr_iterations", i.pctr_iterations},
        {"misspecified_pctr", i.misspecified_pctr},
        {"accumulate_clicks", i.accumulate_clicks},
        {"dpo",
         {{"beta", i.dpo.beta},
          {"delta_th", i.dpo.delta_th},
          {"m_samples", i.dpo.m_samples},
          {"learning_rate", i.dpo.learning_rate},
          {"batch_size", i.dpo.batch_size},
          {"passes", i.dpo.passes},
          {"lr_decay", i.dpo.lr_decay}}}}},
      {"evaluation",
       {{"test_contexts", cfg.evaluation.test_contexts},
        {"mosaic_m", cfg.evaluation.mosaic_m},
        {"metrics_ctr_source", cfg.evaluation.metrics_ctr_source == CtrSourceKind::kOracle ? "oracle" : "pctr"},
        {"samples_per_query", cfg.evaluation.samples_per_query},
        {"spearman_reps", cfg.evaluation.spearman_reps}}},
      {"verify",
       {{"monotonicity_envs", cfg.verify.monotonicity_envs},
        {"continuity_envs", cfg.verify.continuity_envs},
        {"continuity_delta", cfg.verify.continuity_delta},
        {"optimality_envs", cfg.verify.optimality_envs},
        {"optimality_trials", cfg.verify.optimality_trials},
        {"optimality_magnitude", cfg.verify.optimality_magnitude},
        {"ic_envs", cfg.verify.ic_envs},
        {"run_training", cfg.verify.run_training}}},
  };
  return doc.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Where results are written does not change them.
  ExperimentConfig hashed = cfg;
  hashed.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_json(hashed)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace llm_auction
