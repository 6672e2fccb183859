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
#include <stdexcept>
#include <string>

#include "llm_auction/irpo.hpp"
#include "llm_auction/mechanism.hpp"
#include "llm_auction/user_model.hpp"

namespace llm_auction {

inline constexpr const char* kCodeVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CtrSourceKind { kOracle, kPctr };

struct EvaluationConfig {
  int test_contexts = 200;
  int mosaic_m = 20;
  CtrSourceKind metrics_ctr_source = CtrSourceKind::kOracle;
  int samples_per_query = 5;  // response + click draws per test query
  int spearman_reps = 5;      // draws per (query, bid) in the bid perturbation experiment
};

struct VerifyConfig {
  int monotonicity_envs = 200;
  int continuity_envs = 50;
  double continuity_delta = 0.02;
  int optimality_envs = 200;
  int optimality_trials = 1000;
  double optimality_magnitude = 0.5;
  int ic_envs = 100;
  bool run_training = true;  // report the per-epoch bid/click correlation
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  ScenarioConfig scenario;
  MechanismConfig mechanism;
  double base_kappa = 1.0;
  double format_error_rate = 0.02;
  IrpoConfig irpo;
  EvaluationConfig evaluation;
  VerifyConfig verify;
  std::string output_dir = "out";

  void validate() const;  // throws ConfigError
};

// Parses a JSON document. "seed" is required; other missing keys keep their
// defaults. Unknown keys and type mismatches raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

// FNV-1a of the canonical JSON form without output_dir, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace llm_auction
