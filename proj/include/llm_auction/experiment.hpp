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

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "llm_auction/agents.hpp"
#include "llm_auction/config.hpp"
#include "llm_auction/irpo.hpp"
#include "llm_auction/properties.hpp"

namespace llm_auction {

// Everything derived from a config that all commands share.
struct Simulation {
  ExperimentConfig config;
  ResponseSpace space;
  BasePolicy base;

  explicit Simulation(const ExperimentConfig& cfg);

  // Held-out queries with their own bid draws; deterministic in the seed.
  std::vector<AuctionContext> test_contexts() const;
};

struct MechanismMetrics {
  std::string name;
  double revenue_per_query = 0.0;  // realized pay-per-click revenue
  double reward_per_query = 0.0;   // under the configured metrics ctr source
  double reward_per_query_pctr = 0.0;
  double reward_per_query_oracle = 0.0;
  double clicks_per_query = 0.0;
  double mean_n_ads = 0.0;
};

struct ExperimentReport {
  std::vector<MechanismMetrics> mechanisms;  // pretrained, mosaic, irpo, oracle
  IrpoResult training;
  std::vector<BidClickCurve> bid_click_by_epoch;  // index 0 is the pretrained policy
  double kl_trained_to_optimal = 0.0;  // mean over test queries
  double kl_base_to_optimal = 0.0;
};

const MechanismMetrics& find_mechanism(const ExperimentReport& report, const std::string& name);

// Trains with IRPO and evaluates the four mechanisms on the test queries.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Per-epoch bid perturbation experiment over the training snapshots.
std::vector<BidClickCurve> bid_click_by_epoch(const Simulation& sim, const IrpoResult& training,
                                              std::span<const AuctionContext> contexts);

// metrics.json, history.csv, curves/bid_clicks.csv, curves/spearman.csv.
void write_experiment_outputs(const ExperimentReport& report, const ExperimentConfig& cfg,
                              const std::filesystem::path& dir);

void write_history_csv(std::ostream& out, const TrainingHistory& history);

struct CheckResult {
  std::string name;
  bool pass = false;
  bool hard = true;  // soft checks are reported but never fail the run
  double metric = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  MonotonicityResult monotonicity_curve;  // first env
  ContinuitySweep continuity_curve;       // first env at the fine delta
  std::vector<double> spearman_by_epoch;

  bool hard_pass() const;
};

struct VerifyOptions {
  // Replace the continuity environments with the step-allocation control.
  bool inject_step_control = false;
};

VerifyReport verify_properties(const ExperimentConfig& cfg, const VerifyOptions& options = {});
void write_verify_outputs(const VerifyReport& report, const ExperimentConfig& cfg,
                          const std::filesystem::path& dir);

struct EquilibriumSpec {
  struct Agent {
    AgentSpec spec;
    std::optional<double> relevance;  // overrides of the controlled ad's features
    std::optional<double> intrinsic_quality;
  };
  std::vector<Agent> agents;
  double grid_min = 0.0;
  double grid_max = 100.0;
  double grid_step = 1.0;
  int max_iters = 50;
  double epsilon_threshold = 5.0;  // soft target reported next to the final epsilon
};

EquilibriumSpec parse_equilibrium_spec(const std::string& json_text);
EquilibriumSpec load_equilibrium_spec(const std::string& path);

// Agent k controls ad k of the first test query; allocation is the exact
// optimum under the ground-truth user model.
DynamicsResult run_equilibrium(const ExperimentConfig& cfg, const EquilibriumSpec& spec);
void write_equilibrium_outputs(const DynamicsResult& result, const EquilibriumSpec& spec,
                               const ExperimentConfig& cfg, const std::filesystem::path& dir);

// Samples responses from the pretrained policy on the test queries and logs
// the simulated clicks (the click log CSV format).
ClickDataset simulate_clicks(const ExperimentConfig& cfg, int samples_per_query);

}  // namespace llm_auction
