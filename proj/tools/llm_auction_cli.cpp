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

#include <filesystem>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "llm_auction/experiment.hpp"

namespace {

using namespace llm_auction;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;
constexpr int kExitProperty = 4;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "experiment config (JSON); defaults when omitted");
  cmd->add_option("-s,--seed", opts.seed, "override the config seed");
  cmd->add_option("-o,--output", opts.output, "override output_dir");
}

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig cfg = opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.output.empty()) cfg.output_dir = opts.output;
  cfg.validate();
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

nlohmann::json provenance(const ExperimentConfig& cfg) {
  return {{"seed", cfg.seed}, {"config_hash", config_hash(cfg)}, {"code_version", kCodeVersion}};
}

int cmd_simulate(const CommonOptions& opts, int samples) {
  const ExperimentConfig cfg = resolve_config(opts);
  const ClickDataset data = simulate_clicks(cfg, samples);
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "clicks.csv", std::ios::binary);
    write_click_csv(out, data);
  }
  std::size_t clicks = 0;
  for (const ClickRow& r : data.rows) clicks += r.click ? 1 : 0;
  nlohmann::json doc = provenance(cfg);
  doc["queries"] = data.contexts.size();
  doc["impressions"] = data.rows.size();
  doc["clicks"] = clicks;
  write_text(dir / "simulate.json", doc.dump(2) + "\n");
  std::cout << "simulate: " << data.rows.size() << " ad impressions, " << clicks << " clicks -> "
            << (dir / "clicks.csv").string() << "\n";
  return kExitOk;
}

int cmd_train(const CommonOptions& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const Simulation sim(cfg);
  const std::vector<AuctionContext> monitor = sim.test_contexts();
  const IrpoResult result =
      run_irpo(cfg.scenario, sim.space, sim.base, cfg.mechanism, cfg.irpo, cfg.seed, monitor);
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "history.csv", std::ios::binary);
    write_history_csv(out, result.history);
  }
  nlohmann::json doc = provenance(cfg);
  doc["pctr"] = {{"version", result.pctr.version}, {"weights", result.pctr.weights}};
  doc["policy_theta"] = result.policy.theta;
  write_text(dir / "model.json", doc.dump(2) + "\n");
  for (const EpochRecord& r : result.history.epochs) {
    std::cout << "epoch " << r.epoch << ": bce " << r.bce << ", dpo " << r.dpo_loss << ", oracle reward/query "
              << r.oracle_reward_per_query << ", revenue/query " << r.revenue_per_query << ", gap "
              << r.unbiasedness_gap << "\n";
  }
  return kExitOk;
}

int cmd_compare(const CommonOptions& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const ExperimentReport report = run_experiment(cfg);
  write_experiment_outputs(report, cfg, cfg.output_dir);
  std::cout << "mechanism    revenue/query  reward/query  clicks/query  mean N_ad\n";
  for (const MechanismMetrics& m : report.mechanisms) {
    std::printf("%-12s %13.3f %13.3f %13.3f %10.3f\n", m.name.c_str(), m.revenue_per_query, m.reward_per_query,
                m.clicks_per_query, m.mean_n_ads);
  }
  std::printf("KL(trained || optimal) = %.4f, KL(pretrained || optimal) = %.4f\n", report.kl_trained_to_optimal,
              report.kl_base_to_optimal);
  return kExitOk;
}

int cmd_verify(const CommonOptions& opts, bool inject_step_control) {
  const ExperimentConfig cfg = resolve_config(opts);
  const VerifyReport report = verify_properties(cfg, VerifyOptions{inject_step_control});
  write_verify_outputs(report, cfg, cfg.output_dir);
  for (const CheckResult& c : report.checks) {
    std::cout << (c.pass ? "PASS" : "FAIL") << (c.hard ? "" : " (soft)") << "  " << c.name << ": " << c.detail
              << "\n";
  }
  return report.hard_pass() ? kExitOk : kExitProperty;
}

int cmd_equilibrium(const CommonOptions& opts, const std::string& agents_path) {
  const ExperimentConfig cfg = resolve_config(opts);
  const EquilibriumSpec spec = load_equilibrium_spec(agents_path);
  const DynamicsResult result = run_equilibrium(cfg, spec);
  write_equilibrium_outputs(result, spec, cfg, cfg.output_dir);
  std::cout << "bids:";
  for (double b : result.bids) std::cout << " " << b;
  std::cout << "\nepsilon " << result.epsilon << " (threshold " << spec.epsilon_threshold << "), "
            << (result.converged ? "converged" : "not converged") << " after " << result.rounds << " rounds\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for LLM-native ad auctions: training, comparison and property checks"};
  app.require_subcommand(1);

  CommonOptions opts;
  int samples = 10;
  bool inject_step_control = false;
  std::string agents_path;

  CLI::App* simulate = app.add_subcommand("simulate", "log simulated clicks under the pretrained policy");
  add_common(simulate, opts);
  simulate->add_option("--samples", samples, "responses per test query")->check(CLI::PositiveNumber);

  CLI::App* train = app.add_subcommand("train", "run IRPO and write the training history");
  add_common(train, opts);

  CLI::App* verify = app.add_subcommand("verify", "run the mechanism property suite");
  add_common(verify, opts);
  verify->add_flag("--inject-step-control", inject_step_control,
                   "swap the continuity environments for a discrete slot auction");

  CLI::App* equilibrium = app.add_subcommand("equilibrium", "best-response dynamics between bidding agents");
  add_common(equilibrium, opts);
  equilibrium->add_option("-a,--agents", agents_path, "agents file (JSON)")->required();

  CLI::App* compare = app.add_subcommand("compare", "train and compare pretrained, MOSAIC, IRPO and oracle");
  add_common(compare, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(opts, samples);
    if (*train) return cmd_train(opts);
    if (*verify) return cmd_verify(opts, inject_step_control);
    if (*equilibrium) return cmd_equilibrium(opts, agents_path);
    return cmd_compare(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
