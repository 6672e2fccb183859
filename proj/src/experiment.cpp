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

#include "llm_auction/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace llm_auction {

using nlohmann::json;

namespace {

enum Stream : std::uint64_t {
  kTestContexts = 101,
  kEvaluation = 102,
  kBidClicks = 103,
  kVerifyEnvs = 104,
  kVerifyAgents = 105,
  kOptimality = 106,
  kSimulate = 107,
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json provenance(const ExperimentConfig& cfg) {
  return {{"seed", cfg.seed}, {"config_hash", config_hash(cfg)}, {"code_version", kCodeVersion}};
}

}  // namespace

Simulation::Simulation(const ExperimentConfig& cfg)
    : config(cfg),
      space(enumerate_responses(cfg.scenario.n_ads, cfg.scenario.k_max, cfg.scenario.quality_levels)),
      base(make_base_policy(space, cfg.base_kappa, cfg.format_error_rate)) {
  config.validate();
}

std::vector<AuctionContext> Simulation::test_contexts() const {
  std::vector<AuctionContext> out;
  out.reserve(static_cast<std::size_t>(config.evaluation.test_contexts));
  for (int k = 0; k < config.evaluation.test_contexts; ++k) {
    Rng rng = make_rng(config.seed, {kTestContexts, static_cast<std::uint64_t>(k)});
    out.push_back(sample_context(rng, config.scenario));
  }
  return out;
}

const MechanismMetrics& find_mechanism(const ExperimentReport& report, const std::string& name) {
  for (const MechanismMetrics& m : report.mechanisms) {
    if (m.name == name) return m;
  }
  throw std::invalid_argument("no mechanism named " + name);
}

std::vector<BidClickCurve> bid_click_by_epoch(const Simulation& sim, const IrpoResult& training,
                                              std::span<const AuctionContext> contexts) {
  const std::vector<double> grid = {1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<BidClickCurve> curves;
  for (const PolicyParams& params : training.snapshots) {
    auto allocate = [&](const AuctionContext& ctx) { return policy_distribution(params, ctx, sim.space, sim.base); };
    curves.push_back(bid_click_experiment(allocate, contexts, sim.space, sim.config.scenario.user_model,
                                          sim.base.format_error_rate, grid, sim.config.evaluation.spearman_reps,
                                          derive_seed(sim.config.seed, {kBidClicks})));
  }
  return curves;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const Simulation sim(cfg);
  const std::vector<AuctionContext> test = sim.test_contexts();
  ExperimentReport report;
  report.training = run_irpo(cfg.scenario, sim.space, sim.base, cfg.mechanism, cfg.irpo, cfg.seed, test);

  const UserModelParams& user = cfg.scenario.user_model;
  const CtrSource oracle = CtrSource::oracle(user);
  const CtrSource learned = CtrSource::predicted(report.training.pctr);
  const RewardConfig& reward = cfg.mechanism.reward;
  const PolicyParams& trained = report.training.policy;

  const std::vector<std::string> names = {"pretrained", "mosaic", "irpo", "oracle"};
  for (std::size_t m = 0; m < names.size(); ++m) {
    MechanismMetrics row;
    row.name = names[m];
    for (std::size_t k = 0; k < test.size(); ++k) {
      const AuctionContext& ctx = test[k];
      // Shared across mechanisms (common random numbers).
      Rng rng = make_rng(cfg.seed, {kEvaluation, k});
      PolicyDistribution pi = sim.base.probs;
      if (names[m] == "irpo") pi = policy_distribution(trained, ctx, sim.space, sim.base);
      if (names[m] == "oracle") pi = optimal_policy(ctx, sim.space, sim.base, oracle, cfg.mechanism);
      for (int s = 0; s < cfg.evaluation.samples_per_query; ++s) {
        const ResponseOutcome y =
            names[m] == "mosaic"
                ? mosaic_select(sim.base, ctx, sim.space, learned, reward, cfg.evaluation.mosaic_m, rng)
                : generate_response(rng, sim.space, pi, sim.base.format_error_rate);
        const ClickRecord clicks = sample_clicks(rng, user, ctx, y);
        for (double p : realized_payment(clicks, ctx.bids)) row.revenue_per_query += p;
        row.reward_per_query_pctr += response_reward(ctx, y, learned, reward);
        row.reward_per_query_oracle += response_reward(ctx, y, oracle, reward);
        row.clicks_per_query += clicks.total();
        row.mean_n_ads += y.n_ads();
      }
    }
    const double n = static_cast<double>(test.size()) * cfg.evaluation.samples_per_query;
    row.revenue_per_query /= n;
    row.reward_per_query_pctr /= n;
    row.reward_per_query_oracle /= n;
    row.clicks_per_query /= n;
    row.mean_n_ads /= n;
    row.reward_per_query = cfg.evaluation.metrics_ctr_source == CtrSourceKind::kOracle ? row.reward_per_query_oracle
                                                                                      : row.reward_per_query_pctr;
    report.mechanisms.push_back(row);
  }

  for (const AuctionContext& ctx : test) {
    report.kl_trained_to_optimal += kl_to_optimal(policy_distribution(trained, ctx, sim.space, sim.base), ctx,
                                                  sim.space, sim.base, oracle, cfg.mechanism);
    report.kl_base_to_optimal += kl_to_optimal(sim.base.probs, ctx, sim.space, sim.base, oracle, cfg.mechanism);
  }
  report.kl_trained_to_optimal /= static_cast<double>(test.size());
  report.kl_base_to_optimal /= static_cast<double>(test.size());

  report.bid_click_by_epoch = bid_click_by_epoch(sim, report.training, test);
  return report;
}

void write_history_csv(std::ostream& out, const TrainingHistory& history) {
  out << "epoch,bce,dpo_loss,oracle_reward_per_query,revenue_per_query,unbiasedness_gap\n";
  for (const EpochRecord& r : history.epochs) {
    out << r.epoch << ',' << num(r.bce) << ',' << num(r.dpo_loss) << ',' << num(r.oracle_reward_per_query) << ','
        << num(r.revenue_per_query) << ',' << num(r.unbiasedness_gap) << '\n';
  }
}

void write_experiment_outputs(const ExperimentReport& report, const ExperimentConfig& cfg,
                              const std::filesystem::path& dir) {
  const json prov = provenance(cfg);
  json mechanisms = json::array();
  for (const MechanismMetrics& m : report.mechanisms) {
    json row = {{"name", m.name},
                {"revenue_per_query", m.revenue_per_query},
                {"reward_per_query", m.reward_per_query},
                {"reward_per_query_pctr", m.reward_per_query_pctr},
                {"reward_per_query_oracle", m.reward_per_query_oracle},
                {"clicks_per_query", m.clicks_per_query},
                {"mean_n_ads", m.mean_n_ads}};
    row.update(prov);
    mechanisms.push_back(row);
  }
  json spearman = json::array();
  for (const BidClickCurve& c : report.bid_click_by_epoch) spearman.push_back(c.spearman);
  json doc = prov;
  doc["mechanisms"] = mechanisms;
  doc["kl"] = {{"trained_to_optimal", report.kl_trained_to_optimal},
               {"base_to_optimal", report.kl_base_to_optimal}};
  doc["spearman_by_epoch"] = spearman;
  doc["pctr"] = {{"version", report.training.pctr.version}, {"weights", report.training.pctr.weights}};
  doc["policy_theta"] = report.training.policy.theta;
  {
    std::ofstream out = open_output(dir / "metrics.json");
    out << doc.dump(2) << '\n';
  }
  {
    std::ofstream out = open_output(dir / "history.csv");
    write_history_csv(out, report.training.history);
  }
  {
    std::ofstream out = open_output(dir / "curves" / "bid_clicks.csv");
    out << "epoch,bid,clicks\n";
    for (std::size_t e = 0; e < report.bid_click_by_epoch.size(); ++e) {
      const BidClickCurve& c = report.bid_click_by_epoch[e];
      for (std::size_t g = 0; g < c.bids.size(); ++g) out << e << ',' << num(c.bids[g]) << ',' << num(c.clicks[g]) << '\n';
    }
  }
  {
    std::ofstream out = open_output(dir / "curves" / "spearman.csv");
    out << "epoch,spearman\n";
    for (std::size_t e = 0; e < report.bid_click_by_epoch.size(); ++e) {
      out << e << ',' << num(report.bid_click_by_epoch[e].spearman) << '\n';
    }
  }
  {
    std::ofstream out = open_output(dir / "pctr.json");
    out << json{{"version", report.training.pctr.version}, {"weights", report.training.pctr.weights}}.dump(2) << '\n';
  }
}

bool VerifyReport::hard_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.hard || c.pass; });
}

namespace {

struct VerifyEnv {
  AuctionContext context;
  int focal = 0;
};

VerifyEnv verify_env(const ExperimentConfig& cfg, int e) {
  Rng rng = make_rng(cfg.seed, {kVerifyEnvs, static_cast<std::uint64_t>(e)});
  VerifyEnv v;
  v.context = sample_context(rng, cfg.scenario);
  v.focal = std::min(static_cast<int>(uniform01(rng) * cfg.scenario.n_ads), cfg.scenario.n_ads - 1);
  return v;
}

}  // namespace

VerifyReport verify_properties(const ExperimentConfig& cfg, const VerifyOptions& options) {
  const Simulation sim(cfg);
  const VerifyConfig& vc = cfg.verify;
  const CtrSource oracle = CtrSource::oracle(cfg.scenario.user_model);
  auto optimal_env = [&](const VerifyEnv& v) {
    return make_optimal_env(v.context, v.focal, sim.space, sim.base, oracle, cfg.mechanism);
  };
  VerifyReport report;

  {
    const std::vector<double> grid = make_grid(1.0, 100.0, 1.0);
    CheckResult c{"monotonicity", true, true, 0.0, ""};
    int violations = 0;
    for (int e = 0; e < vc.monotonicity_envs; ++e) {
      MonotonicityResult r = monotonicity_sweep(optimal_env(verify_env(cfg, e)), grid);
      violations += r.violations;
      c.metric = std::max(c.metric, r.max_violation);
      if (e == 0) report.monotonicity_curve = std::move(r);
    }
    c.pass = violations == 0;
    c.detail = std::to_string(vc.monotonicity_envs) + " envs, " + std::to_string(violations) +
               " violations, max decrease " + num(c.metric);
    report.checks.push_back(c);
  }

  {
    CheckResult c{"continuity_refinement", true, true, 0.0, ""};
    double lo = 1.0, hi = 0.0;
    int failed = 0, flat = 0;
    for (int e = 0; e < vc.continuity_envs; ++e) {
      const VerifyEnv v = verify_env(cfg, e);
      const AuctionEnv env = options.inject_step_control ? make_slot_env(v.context, v.focal, sim.space, oracle)
                                                         : optimal_env(v);
      const RefinementCheck r = continuity_refinement(env, 1.0, 100.0, vc.continuity_delta);
      if (!r.pass) ++failed;
      if (r.coarse_jump <= 1e-15) {
        ++flat;
      } else {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
      }
      if (e == 0) report.continuity_curve = continuity_sweep(env, 1.0, 100.0, vc.continuity_delta / 2.0);
    }
    c.pass = failed == 0;
    c.metric = hi;
    c.detail = std::to_string(vc.continuity_envs) + " envs" + (options.inject_step_control ? " (step control)" : "") +
               ", jump ratio in [" + num(lo) + ", " + num(hi) + "], " + std::to_string(flat) + " flat, " +
               std::to_string(failed) + " failed";
    report.checks.push_back(c);
  }

  {
    // The detector must reject a discrete slot auction.
    CheckResult c{"negative_control_detected", true, true, 0.0, ""};
    int detected = 0, tried = 0;
    for (int e = 0; e < std::max(1, std::min(vc.continuity_envs, 10)); ++e) {
      const VerifyEnv v = verify_env(cfg, e);
      const AuctionEnv env = make_slot_env(v.context, v.focal, sim.space, oracle);
      const RefinementCheck r = continuity_refinement(env, 1.0, 100.0, vc.continuity_delta);
      // A slot auction the focal ad never wins (or always wins) is flat on the
      // sweep and carries no signal.
      if (r.coarse_jump == 0.0) continue;
      ++tried;
      if (!r.pass) ++detected;
    }
    c.pass = tried > 0 && detected == tried;
    c.metric = tried;
    c.detail = std::to_string(detected) + "/" + std::to_string(tried) + " step allocations rejected";
    report.checks.push_back(c);
  }

  {
    CheckResult c{"optimality", true, true, -std::numeric_limits<double>::infinity(), ""};
    double residual = 0.0;
    for (int e = 0; e < vc.optimality_envs; ++e) {
      const VerifyEnv v = verify_env(cfg, e);
      Rng rng = make_rng(cfg.seed, {kOptimality, static_cast<std::uint64_t>(e)});
      const OptimalityCheck r = optimality_perturbation_test(v.context, sim.space, sim.base, oracle, cfg.mechanism,
                                                             vc.optimality_trials, vc.optimality_magnitude, rng);
      c.pass = c.pass && r.pass;
      c.metric = std::max(c.metric, r.worst_gap);
      residual = std::max(residual, r.log_partition_residual);
    }
    if (vc.optimality_envs == 0) c.metric = 0.0;
    c.detail = "worst gap " + num(c.metric) + ", log-partition residual " + num(residual);
    report.checks.push_back(c);
  }

  {
    CheckResult vm{"vm_truthfulness", true, true, 0.0, ""};
    CheckResult ir{"individual_rationality", true, true, 0.0, ""};
    const std::vector<double> grid = make_grid(0.0, 100.0, 1.0);
    int mismatches = 0;
    for (int e = 0; e < vc.ic_envs; ++e) {
      const VerifyEnv v = verify_env(cfg, e);
      const AuctionEnv env = optimal_env(v);
      Rng rng = make_rng(cfg.seed, {kVerifyAgents, static_cast<std::uint64_t>(e)});
      AgentSpec agent{BidderKind::kValue, 10.0 + 90.0 * uniform01(rng), 1.0 + 2.0 * uniform01(rng)};
      const double target = std::floor(agent.truthful_bid());
      const BestResponse br = best_response(env, agent, grid);
      const double regret = ic_regret(env, agent, grid);
      if (br.bid != target || regret > kMonotonicityTolerance) ++mismatches;
      vm.metric = std::max(vm.metric, regret);
      // IR: at the truthful bid, payment <= value for both bidder models.
      const double rate = env.itctr(agent.truthful_bid());
      if (agent.truthful_bid() * rate > agent.value * rate) ir.pass = false;
      const AgentSpec um{BidderKind::kUtility, agent.value, 1.0};
      if (um_utility(env, um, um.value) != 0.0 || um_utility(env, um, 0.0) < 0.0) ir.pass = false;
    }
    vm.pass = mismatches == 0;
    vm.detail = std::to_string(vc.ic_envs) + " envs, " + std::to_string(mismatches) +
                " best responses off v/roi, max regret " + num(vm.metric);
    ir.detail = ir.pass ? "payment <= value at truthful bids" : "IR violated";
    report.checks.push_back(vm);
    report.checks.push_back(ir);
  }

  if (vc.run_training) {
    const std::vector<AuctionContext> test = sim.test_contexts();
    const IrpoResult training = run_irpo(cfg.scenario, sim.space, sim.base, cfg.mechanism, cfg.irpo, cfg.seed, test);
    for (const BidClickCurve& curve : bid_click_by_epoch(sim, training, test)) {
      report.spearman_by_epoch.push_back(curve.spearman);
    }
    CheckResult c{"bid_click_correlation", report.spearman_by_epoch.back() >= 0.9, false,
                  report.spearman_by_epoch.back(), ""};
    c.detail = "spearman by epoch:";
    for (double s : report.spearman_by_epoch) c.detail += " " + num(s);
    report.checks.push_back(c);
  }
  return report;
}

void write_verify_outputs(const VerifyReport& report, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  json checks = json::array();
  for (const CheckResult& c : report.checks) {
    json row = {{"name", c.name}, {"pass", c.pass}, {"hard", c.hard}, {"metric", c.metric}, {"detail", c.detail}};
    row.update(provenance(cfg));
    checks.push_back(row);
  }
  json doc = provenance(cfg);
  doc["pass"] = report.hard_pass();
  doc["checks"] = checks;
  doc["spearman_by_epoch"] = report.spearman_by_epoch;
  {
    std::ofstream out = open_output(dir / "verify.json");
    out << doc.dump(2) << '\n';
  }
  {
    std::ofstream out = open_output(dir / "curves" / "monotonicity.csv");
    out << "bid,itctr\n";
    const MonotonicityResult& m = report.monotonicity_curve;
    for (std::size_t i = 0; i < m.bids.size(); ++i) out << num(m.bids[i]) << ',' << num(m.itctr[i]) << '\n';
  }
  {
    std::ofstream out = open_output(dir / "curves" / "continuity.csv");
    out << "bid,jump\n";
    const ContinuitySweep& c = report.continuity_curve;
    for (std::size_t i = 0; i < c.jumps.size(); ++i) out << num(c.bids[i]) << ',' << num(c.jumps[i]) << '\n';
  }
}

EquilibriumSpec parse_equilibrium_spec(const std::string& json_text) {
  EquilibriumSpec spec;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object() || !doc.contains("agents") || !doc["agents"].is_array()) {
      throw ConfigError("agents file must be an object with an 'agents' array");
    }
    for (const json& a : doc["agents"]) {
      EquilibriumSpec::Agent agent;
      agent.spec.kind = parse_bidder_kind(a.at("kind").get<std::string>());
      agent.spec.value = a.at("value").get<double>();
      agent.spec.roi = a.value("roi", 1.0);
      if (a.contains("relevance")) agent.relevance = a["relevance"].get<double>();
      if (a.contains("intrinsic_quality")) agent.intrinsic_quality = a["intrinsic_quality"].get<double>();
      agent.spec.validate();
      spec.agents.push_back(agent);
    }
    if (doc.contains("grid")) {
      const json& g = doc["grid"];
      spec.grid_min = g.value("min", spec.grid_min);
      spec.grid_max = g.value("max", spec.grid_max);
      spec.grid_step = g.value("step", spec.grid_step);
    }
    spec.max_iters = doc.value("max_iters", spec.max_iters);
    spec.epsilon_threshold = doc.value("epsilon_threshold", spec.epsilon_threshold);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed agents file: ") + e.what());
  }
  if (spec.agents.empty()) throw ConfigError("agents file lists no agents");
  if (!(spec.grid_step > 0.0) || spec.grid_max < spec.grid_min || spec.grid_min < 0.0) {
    throw ConfigError("agents file grid is invalid");
  }
  if (spec.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  return spec;
}

EquilibriumSpec load_equilibrium_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open agents file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_equilibrium_spec(buf.str());
}

DynamicsResult run_equilibrium(const ExperimentConfig& cfg, const EquilibriumSpec& spec) {
  const Simulation sim(cfg);
  if (spec.agents.size() > static_cast<std::size_t>(cfg.scenario.n_ads)) {
    throw ConfigError("more agents than candidate ads");
  }
  Rng rng = make_rng(cfg.seed, {kTestContexts, 0});
  AuctionContext ctx = sample_context(rng, cfg.scenario);
  std::vector<AgentSpec> agents;
  for (std::size_t k = 0; k < spec.agents.size(); ++k) {
    const EquilibriumSpec::Agent& a = spec.agents[k];
    if (a.relevance) ctx.ads[k].relevance = *a.relevance;
    if (a.intrinsic_quality) ctx.ads[k].intrinsic_quality = *a.intrinsic_quality;
    agents.push_back(a.spec);
  }
  try {
    ctx.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const CtrSource oracle = CtrSource::oracle(cfg.scenario.user_model);
  EnvFactory factory = [&](const AuctionContext& c, int focal) {
    return make_optimal_env(c, focal, sim.space, sim.base, oracle, cfg.mechanism);
  };
  const std::vector<double> grid = make_grid(spec.grid_min, spec.grid_max, spec.grid_step);
  return best_response_dynamics(ctx, factory, agents, grid, spec.max_iters);
}

void write_equilibrium_outputs(const DynamicsResult& result, const EquilibriumSpec& spec,
                               const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  {
    std::ofstream out = open_output(dir / "equilibrium.csv");
    out << "iter,agent,bid,utility,regret\n";
    for (const DynamicsRow& r : result.trace) {
      out << r.iter << ',' << r.agent << ',' << num(r.bid) << ',' << num(r.utility) << ',' << num(r.regret) << '\n';
    }
  }
  json doc = provenance(cfg);
  doc["bids"] = result.bids;
  doc["epsilon"] = result.epsilon;
  doc["converged"] = result.converged;
  doc["rounds"] = result.rounds;
  doc["epsilon_threshold"] = spec.epsilon_threshold;
  doc["within_threshold"] = result.epsilon <= spec.epsilon_threshold;
  std::ofstream out = open_output(dir / "equilibrium.json");
  out << doc.dump(2) << '\n';
}

ClickDataset simulate_clicks(const ExperimentConfig& cfg, int samples_per_query) {
  const Simulation sim(cfg);
  ClickDataset data;
  const std::vector<AuctionContext> test = sim.test_contexts();
  for (std::size_t k = 0; k < test.size(); ++k) {
    Rng rng = make_rng(cfg.seed, {kSimulate, k});
    const std::size_t id = data.add_context(test[k]);
    for (int s = 0; s < samples_per_query; ++s) {
      const ResponseOutcome y = generate_response(rng, sim.space, sim.base.probs, sim.base.format_error_rate);
      data.add_impression(id, y, sample_clicks(rng, cfg.scenario.user_model, test[k], y));
    }
  }
  return data;
}

}  // namespace llm_auction
