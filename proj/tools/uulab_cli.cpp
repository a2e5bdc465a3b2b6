#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "uulab/harness.hpp"

namespace fs = std::filesystem;
using namespace uulab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitConfig = 2;

/// Relative paths land under $UULAB_OUT when it is set.
fs::path under_output_root(const fs::path& p) {
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("UULAB_OUT"); root && *root) return fs::path(root) / p;
  return p;
}

struct GenFlags {
  bool dense = false;
  bool constant_reward = false;
  bool homeland = false;
  std::size_t S = 8, A = 3, H = 5, T = 500;
  double delta = 0.1;
  double cap = 0.3;
  std::uint64_t seed = 0;
  bool stationary = false;
};

void add_gen_flags(CLI::App* cmd, GenFlags& g, bool required_kind) {
  auto* grp = cmd->add_option_group("kind");
  grp->add_flag("--dense", g.dense, "random dense transitions, uniform rewards");
  grp->add_flag("--constant-reward", g.constant_reward, "all rewards 1, uniform transitions");
  grp->add_flag("--homeland", g.homeland, "dense transitions, home state pays 1");
  if (required_kind) {
    grp->require_option(1);
  } else {
    grp->require_option(0, 1);
  }
  cmd->add_option("--S", g.S, "number of states")->check(CLI::PositiveNumber);
  cmd->add_option("--A", g.A, "number of actions")->check(CLI::PositiveNumber);
  cmd->add_option("--H", g.H, "horizon")->check(CLI::PositiveNumber);
  cmd->add_option("--T", g.T, "planned episodes")->check(CLI::PositiveNumber);
  cmd->add_option("--delta", g.delta, "confidence level")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--cap", g.cap, "reward cap off the home state (--homeland)");
  cmd->add_flag("--stationary", g.stationary, "one transition block shared by all steps");
}

EnvGenerator to_generator(const GenFlags& g) {
  EnvGenerator gen;
  gen.kind = g.constant_reward ? EnvKind::constant_reward
             : g.homeland      ? EnvKind::homeland
                               : EnvKind::dense;
  gen.num_states = g.S;
  gen.num_actions = g.A;
  gen.horizon = g.H;
  gen.episodes = g.T;
  gen.delta = g.delta;
  gen.reward_cap = g.cap;
  gen.stationary = g.stationary;
  return gen;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, dots));
      const auto hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw ConfigError("seed range " + text + " is empty");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
      return out;
    }
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) out.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse seed list '" + text + "'");
  }
  return out;
}

Mode parse_mode(const std::string& s) { return s == "full" ? Mode::full_awareness : Mode::growing_awareness; }

VarianceProxy parse_variance(const std::string& s) {
  return s == "weighted" ? VarianceProxy::weighted : VarianceProxy::empirical;
}

int cmd_gen_env(const GenFlags& g, const std::string& out) {
  const EnvSpec env = to_generator(g).make(g.seed);
  const fs::path path = under_output_root(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_env(env, path);
  const auto rep = check_assumption_transitions(env);
  std::printf("wrote %s\n", path.string().c_str());
  std::printf("theta=%.6g min_prob=%.6g assumption=%s\n", rep.theta, rep.min_prob,
              rep.holds ? "holds" : "violated");
  const auto homeland = check_homeland(env, optimal_values(env), env.initial_aware);
  std::printf("homeland(S0)=%s\n", homeland.holds ? "holds" : "violated");
  return kExitOk;
}

struct RunFlags {
  std::string env;
  std::string out;
  std::string mode = "growing";
  std::string variance = "empirical";
  std::uint64_t seed = 0;
  std::size_t T = 0;
  bool visit_log = false;
  std::size_t audit_every = 1;
  bool confidence = false;
};

int cmd_run(const RunFlags& f) {
  const fs::path env_path = f.env;
  const EnvSpec env = load_env(env_path);
  const ValueTables optimal = cached_optimal_values(env_path, env);
  RunConfig cfg;
  cfg.mode = parse_mode(f.mode);
  cfg.seed = f.seed;
  cfg.episodes = f.T;
  cfg.variance = parse_variance(f.variance);
  cfg.visit_log = f.visit_log;
  cfg.audit_every = f.audit_every;
  cfg.record_confidence = f.confidence;
  const RunResult result = run_experiment(env, optimal, cfg);

  fs::path dir = f.out;
  if (dir.empty()) {
    dir = fs::path("runs") / (env_path.stem().string() + "-" + f.mode + "-s" + std::to_string(f.seed));
  }
  dir = under_output_root(dir);
  write_run_dir(result, env, dir);
  const auto& s = result.summary;
  std::printf("run %s\n", dir.string().c_str());
  std::printf("episodes=%zu regret=%.6f aware=%zu/%zu max_moment=%zu optimism_violations=%zu\n",
              s.episodes, s.final_regret, s.final_aware, env.num_states, s.moments.max_moment,
              s.optimism_violation_episodes);
  return kExitOk;
}

int cmd_audit(const std::string& dir) {
  const RunArtifacts art = load_run_dir(under_output_root(dir));
  const AuditReport report = audit_run(art);
  std::fputs(report.to_text().c_str(), stdout);
  return report.ok() ? kExitOk : kExitCheck;
}

struct SweepFlags {
  GenFlags gen;
  std::string env;
  std::string seeds = "1..10";
  std::string out;
  std::string variance = "empirical";
  int threads = 1;
  bool baseline = false;
  bool serial = false;
  bool t_given = false;  // --T overrides a fixed env's T
  std::size_t audit_every = 1;
};

int cmd_sweep(const SweepFlags& f) {
  SweepConfig cfg;
  if (!f.env.empty()) {
    cfg.fixed_env = load_env(f.env);
  } else {
    cfg.generator = to_generator(f.gen);
  }
  cfg.seeds = parse_seeds(f.seeds);
  cfg.baseline = f.baseline;
  cfg.threads = f.threads;
  if (cfg.fixed_env && f.t_given) cfg.run.episodes = f.gen.T;
  cfg.run.audit_every = f.audit_every;
  cfg.run.variance = parse_variance(f.variance);
  const SweepReport report = f.serial ? run_sweep_serial(cfg) : run_sweep(cfg);
  const std::string text = sweep_to_json(report);
  if (!f.out.empty()) {
    const fs::path path = under_output_root(f.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
    std::printf("wrote %s\n", path.string().c_str());
  }
  std::printf("runs=%zu mean_regret=%.6f", report.outcomes.size(), report.mean_regret);
  if (f.baseline) {
    std::printf(" baseline_regret=%.6f ratio=%.4f", report.mean_baseline_regret, report.regret_ratio);
  }
  std::printf(" moment_exceed=%.4f optimism_violation=%.4f homeland=%.4f\n",
              report.moment_exceed_fraction, report.optimism_violation_fraction,
              report.homeland_fraction);
  if (!report.failed_seeds.empty()) {
    std::fprintf(stderr, "sweep failed for %zu seed(s):", report.failed_seeds.size());
    for (auto s : report.failed_seeds) std::fprintf(stderr, " %llu", static_cast<unsigned long long>(s));
    std::fputc('\n', stderr);
    for (const auto& o : report.outcomes) {
      if (!o.error.empty()) {
        std::fprintf(stderr, "  seed %llu: %s\n", static_cast<unsigned long long>(o.seed), o.error.c_str());
      }
    }
    return kExitCheck;
  }
  return kExitOk;
}

int cmd_report(const std::string& target) {
  const fs::path path = under_output_root(target);
  if (fs::is_directory(path)) {
    std::ifstream csv(path / "records.csv");
    if (!csv) throw ConfigError("no records.csv in " + path.string());
    std::string line;
    std::getline(csv, line);
    std::vector<double> cum;
    std::size_t violations = 0, audited = 0, last_aware = 0;
    while (std::getline(csv, line)) {
      std::stringstream row(line);
      std::vector<std::string> cells;
      std::string cell;
      while (std::getline(row, cell, ',')) cells.push_back(cell);
      if (cells.size() < 8) throw ParseError("malformed row in records.csv: " + line);
      cum.push_back(std::stod(cells[4]));
      last_aware = std::stoul(cells[5]);
      if (cells[7] != "na") {
        ++audited;
        if (cells[7] == "0") ++violations;
      }
    }
    if (cum.empty()) throw ParseError("records.csv has no episodes");
    const std::size_t T = cum.size();
    const std::size_t half = T / 2;
    std::printf("episodes=%zu regret=%.6f per_episode=%.6f", T, cum.back(), cum.back() / static_cast<double>(T));
    if (half > 0) std::printf(" first_half_per_episode=%.6f", cum[half - 1] / static_cast<double>(half));
    std::printf("\nfinal_aware=%zu audited=%zu optimism_violation_episodes=%zu\n", last_aware, audited,
                violations);
    return kExitOk;
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("runs")) throw ParseError(path.string() + " is not a sweep report");
  std::printf("runs=%zu failed=%zu mean_regret=%.6f baseline=%.6f ratio=%.4f\n", j["runs"].size(),
              j["failed_seeds"].size(), j["mean_regret"].get<double>(),
              j["mean_baseline_regret"].get<double>(), j["regret_ratio"].get<double>());
  std::printf("moment_exceed=%.4f optimism_violation=%.4f homeland=%.4f\n",
              j["moment_exceed_fraction"].get<double>(), j["optimism_violation_fraction"].get<double>(),
              j["homeland_fraction"].get<double>());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uulab: Q-learning with a growing aware state set"};
  app.require_subcommand(1);

  GenFlags gen;
  std::string gen_out = "env.json";
  auto* gen_cmd = app.add_subcommand("gen-env", "generate an env file");
  add_gen_flags(gen_cmd, gen, true);
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output path");

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "run one learner on an env file");
  run_cmd->add_option("--env", run.env, "env file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "run directory");
  run_cmd->add_option("--mode", run.mode, "growing or full")->check(CLI::IsMember({"growing", "full"}));
  run_cmd->add_option("--variance", run.variance, "empirical or weighted")
      ->check(CLI::IsMember({"empirical", "weighted"}));
  run_cmd->add_option("--seed", run.seed, "rollout seed");
  run_cmd->add_option("--T", run.T, "episodes (default: the env's T)");
  run_cmd->add_flag("--visit-log", run.visit_log, "write visits.jsonl and what audit needs");
  run_cmd->add_option("--audit-every", run.audit_every, "optimism audit cadence, 0 disables");
  run_cmd->add_flag("--confidence", run.confidence, "add per-step AC columns");

  std::string audit_dir;
  auto* audit_cmd = app.add_subcommand("audit", "re-derive a logged run and check it");
  audit_cmd->add_option("dir", audit_dir, "run directory")->required();

  SweepFlags sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run many seeds and aggregate");
  add_gen_flags(sweep_cmd, sweep.gen, false);
  sweep_cmd->add_option("--env", sweep.env, "fixed env file instead of one env per seed")
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--seeds", sweep.seeds, "range a..b or list a,b,c");
  sweep_cmd->add_option("--threads", sweep.threads, "concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--baseline", sweep.baseline, "also run full awareness on each seed");
  sweep_cmd->add_flag("--serial", sweep.serial, "single-threaded reference path");
  sweep_cmd->add_option("--audit-every", sweep.audit_every, "optimism audit cadence, 0 disables");
  sweep_cmd->add_option("--variance", sweep.variance, "empirical or weighted")
      ->check(CLI::IsMember({"empirical", "weighted"}));
  sweep_cmd->add_option("--out", sweep.out, "write the aggregated JSON report here");

  std::string report_target;
  auto* report_cmd = app.add_subcommand("report", "summarize a run directory or sweep report");
  report_cmd->add_option("target", report_target, "run directory or sweep JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) return cmd_gen_env(gen, gen_out);
    if (*run_cmd) return cmd_run(run);
    if (*audit_cmd) return cmd_audit(audit_dir);
    if (*sweep_cmd) {
      sweep.t_given = sweep_cmd->get_option("--T")->count() > 0;
      return cmd_sweep(sweep);
    }
    if (*report_cmd) return cmd_report(report_target);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid env: %s\n", e.what());
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitConfig;
  } catch (const UnavailableError& e) {
    std::fprintf(stderr, "unavailable: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCheck;
  }
  return kExitConfig;
}
