#include <algorithm>

#include <json.hpp>

#include "uulab/harness.hpp"

namespace uulab {

EnvSpec EnvGenerator::make(std::uint64_t seed) const {
  Rng rng = make_stream(seed, kGeneratorStream);
  switch (kind) {
    case EnvKind::dense:
      return generate_dense_env(num_states, num_actions, horizon, episodes, delta, rng, stationary);
    case EnvKind::homeland:
      return generate_homeland_env(num_states, num_actions, horizon, episodes, delta, rng,
                                   reward_cap);
    case EnvKind::constant_reward:
      return generate_constant_reward_env(num_states, num_actions, horizon, episodes, delta);
  }
  throw ConfigError("unknown env kind");
}

namespace {

SeedOutcome run_one(const SweepConfig& config, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  try {
    const EnvSpec env = config.fixed_env ? *config.fixed_env : config.generator.make(seed);
    const ValueTables optimal = optimal_values(env);
    RunConfig run = config.run;
    run.seed = seed;
    run.visit_log = false;
    run.capture_expansions = false;
    run.mode = Mode::growing_awareness;
    out.primary = run_experiment(env, optimal, run).summary;
    if (config.baseline) {
      run.mode = Mode::full_awareness;
      out.baseline = run_experiment(env, optimal, run).summary;
    }
  } catch (const std::exception& e) {
    out.primary.reset();
    out.baseline.reset();
    out.error = e.what();
    if (out.error.empty()) out.error = "unknown failure";
  }
  return out;
}

void check_seeds(const SweepConfig& config) {
  if (config.seeds.empty()) throw ConfigError("sweep needs at least one seed");
  auto sorted = config.seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("sweep seeds must be distinct");
  }
}

SweepReport merge(std::vector<SeedOutcome> outcomes) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const SeedOutcome& a, const SeedOutcome& b) { return a.seed < b.seed; });
  SweepReport r;
  std::size_t ok = 0, with_baseline = 0, exceed = 0, violated = 0, homeland = 0;
  double regret = 0.0, baseline_regret = 0.0;
  for (const auto& o : outcomes) {
    if (!o.error.empty()) {
      r.failed_seeds.push_back(o.seed);
      continue;
    }
    ++ok;
    const auto& p = *o.primary;
    regret += p.final_regret;
    if (p.moments.exceed_count > 0) ++exceed;
    if (p.optimism_violation_episodes > 0) ++violated;
    if (p.homeland_all) ++homeland;
    if (o.baseline) {
      ++with_baseline;
      baseline_regret += o.baseline->final_regret;
    }
  }
  if (ok > 0) {
    const auto n = static_cast<double>(ok);
    r.mean_regret = regret / n;
    r.moment_exceed_fraction = static_cast<double>(exceed) / n;
    r.optimism_violation_fraction = static_cast<double>(violated) / n;
    r.homeland_fraction = static_cast<double>(homeland) / n;
  }
  if (with_baseline > 0) {
    r.mean_baseline_regret = baseline_regret / static_cast<double>(with_baseline);
    if (r.mean_baseline_regret > 0.0) r.regret_ratio = r.mean_regret / r.mean_baseline_regret;
  }
  r.outcomes = std::move(outcomes);
  return r;
}

}  // namespace

SweepReport run_sweep(const SweepConfig& config) {
  check_seeds(config);
  const auto n = static_cast<std::ptrdiff_t>(config.seeds.size());
  std::vector<SeedOutcome> outcomes(config.seeds.size());
  const int threads = std::max(1, config.threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    outcomes[static_cast<std::size_t>(i)] = run_one(config, config.seeds[static_cast<std::size_t>(i)]);
  }
  return merge(std::move(outcomes));
}

SweepReport run_sweep_serial(const SweepConfig& config) {
  check_seeds(config);
  std::vector<SeedOutcome> outcomes;
  outcomes.reserve(config.seeds.size());
  for (auto seed : config.seeds) outcomes.push_back(run_one(config, seed));
  return merge(std::move(outcomes));
}

std::string sweep_to_json(const SweepReport& r) {
  using nlohmann::json;
  json runs = json::array();
  for (const auto& o : r.outcomes) {
    json j;
    j["seed"] = o.seed;
    if (!o.error.empty()) {
      j["error"] = o.error;
    } else {
      j["primary"] = json::parse(summary_to_json(*o.primary));
      if (o.baseline) j["baseline"] = json::parse(summary_to_json(*o.baseline));
    }
    runs.push_back(std::move(j));
  }
  json out;
  out["runs"] = std::move(runs);
  out["failed_seeds"] = r.failed_seeds;
  out["mean_regret"] = r.mean_regret;
  out["mean_baseline_regret"] = r.mean_baseline_regret;
  out["regret_ratio"] = r.regret_ratio;
  out["moment_exceed_fraction"] = r.moment_exceed_fraction;
  out["optimism_violation_fraction"] = r.optimism_violation_fraction;
  out["homeland_fraction"] = r.homeland_fraction;
  return out.dump(2) + "\n";
}

}  // namespace uulab
