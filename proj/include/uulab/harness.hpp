#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uulab/env.hpp"
#include "uulab/learner.hpp"
#include "uulab/metrics.hpp"
#include "uulab/oracle.hpp"

namespace uulab {

/// RNG stream ids derived from a run seed.
inline constexpr std::uint64_t kRolloutStream = 1;
inline constexpr std::uint64_t kGeneratorStream = 2;

struct RunConfig {
  Mode mode = Mode::growing_awareness;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;  // 0 takes T from the env
  VarianceProxy variance = VarianceProxy::empirical;
  bool visit_log = false;
  std::size_t audit_every = 1;  // optimism audit cadence; 0 disables
  bool capture_expansions = false;
  bool record_confidence = false;
};

struct RunSummary {
  Mode mode = Mode::growing_awareness;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  double zeta = 0.0;
  double log_t = 0.0;
  double final_regret = 0.0;
  double half_regret = 0.0;  // cumulative regret after floor(T/2) episodes
  std::size_t expansion_events = 0;
  std::size_t final_aware = 0;
  AwareMomentReport moments;
  std::size_t optimism_violation_episodes = 0;
  std::size_t first_violation_episode = 0;  // 0 when none
  /// Homeland condition held for S0 and for every aware set reached.
  bool homeland_all = true;
};

/// Per-episode observer, called after the update and all bookkeeping.
using EpisodeHook = std::function<void(const Learner&, const UpdateSummary&, std::size_t t)>;

struct RunResult {
  RunSummary summary;
  std::vector<RunRecord> records;
  VisitLog visits;
  VbarHistory vbar_history;
  std::vector<ExpansionSnapshot> expansions;
  std::vector<double> update_seconds;
  std::optional<Learner> learner;  // final state
};

/// Runs T episodes of rollout + update against a fixed env. Everything but
/// `update_seconds` is a pure function of (env, config).
RunResult run_experiment(const EnvSpec& env, const ValueTables& optimal, const RunConfig& config,
                         const EpisodeHook& hook = {});

// ---------------------------------------------------------------------------
// Audit

/// What the audit needs from a finished run; built in memory or from disk.
struct RunArtifacts {
  EnvSpec env;
  LearnerParams params;
  std::vector<std::size_t> initial_aware;
  VisitLog visits;
  VbarHistory vbar_history;
  std::vector<double> q;           // final Q
  std::vector<double> vbar;        // final V-bar, (H+1) x S, ring-extended
  std::vector<double> vbias_ring;  // final bias values, ring-extended
  std::vector<std::uint64_t> counts;
  std::vector<double> sum_y;
  std::vector<double> sum_y2;
  std::vector<double> corr_sum;
  std::vector<std::size_t> aware_moment;  // kNever when not aware
};

RunArtifacts artifacts_from(const RunResult& result, const EnvSpec& env);

struct AuditCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;
  std::string detail;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool ok() const;
  std::string to_text() const;
};

/// Rebuilds Q, bias values, W and the correction sums from the log, checks
/// the logged coefficients and bonuses, and checks the V-bar lemma bullets
/// episode by episode. Throws UnavailableError without a visit log.
AuditReport audit_run(const RunArtifacts& artifacts);

// ---------------------------------------------------------------------------
// Run directories

void write_run_dir(const RunResult& result, const EnvSpec& env, const std::filesystem::path& dir);
RunArtifacts load_run_dir(const std::filesystem::path& dir);
std::string summary_to_json(const RunSummary& summary);

/// Optimal tables for an env file, cached beside it keyed by a hash of the
/// file contents.
ValueTables cached_optimal_values(const std::filesystem::path& env_path, const EnvSpec& env);

// ---------------------------------------------------------------------------
// Sweeps

enum class EnvKind { dense, homeland, constant_reward };

struct EnvGenerator {
  EnvKind kind = EnvKind::dense;
  std::size_t num_states = 8;
  std::size_t num_actions = 3;
  std::size_t horizon = 5;
  std::size_t episodes = 500;
  double delta = 0.1;
  double reward_cap = 0.3;  // homeland only
  bool stationary = false;

  /// Env for a seed, drawn from the seed's generator stream.
  EnvSpec make(std::uint64_t seed) const;
};

struct SweepConfig {
  std::optional<EnvSpec> fixed_env;  // otherwise one generated env per seed
  EnvGenerator generator;
  std::vector<std::uint64_t> seeds;
  bool baseline = false;  // also run full awareness on the same env and seed
  int threads = 1;
  RunConfig run;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::optional<RunSummary> primary;
  std::optional<RunSummary> baseline;
  std::string error;
};

struct SweepReport {
  std::vector<SeedOutcome> outcomes;  // ascending seed
  std::vector<std::uint64_t> failed_seeds;
  double mean_regret = 0.0;
  double mean_baseline_regret = 0.0;
  double regret_ratio = 0.0;  // primary / baseline, 0 without a baseline
  double moment_exceed_fraction = 0.0;
  double optimism_violation_fraction = 0.0;
  double homeland_fraction = 0.0;
};

/// Seeds run concurrently on `threads` OpenMP threads; the merge is ordered
/// by seed, so the report does not depend on thread count or seed order.
SweepReport run_sweep(const SweepConfig& config);
/// Single-threaded reference for run_sweep.
SweepReport run_sweep_serial(const SweepConfig& config);
std::string sweep_to_json(const SweepReport& report);

}  // namespace uulab
