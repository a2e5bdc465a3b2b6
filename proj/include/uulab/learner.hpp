#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uulab/awareness.hpp"
#include "uulab/env.hpp"
#include "uulab/nive.hpp"
#include "uulab/oracle.hpp"

namespace uulab {

enum class Mode { growing_awareness, full_awareness };

/// Variance proxy inside the bonus. `empirical` is the plain empirical
/// variance of the observed next-step upper values; `weighted` uses 1/k
/// weights on the k-th observation and exists for comparison only.
enum class VarianceProxy { empirical, weighted };

/// zeta = ln(96 e H S A (2T + 1) / delta).
double exploration_threshold(std::size_t H, std::size_t S, std::size_t A, std::size_t T,
                             double delta);

struct LearnerParams {
  Mode mode = Mode::growing_awareness;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::size_t episodes = 0;  // planned T; fixes log(T) for the whole run
  double delta = 0.1;
  double zeta = 0.0;
  double log_t = 0.0;
  VarianceProxy variance = VarianceProxy::empirical;

  /// `planned_episodes == 0` takes T from the env.
  static LearnerParams from_env(const EnvSpec& env, Mode mode, std::size_t planned_episodes = 0);

  /// Requires T > 3 and zeta, log_t consistent with (H, S, A, T, delta).
  void validate() const;
};

struct LearningCoefficients {
  double alpha;       // 1/n
  double gamma;       // momentum, gamma_ring / n
  double eta;         // alpha + gamma
  double gamma_ring;  // H (n - 1) / (n + H)
};

/// Coefficients on the visited pair after its count became n. n = 0 is a
/// ContractError; unvisited pairs receive no update at all.
LearningCoefficients learning_coefficients(std::size_t n, std::size_t H);

/// One visited pair in one episode, as written to the visit log.
struct VisitRecord {
  std::size_t t;
  std::size_t h;
  std::size_t s;
  std::size_t a;
  std::size_t s_next;
  double r;
  std::size_t n_after;
  double alpha;
  double gamma;
  double eta;
  double beta;
  bool operator==(const VisitRecord&) const = default;
};

/// V-bar around one expansion: before is V-bar^{t-1} on S_{t-1}, after is the
/// expanded table on S_t. Both are (H+1) x S.
struct ExpansionSnapshot {
  std::size_t t = 0;
  std::vector<std::size_t> old_aware;
  std::vector<std::size_t> new_states;
  std::vector<double> vbar_before;
  std::vector<double> vbar_after;
};

struct UpdateSummary {
  std::vector<std::size_t> new_states;
  std::vector<VisitRecord> visits;
  std::optional<ExpansionSnapshot> expansion;  // only when capture is on
};

/// Optimistic momentum Q-learning over a growing aware domain.
///
/// In full-awareness mode S0 is the whole state space and the expansion
/// branch is never taken, which gives the plain baseline. Value reads at
/// unaware states go through the ring extension: the NIVE averages over the
/// current aware set, plus H for the Q upper bound.
class Learner {
 public:
  Learner(const LearnerParams& params, std::span<const std::size_t> initial_aware);

  const LearnerParams& params() const { return params_; }
  /// Number of completed episodes.
  std::size_t episode() const { return episode_; }
  const AwareState& awareness() const { return aware_; }
  const LearnerTables& tables() const { return tables_; }
  const AverageAccumulators& averages() const { return acc_; }
  std::span<const double> vbar_prev() const { return vbar_prev_; }

  std::uint64_t count(std::size_t h, std::size_t s, std::size_t a) const {
    return counts_[tables_.sa(h, s, a)];
  }
  double sum_y(std::size_t h, std::size_t s, std::size_t a) const { return sum_y_[tables_.sa(h, s, a)]; }
  double sum_y2(std::size_t h, std::size_t s, std::size_t a) const { return sum_y2_[tables_.sa(h, s, a)]; }
  double corr_sum(std::size_t h, std::size_t s, std::size_t a) const {
    return corr_sum_[tables_.sa(h, s, a)];
  }

  /// Greedy on Q-bar at aware states, on the Q average elsewhere; lowest index
  /// wins ties. Throws IndexError on out-of-range h or s.
  std::size_t select_action(std::size_t h, std::size_t s) const;

  /// Exploration bonus for the current statistics; H when n = 0 or s is unaware.
  double bonus(std::size_t h, std::size_t s, std::size_t a) const;

  /// Variance proxy W for the current statistics (0 when n = 0).
  double variance_proxy(std::size_t h, std::size_t s, std::size_t a) const;

  /// The policy select_action implements, on the full state space.
  DeterministicPolicy policy() const;

  /// Runs one episode's update. `t` must be episode() + 1 and the trace must
  /// have H steps (ContractError otherwise).
  UpdateSummary update_after_episode(const EpisodeTrace& trace, std::size_t t);

  double q_ring(std::size_t h, std::size_t s, std::size_t a) const;
  double qbar_ring(std::size_t h, std::size_t s, std::size_t a) const;
  double vbar_ring(std::size_t h, std::size_t s) const;
  double vbias_ring(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const;
  /// Ring-extended V-bar, (H+1) x S.
  std::vector<double> ring_vbar() const;
  /// Ring extension of the V-bar snapshot the last update read from.
  std::vector<double> ring_vbar_prev() const;

  void set_capture_expansions(bool on) { capture_expansions_ = on; }

  /// Bytes held by the dense value tables, statistics and accumulators.
  std::size_t table_bytes() const;
  /// The same quantity predicted from the dimensions alone.
  static std::size_t expected_table_bytes(const LearnerParams& params);

  /// Direct table access for detector tests.
  LearnerTables& tables_for_testing() { return tables_; }

 private:
  void visit(const EpisodeTrace::Step& step, std::size_t h, std::size_t t, UpdateSummary& out);

  LearnerParams params_;
  std::size_t episode_ = 0;
  bool capture_expansions_ = false;
  AwareState aware_;
  LearnerTables tables_;
  AverageAccumulators acc_;
  std::vector<double> vbar_prev_;
  std::vector<std::uint64_t> counts_;
  std::vector<double> sum_y_;
  std::vector<double> sum_y2_;
  std::vector<double> corr_sum_;
  // Weighted variance proxy only: sums of 1/k, y/k, y^2/k.
  std::vector<double> sum_w_;
  std::vector<double> sum_wy_;
  std::vector<double> sum_wy2_;
};

// ---------------------------------------------------------------------------
// Batch oracles. They rebuild the learner's tables from the visit log and the
// per-episode V-bar history alone, never touching the incremental state.

struct VisitLog {
  bool enabled = true;
  std::vector<VisitRecord> records;
};

/// snapshots[t-1] is the ring-extended V-bar that episode t read from,
/// (H+1) x S each.
struct VbarHistory {
  std::size_t num_states = 0;
  std::size_t horizon = 0;
  std::vector<std::vector<double>> snapshots;

  double at(std::size_t t, std::size_t h, std::size_t s) const {
    return snapshots.at(t - 1)[h * num_states + s];
  }
};

struct BatchDims {
  std::size_t num_states;
  std::size_t num_actions;
  std::size_t horizon;
};

/// Q from the explicit visit-sum formula. Pairs with no visits keep the
/// value from `fallback` (the initial or expanded Q). Throws
/// UnavailableError if the log is disabled.
std::vector<double> recompute_q_batch(const VisitLog& log, const VbarHistory& history,
                                      BatchDims dims, std::span<const double> fallback);

struct VbiasBatch {
  std::vector<double> vbias;      // [h][s][a][s']
  double max_weight_error = 0.0;  // max |sum of weights - 1| over visited pairs
};

/// Bias-value tables as weighted sums of past V-bar rows. Unvisited pairs
/// keep `fallback`. Throws InternalError if any visited pair's weights miss 1
/// by more than 1e-12.
VbiasBatch recompute_vbias_batch(const VisitLog& log, const VbarHistory& history, BatchDims dims,
                                 std::span<const double> fallback);

struct StatsBatch {
  std::vector<std::uint64_t> counts;
  std::vector<double> sum_y;
  std::vector<double> sum_y2;
  std::vector<double> corr_sum;
};

StatsBatch recompute_stats_batch(const VisitLog& log, const VbarHistory& history, BatchDims dims);

/// Bonus each logged visit should have carried, recomputed from the prefix
/// of that pair's visits; aligned with log.records.
std::vector<double> recompute_bonus_batch(const VisitLog& log, const VbarHistory& history,
                                          const LearnerParams& params);

/// Main-text weighted variance proxy for one pair, straight from its
/// definition over the logged visits.
double weighted_variance_batch(const VisitLog& log, const VbarHistory& history, std::size_t h,
                               std::size_t s, std::size_t a);

}  // namespace uulab
