#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "uulab/awareness.hpp"
#include "uulab/learner.hpp"
#include "uulab/oracle.hpp"

namespace uulab {

/// One row of records.csv.
struct RunRecord {
  std::size_t episode = 0;
  double episode_return = 0.0;
  double policy_value = 0.0;
  double regret_increment = 0.0;
  double regret_cumulative = 0.0;
  std::size_t aware = 0;
  std::size_t new_states = 0;
  /// Empty when the episode was not audited.
  std::optional<bool> optimism_ok;
  /// AC(V-bar_h) over the aware set, per step; empty unless requested.
  std::vector<double> confidence;
};

/// -(1/|D|) sum_{s in D} |F(s) - V*(s)|, with F and vstar indexed by state.
double awareness_confidence(std::span<const double> estimate, std::span<const double> vstar,
                            std::span<const std::size_t> domain);

struct ConfidenceDropReport {
  bool skipped = false;
  std::string reason;
  /// Per step h: mean(V-bar - V*) over S_t and mean(expanded V-bar - V*) over S_{t+1}.
  std::vector<double> gap_before;
  std::vector<double> gap_after;
  std::vector<bool> pass;
  bool all_pass() const;
};

/// Checks mean_{S_{t+1}}(expanded - V*) >= mean_{S_t}(V-bar - V*) - 1e-9 at
/// every step. Skipped (not failed) when optimism does not hold on S_t or
/// S_t is not contained in S_{t+1}.
ConfidenceDropReport confidence_drop_check(std::span<const double> vbar_before,
                                           std::span<const double> vbar_after,
                                           const ValueTables& optimal,
                                           std::span<const std::size_t> before_domain,
                                           std::span<const std::size_t> after_domain);

ConfidenceDropReport confidence_drop_check(const ExpansionSnapshot& snap, const ValueTables& optimal);

struct OptimismViolation {
  std::size_t h;
  std::size_t s;
  std::size_t a;  // npos for a V-bar violation
  double estimate;
  double optimum;
};

/// Every (h, s, a) with ring Q-bar < Q* - 1e-9 and every (h, s) with ring
/// V-bar < V* - 1e-9, over the full state space.
std::vector<OptimismViolation> optimism_audit(const Learner& learner, const ValueTables& optimal);

/// True iff d * mean_{S_{t-1}} V-bar_1 < V*_1(s) for some newly aware s at
/// the first expansion. ContractError if there was no expansion or d is
/// outside (0, 1].
bool scalar_expansion_probe(const std::optional<ExpansionSnapshot>& first_expansion, double d,
                            const ValueTables& optimal);

struct VBoundReport {
  std::size_t monotone_violations = 0;   // V-bar above the snapshot it was clipped to
  std::size_t range_violations = 0;      // V-bar outside [0, H]
  std::size_t dominance_violations = 0;  // bias value below V-bar_{h+1} or above H
  double worst = 0.0;                    // largest excess over the tolerance band
  bool ok() const { return monotone_violations + range_violations + dominance_violations == 0; }
};

/// The three V-bar lemma bullets on the current aware set, right after an
/// update: V-bar^t <= the snapshot V-bar^{t-1} (expanded), 0 <= V-bar^t <= H,
/// and V-bar^t_{h+1}(s') <= V_h(s, a, s') <= H for aware s, s'.
VBoundReport check_vbound(const Learner& learner, double tol = 1e-12);

struct AwareMomentReport {
  std::size_t max_moment = 0;     // over states that became aware
  std::size_t exceed_count = 0;   // t(s) > floor(sqrt(T)), counting never-aware states
  std::size_t never_count = 0;
  std::size_t threshold = 0;      // floor(sqrt(T))
};

AwareMomentReport aware_moment_report(const AwareState& awareness, std::size_t T);

/// CSV header for `horizon` AC columns (0 for none).
std::string records_csv_header(std::size_t confidence_columns);
void write_record_csv(std::ostream& out, const RunRecord& rec);

}  // namespace uulab
