#include "uulab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace uulab {

namespace {

constexpr double kValueTolerance = 1e-9;
constexpr std::size_t kNoAction = std::numeric_limits<std::size_t>::max();

double mean_gap(std::span<const double> table, const ValueTables& optimal, std::size_t h,
                std::span<const std::size_t> domain) {
  const std::size_t S = optimal.num_states;
  double sum = 0.0;
  for (auto s : domain) sum += table[h * S + s] - optimal.v(h, s);
  return sum / static_cast<double>(domain.size());
}

std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

double awareness_confidence(std::span<const double> estimate, std::span<const double> vstar,
                            std::span<const std::size_t> domain) {
  if (domain.empty()) throw ContractError("awareness_confidence: empty domain");
  double sum = 0.0;
  for (auto s : domain) sum += std::abs(estimate[s] - vstar[s]);
  return -sum / static_cast<double>(domain.size());
}

bool ConfidenceDropReport::all_pass() const {
  return !skipped && std::all_of(pass.begin(), pass.end(), [](bool b) { return b; });
}

ConfidenceDropReport confidence_drop_check(std::span<const double> vbar_before,
                                           std::span<const double> vbar_after,
                                           const ValueTables& optimal,
                                           std::span<const std::size_t> before_domain,
                                           std::span<const std::size_t> after_domain) {
  ConfidenceDropReport report;
  const std::size_t S = optimal.num_states;
  const std::size_t H = optimal.horizon;
  if (before_domain.empty()) {
    report.skipped = true;
    report.reason = "previous aware set is empty";
    return report;
  }
  std::vector<char> in_after(S, 0);
  for (auto s : after_domain) in_after[s] = 1;
  for (auto s : before_domain) {
    if (!in_after[s]) {
      report.skipped = true;
      report.reason = "state " + std::to_string(s) + " left the aware set";
      return report;
    }
  }
  for (std::size_t h = 0; h < H; ++h) {
    for (auto s : before_domain) {
      if (vbar_before[h * S + s] < optimal.v(h, s) - kValueTolerance) {
        report.skipped = true;
        report.reason = "optimism fails on the previous aware set at h=" + std::to_string(h) +
                        ", s=" + std::to_string(s);
        return report;
      }
    }
  }
  for (std::size_t h = 0; h < H; ++h) {
    const double before = mean_gap(vbar_before, optimal, h, before_domain);
    const double after = mean_gap(vbar_after, optimal, h, after_domain);
    report.gap_before.push_back(before);
    report.gap_after.push_back(after);
    report.pass.push_back(after >= before - kValueTolerance);
  }
  return report;
}

ConfidenceDropReport confidence_drop_check(const ExpansionSnapshot& snap, const ValueTables& optimal) {
  std::vector<std::size_t> after = snap.old_aware;
  after.insert(after.end(), snap.new_states.begin(), snap.new_states.end());
  return confidence_drop_check(snap.vbar_before, snap.vbar_after, optimal, snap.old_aware, after);
}

std::vector<OptimismViolation> optimism_audit(const Learner& learner, const ValueTables& optimal) {
  std::vector<OptimismViolation> out;
  const auto& p = learner.params();
  for (std::size_t h = 0; h < p.horizon; ++h) {
    for (std::size_t s = 0; s < p.num_states; ++s) {
      for (std::size_t a = 0; a < p.num_actions; ++a) {
        const double upper = learner.qbar_ring(h, s, a);
        if (upper < optimal.q(h, s, a) - kValueTolerance) {
          out.push_back({h, s, a, upper, optimal.q(h, s, a)});
        }
      }
      const double upper = learner.vbar_ring(h, s);
      if (upper < optimal.v(h, s) - kValueTolerance) {
        out.push_back({h, s, kNoAction, upper, optimal.v(h, s)});
      }
    }
  }
  return out;
}

bool scalar_expansion_probe(const std::optional<ExpansionSnapshot>& first_expansion, double d,
                            const ValueTables& optimal) {
  if (!first_expansion) throw ContractError("scalar_expansion_probe: no expansion has occurred");
  if (!(d > 0.0 && d <= 1.0)) throw ContractError("scalar_expansion_probe: d must lie in (0, 1]");
  const auto& snap = *first_expansion;
  double sum = 0.0;
  for (auto s : snap.old_aware) sum += snap.vbar_before[s];
  const double avg = sum / static_cast<double>(snap.old_aware.size());
  return std::any_of(snap.new_states.begin(), snap.new_states.end(),
                     [&](std::size_t s) { return d * avg < optimal.v(0, s); });
}

VBoundReport check_vbound(const Learner& learner, double tol) {
  VBoundReport r;
  const auto& p = learner.params();
  const std::size_t S = p.num_states;
  const auto H = static_cast<double>(p.horizon);
  const auto& tab = learner.tables();
  const auto prev = learner.vbar_prev();
  const auto members = learner.awareness().members();
  auto note = [&](double excess, std::size_t& counter) {
    if (excess > tol) {
      ++counter;
      r.worst = std::max(r.worst, excess);
    }
  };
  for (std::size_t h = 0; h < p.horizon; ++h) {
    for (auto s : members) {
      const double v = tab.vbar[h * S + s];
      note(v - prev[h * S + s], r.monotone_violations);
      note(-v, r.range_violations);
      note(v - H, r.range_violations);
      for (std::size_t a = 0; a < p.num_actions; ++a) {
        for (auto next : members) {
          const double bias = tab.vbias[tab.sas(h, s, a, next)];
          const double floor = h + 1 < p.horizon ? tab.vbar[(h + 1) * S + next] : 0.0;
          note(floor - bias, r.dominance_violations);
          note(bias - H, r.dominance_violations);
        }
      }
    }
  }
  return r;
}

AwareMomentReport aware_moment_report(const AwareState& awareness, std::size_t T) {
  AwareMomentReport r;
  r.threshold = isqrt(T);
  for (std::size_t s = 0; s < awareness.num_states(); ++s) {
    const std::size_t m = awareness.aware_moment(s);
    if (m == kNever) {
      ++r.never_count;
      ++r.exceed_count;
      continue;
    }
    r.max_moment = std::max(r.max_moment, m);
    if (m > r.threshold) ++r.exceed_count;
  }
  return r;
}

std::string records_csv_header(std::size_t confidence_columns) {
  std::string header = "episode,return,v_pi,regret_inc,regret_cum,aware,new_states,optimism_ok";
  for (std::size_t h = 0; h < confidence_columns; ++h) header += ",ac_" + std::to_string(h + 1);
  return header;
}

void write_record_csv(std::ostream& out, const RunRecord& rec) {
  out << rec.episode << ',' << fmt_real(rec.episode_return) << ',' << fmt_real(rec.policy_value)
      << ',' << fmt_real(rec.regret_increment) << ',' << fmt_real(rec.regret_cumulative) << ','
      << rec.aware << ',' << rec.new_states << ',';
  if (rec.optimism_ok) {
    out << (*rec.optimism_ok ? '1' : '0');
  } else {
    out << "na";
  }
  for (double ac : rec.confidence) out << ',' << fmt_real(ac);
  out << '\n';
}

}  // namespace uulab
