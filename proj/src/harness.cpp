#include "uulab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace uulab {

namespace {

void check_dimensions(const EnvSpec& env, const ValueTables& optimal) {
  if (optimal.num_states != env.num_states || optimal.num_actions != env.num_actions ||
      optimal.horizon != env.horizon) {
    throw ConfigError("optimal tables do not match the env dimensions");
  }
}

double episode_return(const EpisodeTrace& trace) {
  double sum = 0.0;
  for (const auto& step : trace.steps) sum += step.reward;
  return sum;
}

}  // namespace

RunResult run_experiment(const EnvSpec& env, const ValueTables& optimal, const RunConfig& config,
                         const EpisodeHook& hook) {
  check_dimensions(env, optimal);
  auto params = LearnerParams::from_env(env, config.mode, config.episodes);
  params.variance = config.variance;
  const std::size_t T = params.episodes;
  const std::size_t S = env.num_states;
  const std::size_t H = env.horizon;

  RunResult result;
  result.learner.emplace(params, env.initial_aware);
  Learner& learner = *result.learner;
  learner.set_capture_expansions(config.capture_expansions);
  result.visits.enabled = config.visit_log;
  result.vbar_history.num_states = S;
  result.vbar_history.horizon = H;
  result.records.reserve(T);
  result.update_seconds.reserve(T);
  if (config.visit_log) {
    result.visits.records.reserve(T * H);
    result.vbar_history.snapshots.reserve(T);
  }

  RunSummary& sum = result.summary;
  sum.mode = config.mode;
  sum.seed = config.seed;
  sum.episodes = T;
  sum.zeta = params.zeta;
  sum.log_t = params.log_t;
  sum.homeland_all = check_homeland(env, optimal, learner.awareness().members()).holds;

  Rng rng = make_stream(config.seed, kRolloutStream);
  double cumulative = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const DeterministicPolicy pi = learner.policy();
    const PolicyValues vpi = evaluate_policy(env, pi);
    const double increment = regret_increment(optimal, vpi, env.initial_state);
    cumulative += increment;
    const EpisodeTrace trace = rollout_episode(env, pi, rng);

    const auto start = std::chrono::steady_clock::now();
    UpdateSummary update = learner.update_after_episode(trace, t);
    const auto stop = std::chrono::steady_clock::now();
    result.update_seconds.push_back(std::chrono::duration<double>(stop - start).count());

    if (config.visit_log) {
      result.visits.records.insert(result.visits.records.end(), update.visits.begin(),
                                   update.visits.end());
      result.vbar_history.snapshots.push_back(learner.ring_vbar_prev());
    }
    if (!update.new_states.empty()) {
      ++sum.expansion_events;
      if (sum.homeland_all) {
        sum.homeland_all = check_homeland(env, optimal, learner.awareness().members()).holds;
      }
    }

    RunRecord rec;
    rec.episode = t;
    rec.episode_return = episode_return(trace);
    rec.policy_value = vpi.at(0, env.initial_state);
    rec.regret_increment = increment;
    rec.regret_cumulative = cumulative;
    rec.aware = learner.awareness().count();
    rec.new_states = update.new_states.size();
    if (config.audit_every != 0 && t % config.audit_every == 0) {
      const bool ok = optimism_audit(learner, optimal).empty();
      rec.optimism_ok = ok;
      if (!ok) {
        ++sum.optimism_violation_episodes;
        if (sum.first_violation_episode == 0) sum.first_violation_episode = t;
      }
    }
    if (config.record_confidence) {
      const auto members = learner.awareness().members();
      const auto& vbar = learner.tables().vbar;
      rec.confidence.reserve(H);
      for (std::size_t h = 0; h < H; ++h) {
        rec.confidence.push_back(awareness_confidence(
            std::span<const double>(vbar).subspan(h * S, S),
            std::span<const double>(optimal.vstar).subspan(h * S, S), members));
      }
    }
    result.records.push_back(std::move(rec));
    if (t == T / 2) sum.half_regret = cumulative;

    if (hook) hook(learner, update, t);
    if (update.expansion) result.expansions.push_back(std::move(*update.expansion));
  }

  sum.final_regret = cumulative;
  sum.final_aware = learner.awareness().count();
  sum.moments = aware_moment_report(learner.awareness(), T);
  return result;
}

// ---------------------------------------------------------------------------

RunArtifacts artifacts_from(const RunResult& result, const EnvSpec& env) {
  if (!result.learner) throw ContractError("artifacts_from: run has no final learner");
  const Learner& L = *result.learner;
  const auto& p = L.params();
  const std::size_t S = p.num_states, A = p.num_actions, H = p.horizon;

  RunArtifacts art;
  art.env = env;
  art.params = p;
  for (std::size_t s = 0; s < S; ++s) {
    if (L.awareness().aware_moment(s) == 0) art.initial_aware.push_back(s);
  }
  art.visits = result.visits;
  art.vbar_history = result.vbar_history;
  art.q.resize(H * S * A);
  art.vbias_ring.resize(H * S * A * S);
  art.counts.resize(H * S * A);
  art.sum_y.resize(H * S * A);
  art.sum_y2.resize(H * S * A);
  art.corr_sum.resize(H * S * A);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const std::size_t i = (h * S + s) * A + a;
        art.q[i] = L.q_ring(h, s, a);
        art.counts[i] = L.count(h, s, a);
        art.sum_y[i] = L.sum_y(h, s, a);
        art.sum_y2[i] = L.sum_y2(h, s, a);
        art.corr_sum[i] = L.corr_sum(h, s, a);
        for (std::size_t n = 0; n < S; ++n) art.vbias_ring[i * S + n] = L.vbias_ring(h, s, a, n);
      }
    }
  }
  art.vbar = L.ring_vbar();
  art.aware_moment.resize(S);
  for (std::size_t s = 0; s < S; ++s) art.aware_moment[s] = L.awareness().aware_moment(s);
  return art;
}

bool AuditReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.passed; });
}

std::string AuditReport::to_text() const {
  std::ostringstream out;
  out.precision(3);
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << "  worst=" << std::scientific << c.worst;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
  }
  out << (ok() ? "audit passed" : "audit FAILED") << '\n';
  return out.str();
}

namespace {

constexpr double kBatchTol = 1e-9;
constexpr double kCoefTol = 1e-12;
constexpr double kBoundTol = 1e-12;

struct CheckBuilder {
  AuditCheck check;
  double tol;

  CheckBuilder(std::string name, double tolerance) : tol(tolerance) { check.name = std::move(name); }

  /// Records an excess (positive means out of band by that much).
  void excess(double e, const std::string& where) {
    if (!(e <= tol)) {  // NaN fails too
      if (check.passed) check.detail = where;
      check.passed = false;
    }
    if (std::isnan(e)) {
      check.worst = e;
    } else if (!std::isnan(check.worst)) {
      check.worst = std::max(check.worst, e);
    }
  }
  void fail(const std::string& why) {
    if (check.passed) check.detail = why;
    check.passed = false;
  }
};

std::string at_pair(std::size_t h, std::size_t s, std::size_t a) {
  return "h=" + std::to_string(h) + " s=" + std::to_string(s) + " a=" + std::to_string(a);
}

double rel(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace

AuditReport audit_run(const RunArtifacts& art) {
  if (!art.visits.enabled) throw UnavailableError("run has no visit log; rerun with --visit-log");
  const auto& p = art.params;
  const std::size_t S = p.num_states, A = p.num_actions, H = p.horizon;
  const auto Hd = static_cast<double>(H);
  const BatchDims dims{S, A, H};
  const auto& log = art.visits.records;
  const auto& hist = art.vbar_history;
  const std::size_t T = hist.snapshots.size();
  AuditReport report;

  // Structure of the log: H records per episode, connected, counts running.
  {
    CheckBuilder c("log_shape", 0.0);
    if (log.size() != T * H) {
      c.fail("log has " + std::to_string(log.size()) + " records, expected " +
             std::to_string(T * H));
    }
    std::vector<std::size_t> running(H * S * A, 0);
    for (std::size_t k = 0; k < log.size() && c.check.passed; ++k) {
      const auto& r = log[k];
      if (r.t != k / H + 1 || r.h != k % H || r.s >= S || r.a >= A || r.s_next >= S) {
        c.fail("record " + std::to_string(k) + " out of sequence");
        break;
      }
      if (r.h > 0 && r.s != log[k - 1].s_next) {
        c.fail("trajectory broken at t=" + std::to_string(r.t) + " h=" + std::to_string(r.h));
        break;
      }
      const std::size_t i = (r.h * S + r.s) * A + r.a;
      if (++running[i] != r.n_after) {
        c.fail("visit count mismatch at t=" + std::to_string(r.t) + " " + at_pair(r.h, r.s, r.a));
      }
    }
    report.checks.push_back(c.check);
    if (!c.check.passed) return report;
  }

  // Aware sets reconstructed from the log.
  std::vector<std::size_t> moment(S, kNever);
  for (auto s : art.initial_aware) moment.at(s) = 0;
  for (const auto& r : log) {
    if (moment[r.s] == kNever) moment[r.s] = r.t;
  }
  {
    CheckBuilder c("aware_moments", 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      if (moment[s] != art.aware_moment.at(s)) {
        c.fail("state " + std::to_string(s) + " moment differs from the log");
        break;
      }
    }
    report.checks.push_back(c.check);
  }
  auto aware_at = [&](std::size_t s, std::size_t t) { return moment[s] != kNever && moment[s] <= t; };

  {
    CheckBuilder c("coefficients", kCoefTol);
    for (const auto& r : log) {
      const auto co = learning_coefficients(r.n_after, H);
      const std::string where = "t=" + std::to_string(r.t) + " " + at_pair(r.h, r.s, r.a);
      c.excess(std::abs(r.alpha - co.alpha), where);
      c.excess(std::abs(r.gamma - co.gamma), where);
      c.excess(std::abs(r.eta - co.eta), where);
    }
    report.checks.push_back(c.check);
  }

  {
    CheckBuilder c("bonus", kBatchTol);
    const auto beta = recompute_bonus_batch(art.visits, hist, p);
    for (std::size_t k = 0; k < log.size(); ++k) {
      const auto& r = log[k];
      c.excess(rel(r.beta, beta[k]), "t=" + std::to_string(r.t) + " " + at_pair(r.h, r.s, r.a));
    }
    report.checks.push_back(c.check);
  }

  {
    CheckBuilder c("q_batch", kBatchTol);
    const auto q = recompute_q_batch(art.visits, hist, dims, art.q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (art.counts[i] == 0) continue;
      c.excess(std::abs(q[i] - art.q[i]), at_pair(i / (S * A), i / A % S, i % A));
    }
    report.checks.push_back(c.check);
  }

  {
    CheckBuilder weights("eta_weights", kCoefTol);
    CheckBuilder c("vbias_batch", kBatchTol);
    try {
      const auto vb = recompute_vbias_batch(art.visits, hist, dims, art.vbias_ring);
      weights.excess(vb.max_weight_error, "max over visited pairs");
      for (std::size_t i = 0; i < H * S * A; ++i) {
        if (art.counts[i] == 0) continue;
        for (std::size_t n = 0; n < S; ++n) {
          c.excess(std::abs(vb.vbias[i * S + n] - art.vbias_ring[i * S + n]),
                   at_pair(i / (S * A), i / A % S, i % A) + " s'=" + std::to_string(n));
        }
      }
    } catch (const InternalError& e) {
      weights.fail(e.what());
      c.fail("not evaluated");
    }
    report.checks.push_back(weights.check);
    report.checks.push_back(c.check);
  }

  {
    CheckBuilder c("stats_batch", kBatchTol);
    const auto st = recompute_stats_batch(art.visits, hist, dims);
    for (std::size_t i = 0; i < st.counts.size(); ++i) {
      const std::string where = at_pair(i / (S * A), i / A % S, i % A);
      if (st.counts[i] != art.counts[i]) c.fail("count differs at " + where);
      c.excess(rel(art.sum_y[i], st.sum_y[i]), where + " sum_y");
      c.excess(rel(art.sum_y2[i], st.sum_y2[i]), where + " sum_y2");
      c.excess(rel(art.corr_sum[i], st.corr_sum[i]), where + " corr_sum");
    }
    report.checks.push_back(c.check);
  }

  // V-bar lemma bullets. The snapshot episode t+1 read is V-bar^t expanded
  // onto S_{t+1}; its restriction to S_t is V-bar^t itself.
  {
    CheckBuilder mono("vbound_monotone", kBoundTol);
    CheckBuilder range("vbound_range", kBoundTol);
    CheckBuilder dom("vbound_dominance", kBoundTol);
    auto vbar_after = [&](std::size_t t) -> const std::vector<double>& {
      return t < T ? hist.snapshots[t] : art.vbar;
    };
    std::vector<double> rows(H * S * A * S, Hd);
    std::vector<char> seen(H * S * A, 0);
    std::size_t k = 0;
    for (std::size_t t = 1; t <= T; ++t) {
      for (; k < log.size() && log[k].t == t; ++k) {
        const auto& r = log[k];
        const std::size_t i = (r.h * S + r.s) * A + r.a;
        const double* x = hist.snapshots[t - 1].data() + (r.h + 1) * S;
        for (std::size_t n = 0; n < S; ++n) {
          rows[i * S + n] = r.eta * x[n] + (1.0 - r.eta) * rows[i * S + n];
        }
        seen[i] = 1;
      }
      const auto& now = vbar_after(t);
      const auto& before = hist.snapshots[t - 1];
      const std::string when = "t=" + std::to_string(t);
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t s = 0; s < S; ++s) {
          if (!aware_at(s, t)) continue;
          const double v = now[h * S + s];
          const std::string where = when + " h=" + std::to_string(h) + " s=" + std::to_string(s);
          mono.excess(v - before[h * S + s], where);
          range.excess(-v, where);
          range.excess(v - Hd, where);
          for (std::size_t a = 0; a < A; ++a) {
            const std::size_t i = (h * S + s) * A + a;
            if (!seen[i]) continue;
            for (std::size_t n = 0; n < S; ++n) {
              if (!aware_at(n, t)) continue;
              const double floor = h + 1 < H ? now[(h + 1) * S + n] : 0.0;
              dom.excess(floor - rows[i * S + n], where + " a=" + std::to_string(a));
              dom.excess(rows[i * S + n] - Hd, where + " a=" + std::to_string(a));
            }
          }
        }
      }
    }
    report.checks.push_back(mono.check);
    report.checks.push_back(range.check);
    report.checks.push_back(dom.check);
  }
  return report;
}

}  // namespace uulab
