#include "uulab/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

namespace uulab {

double exploration_threshold(std::size_t H, std::size_t S, std::size_t A, std::size_t T,
                             double delta) {
  const double scale = static_cast<double>(H) * static_cast<double>(S) * static_cast<double>(A) *
                       (2.0 * static_cast<double>(T) + 1.0);
  return std::log(96.0 * std::numbers::e * scale / delta);
}

LearnerParams LearnerParams::from_env(const EnvSpec& env, Mode mode, std::size_t planned_episodes) {
  LearnerParams p;
  p.mode = mode;
  p.num_states = env.num_states;
  p.num_actions = env.num_actions;
  p.horizon = env.horizon;
  p.episodes = planned_episodes == 0 ? env.episodes : planned_episodes;
  p.delta = env.confidence;
  p.zeta = exploration_threshold(p.horizon, p.num_states, p.num_actions, p.episodes, p.delta);
  p.log_t = std::log(static_cast<double>(p.episodes));
  return p;
}

void LearnerParams::validate() const {
  if (num_states == 0 || num_actions == 0 || horizon == 0) {
    throw ConfigError("learner dimensions must be positive");
  }
  if (episodes <= 3) throw ConfigError("planned episodes T must exceed 3");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  const double z = exploration_threshold(horizon, num_states, num_actions, episodes, delta);
  if (std::abs(zeta - z) > 1e-12 * std::max(1.0, std::abs(z))) {
    throw ConfigError("zeta does not match ln(96 e H S A (2T+1) / delta)");
  }
  if (std::abs(log_t - std::log(static_cast<double>(episodes))) > 1e-12) {
    throw ConfigError("log_t does not match ln(T)");
  }
}

LearningCoefficients learning_coefficients(std::size_t n, std::size_t H) {
  if (n == 0) throw ContractError("learning_coefficients: pair has not been visited");
  const auto nd = static_cast<double>(n);
  const auto hd = static_cast<double>(H);
  const double alpha = 1.0 / nd;
  const double gamma_ring = hd * (nd - 1.0) / (nd + hd);
  const double gamma = gamma_ring / nd;
  return {alpha, gamma, alpha + gamma, gamma_ring};
}

Learner::Learner(const LearnerParams& params, std::span<const std::size_t> initial_aware)
    : params_(params) {
  params_.validate();
  const std::size_t S = params_.num_states;
  const std::size_t A = params_.num_actions;
  const std::size_t H = params_.horizon;
  const auto full_h = static_cast<double>(H);

  if (params_.mode == Mode::full_awareness) {
    std::vector<std::size_t> all(S);
    std::iota(all.begin(), all.end(), std::size_t{0});
    aware_ = AwareState::init(all, S);
  } else {
    aware_ = AwareState::init(initial_aware, S);
  }

  tables_ = LearnerTables::allocate(S, A, H);
  const auto members = aware_.members();
  for (std::size_t h = 0; h < H; ++h) {
    for (auto s : members) {
      tables_.vbar[tables_.hs(h, s)] = full_h;
      for (std::size_t a = 0; a < A; ++a) {
        tables_.q[tables_.sa(h, s, a)] = 0.0;
        tables_.qbar[tables_.sa(h, s, a)] = 0.0 + full_h;
        for (auto next : members) tables_.vbias[tables_.sas(h, s, a, next)] = full_h;
      }
    }
  }
  acc_ = AverageAccumulators::build(tables_, members);
  vbar_prev_ = tables_.vbar;

  const std::size_t pairs = H * S * A;
  counts_.assign(pairs, 0);
  sum_y_.assign(pairs, 0.0);
  sum_y2_.assign(pairs, 0.0);
  corr_sum_.assign(pairs, 0.0);
  if (params_.variance == VarianceProxy::weighted) {
    sum_w_.assign(pairs, 0.0);
    sum_wy_.assign(pairs, 0.0);
    sum_wy2_.assign(pairs, 0.0);
  }
}

std::size_t Learner::select_action(std::size_t h, std::size_t s) const {
  if (h >= params_.horizon) throw IndexError("select_action: step " + std::to_string(h) + " out of range");
  if (s >= params_.num_states) throw IndexError("select_action: state " + std::to_string(s) + " out of range");
  const std::size_t A = params_.num_actions;
  std::size_t best = 0;
  if (aware_.contains(s)) {
    const double* row = tables_.qbar.data() + tables_.sa(h, s, 0);
    for (std::size_t a = 1; a < A; ++a) {
      if (row[a] > row[best]) best = a;
    }
  } else {
    for (std::size_t a = 1; a < A; ++a) {
      if (acc_.q_avg(h, a) > acc_.q_avg(h, best)) best = a;
    }
  }
  return best;
}

double Learner::variance_proxy(std::size_t h, std::size_t s, std::size_t a) const {
  const std::size_t i = tables_.sa(h, s, a);
  const auto n = static_cast<double>(counts_[i]);
  if (counts_[i] == 0) return 0.0;
  if (params_.variance == VarianceProxy::weighted) {
    const double m = sum_wy_[i];
    return std::max(0.0, sum_wy2_[i] - 2.0 * m * sum_wy_[i] + m * m * sum_w_[i]);
  }
  const double mean = sum_y_[i] / n;
  return std::max(0.0, sum_y2_[i] / n - mean * mean);
}

double Learner::bonus(std::size_t h, std::size_t s, std::size_t a) const {
  const std::size_t i = tables_.sa(h, s, a);
  const auto H = static_cast<double>(params_.horizon);
  if (counts_[i] == 0 || !aware_.contains(s)) return H;
  const auto n = static_cast<double>(counts_[i]);
  const double zeta = params_.zeta;
  const double log_t = params_.log_t;
  const double w = variance_proxy(h, s, a);
  return 2.0 * std::sqrt(zeta * w / n) + 53.0 * H * H * H * zeta * log_t / n +
         corr_sum_[i] / (H * log_t * n);
}

DeterministicPolicy Learner::policy() const {
  const std::size_t S = params_.num_states;
  const std::size_t H = params_.horizon;
  DeterministicPolicy pi{S, H, std::vector<std::size_t>(H * S)};
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) pi.action_of[h * S + s] = select_action(h, s);
  }
  return pi;
}

double Learner::q_ring(std::size_t h, std::size_t s, std::size_t a) const {
  return aware_.contains(s) ? tables_.q[tables_.sa(h, s, a)] : acc_.q_avg(h, a);
}

double Learner::qbar_ring(std::size_t h, std::size_t s, std::size_t a) const {
  if (aware_.contains(s)) return tables_.qbar[tables_.sa(h, s, a)];
  return acc_.q_avg(h, a) + static_cast<double>(params_.horizon);
}

double Learner::vbar_ring(std::size_t h, std::size_t s) const {
  if (h >= params_.horizon) return 0.0;
  return aware_.contains(s) ? tables_.vbar[tables_.hs(h, s)] : acc_.vbar_avg(h);
}

double Learner::vbias_ring(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const {
  const bool row_aware = aware_.contains(s);
  const bool col_aware = aware_.contains(next);
  if (row_aware && col_aware) return tables_.vbias[tables_.sas(h, s, a, next)];
  if (row_aware) return acc_.row_avg(h, s, a);
  if (col_aware) return acc_.col_avg(h, a, next);
  return acc_.total_avg(h, a);
}

std::vector<double> Learner::ring_vbar() const {
  const std::size_t S = params_.num_states;
  std::vector<double> out((params_.horizon + 1) * S, 0.0);
  for (std::size_t h = 0; h < params_.horizon; ++h) {
    for (std::size_t s = 0; s < S; ++s) out[h * S + s] = vbar_ring(h, s);
  }
  return out;
}

std::vector<double> Learner::ring_vbar_prev() const {
  const std::size_t S = params_.num_states;
  std::vector<double> out = vbar_prev_;
  const auto members = aware_.members();
  for (std::size_t h = 0; h < params_.horizon; ++h) {
    double sum = 0.0;
    for (auto s : members) sum += vbar_prev_[h * S + s];
    const double avg = sum / static_cast<double>(members.size());
    for (std::size_t s = 0; s < S; ++s) {
      if (!aware_.contains(s)) out[h * S + s] = avg;
    }
  }
  return out;
}

UpdateSummary Learner::update_after_episode(const EpisodeTrace& trace, std::size_t t) {
  if (t != episode_ + 1) {
    throw ContractError("update_after_episode: expected episode " + std::to_string(episode_ + 1) +
                        ", got " + std::to_string(t));
  }
  const std::size_t H = params_.horizon;
  if (trace.size() != H) {
    throw ContractError("update_after_episode: trace has " + std::to_string(trace.size()) +
                        " steps, expected " + std::to_string(H));
  }
  for (std::size_t h = 0; h < H; ++h) {
    const auto& step = trace.steps[h];
    if (step.state >= params_.num_states || step.next_state >= params_.num_states ||
        step.action >= params_.num_actions) {
      throw ContractError("update_after_episode: trace entry out of range at h=" + std::to_string(h));
    }
    if (h > 0 && step.state != trace.steps[h - 1].next_state) {
      throw ContractError("update_after_episode: trace is not a connected trajectory");
    }
  }

  UpdateSummary out;
  const std::size_t old_count = aware_.count();
  out.new_states = aware_.observe_episode(trace, t);
  if (!out.new_states.empty()) {
    if (params_.mode == Mode::full_awareness) {
      throw InternalError("full-awareness learner admitted a new state");
    }
    const auto old_aware = aware_.members().first(old_count);
    std::optional<ExpansionSnapshot> snap;
    if (capture_expansions_) {
      snap.emplace();
      snap->t = t;
      snap->old_aware.assign(old_aware.begin(), old_aware.end());
      snap->new_states = out.new_states;
      snap->vbar_before = tables_.vbar;
    }
    expand(tables_, acc_, old_aware, out.new_states, static_cast<double>(H));
    if (snap) {
      snap->vbar_after = tables_.vbar;
      out.expansion = std::move(snap);
    }
  }

  std::copy(tables_.vbar.begin(), tables_.vbar.end(), vbar_prev_.begin());
  out.visits.reserve(H);
  for (std::size_t h = 0; h < H; ++h) visit(trace.steps[h], h, t, out);
  episode_ = t;
  return out;
}

void Learner::visit(const EpisodeTrace::Step& step, std::size_t h, std::size_t t,
                    UpdateSummary& out) {
  const std::size_t S = params_.num_states;
  const std::size_t A = params_.num_actions;
  const std::size_t s = step.state;
  const std::size_t a = step.action;
  const std::size_t next = step.next_state;
  const std::size_t i = tables_.sa(h, s, a);

  const std::uint64_t n = ++counts_[i];
  const auto c = learning_coefficients(n, params_.horizon);
  const double* prev_next_row = vbar_prev_.data() + (h + 1) * S;

  // Both reads precede the bias-value row update below. `next` is aware for
  // h + 1 < H (it is s_{h+1} of this trace); row H is identically zero.
  const double x = prev_next_row[next];
  const double b = vbias_ring(h, s, a, next);

  sum_y_[i] += x;
  sum_y2_[i] += x * x;
  if (params_.variance == VarianceProxy::weighted) {
    const double w = 1.0 / static_cast<double>(n);
    sum_w_[i] += w;
    sum_wy_[i] += w * x;
    sum_wy2_[i] += w * x * x;
  }
  corr_sum_[i] += c.gamma_ring * (b - x);

  const double q_old = tables_.q[i];
  const double q_new = c.alpha * (step.reward + x) + c.gamma * (x - b) + (1.0 - c.alpha) * q_old;
  tables_.q[i] = q_new;
  acc_.apply_q_delta(h, a, q_old, q_new);

  auto row = tables_.vbias_row(h, s, a);
  for (auto col : aware_.members()) {
    const double old_v = row[col];
    const double new_v = c.eta * prev_next_row[col] + (1.0 - c.eta) * old_v;
    row[col] = new_v;
    acc_.apply_vbias_delta(h, s, a, col, old_v, new_v);
  }

  const double beta = bonus(h, s, a);
  tables_.qbar[i] = q_new + beta;

  const double* qbar_row = tables_.qbar.data() + tables_.sa(h, s, 0);
  const double best = *std::max_element(qbar_row, qbar_row + A);
  const double hi = vbar_prev_[tables_.hs(h, s)];
  if (hi < 0.0) {
    std::ostringstream msg;
    msg << "clip bound inverted at h=" << h << ", s=" << s << ": upper " << hi << " < 0";
    throw InternalError(msg.str());
  }
  const double old_vbar = tables_.vbar[tables_.hs(h, s)];
  const double new_vbar = std::clamp(best, 0.0, hi);
  tables_.vbar[tables_.hs(h, s)] = new_vbar;
  acc_.apply_vbar_delta(h, old_vbar, new_vbar);

  out.visits.push_back({t, h, s, a, next, step.reward, static_cast<std::size_t>(n), c.alpha,
                        c.gamma, c.eta, beta});
}

std::size_t Learner::table_bytes() const {
  const std::size_t doubles = tables_.q.capacity() + tables_.qbar.capacity() +
                              tables_.vbar.capacity() + tables_.vbias.capacity() +
                              vbar_prev_.capacity() + sum_y_.capacity() + sum_y2_.capacity() +
                              corr_sum_.capacity() + sum_w_.capacity() + sum_wy_.capacity() +
                              sum_wy2_.capacity();
  const std::size_t S = aware_.num_states();
  return sizeof(double) * doubles + sizeof(std::uint64_t) * counts_.capacity() + acc_.bytes() +
         S * (sizeof(char) + 2 * sizeof(std::size_t));
}

std::size_t Learner::expected_table_bytes(const LearnerParams& p) {
  const std::size_t S = p.num_states, A = p.num_actions, H = p.horizon;
  const std::size_t pairs = H * S * A;
  const std::size_t stats = p.variance == VarianceProxy::weighted ? 6 : 3;
  const std::size_t doubles = 2 * pairs             // q, qbar
                              + 2 * (H + 1) * S     // vbar, vbar_prev
                              + pairs * S           // vbias
                              + stats * pairs       // per-pair sums
                              + H * A + H + pairs + H * A * S + H * A;  // accumulators
  return sizeof(double) * doubles + sizeof(std::uint64_t) * pairs +
         S * (sizeof(char) + 2 * sizeof(std::size_t));
}

}  // namespace uulab
