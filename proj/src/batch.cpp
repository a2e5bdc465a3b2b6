#include <algorithm>
#include <cmath>
#include <sstream>

#include "uulab/learner.hpp"

namespace uulab {

namespace {

using PairVisits = std::vector<std::vector<const VisitRecord*>>;

PairVisits group_by_pair(const VisitLog& log, BatchDims d) {
  if (!log.enabled) throw UnavailableError("visit log was not recorded for this run");
  PairVisits out(d.horizon * d.num_states * d.num_actions);
  for (const auto& rec : log.records) {
    if (rec.h >= d.horizon || rec.s >= d.num_states || rec.a >= d.num_actions ||
        rec.s_next >= d.num_states) {
      throw ParseError("visit log entry out of range at t=" + std::to_string(rec.t));
    }
    out[(rec.h * d.num_states + rec.s) * d.num_actions + rec.a].push_back(&rec);
  }
  return out;
}

/// Weights of visits 1..m in the bias-value table right after visit m.
std::vector<double> eta_weights(std::size_t m, std::size_t H) {
  std::vector<double> w(m);
  double tail = 1.0;
  for (std::size_t j = m; j >= 1; --j) {
    const double eta = learning_coefficients(j, H).eta;
    w[j - 1] = eta * tail;
    tail *= 1.0 - eta;
  }
  return w;
}

double next_value(const VbarHistory& hist, const VisitRecord& rec, std::size_t next_state) {
  return hist.at(rec.t, rec.h + 1, next_state);
}

/// Bias-value entry at `col` as it stood just before visit k (1-based).
double bias_before(const std::vector<const VisitRecord*>& visits, std::size_t k,
                   const VbarHistory& hist, std::size_t H, std::size_t col) {
  if (k == 1) return 0.0;
  const auto w = eta_weights(k - 1, H);
  double v = 0.0;
  for (std::size_t j = 0; j + 1 < k; ++j) v += w[j] * next_value(hist, *visits[j], col);
  return v;
}

void check_history(const VbarHistory& hist, const VisitLog& log, BatchDims d) {
  if (hist.num_states != d.num_states || hist.horizon != d.horizon) {
    throw ContractError("V-bar history shape does not match dimensions");
  }
  for (const auto& rec : log.records) {
    if (rec.t == 0 || rec.t > hist.snapshots.size()) {
      throw UnavailableError("V-bar history lacks episode " + std::to_string(rec.t));
    }
  }
}

}  // namespace

std::vector<double> recompute_q_batch(const VisitLog& log, const VbarHistory& history,
                                      BatchDims d, std::span<const double> fallback) {
  const auto visits = group_by_pair(log, d);
  check_history(history, log, d);
  const std::size_t H = d.horizon;
  std::vector<double> q(fallback.begin(), fallback.end());
  q.resize(H * d.num_states * d.num_actions, 0.0);
  for (std::size_t i = 0; i < visits.size(); ++i) {
    const auto& pv = visits[i];
    if (pv.empty()) continue;
    double total = 0.0;
    for (std::size_t k = 1; k <= pv.size(); ++k) {
      const auto& rec = *pv[k - 1];
      const double x = next_value(history, rec, rec.s_next);
      const double b = bias_before(pv, k, history, H, rec.s_next);
      const double gamma_ring = learning_coefficients(k, H).gamma_ring;
      total += rec.r + x + gamma_ring * (x - b);
    }
    q[i] = total / static_cast<double>(pv.size());
  }
  return q;
}

VbiasBatch recompute_vbias_batch(const VisitLog& log, const VbarHistory& history, BatchDims d,
                                 std::span<const double> fallback) {
  const auto visits = group_by_pair(log, d);
  check_history(history, log, d);
  const std::size_t S = d.num_states;
  VbiasBatch out;
  out.vbias.assign(fallback.begin(), fallback.end());
  out.vbias.resize(d.horizon * S * d.num_actions * S, 0.0);
  for (std::size_t i = 0; i < visits.size(); ++i) {
    const auto& pv = visits[i];
    if (pv.empty()) continue;
    const auto w = eta_weights(pv.size(), d.horizon);
    double weight_sum = 0.0;
    for (double x : w) weight_sum += x;
    const double err = std::abs(weight_sum - 1.0);
    out.max_weight_error = std::max(out.max_weight_error, err);
    if (err > 1e-12) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "bias-value weights sum to " << weight_sum << " for pair index " << i;
      throw InternalError(msg.str());
    }
    for (std::size_t col = 0; col < S; ++col) {
      double v = 0.0;
      for (std::size_t j = 0; j < pv.size(); ++j) v += w[j] * next_value(history, *pv[j], col);
      out.vbias[i * S + col] = v;
    }
  }
  return out;
}

StatsBatch recompute_stats_batch(const VisitLog& log, const VbarHistory& history, BatchDims d) {
  const auto visits = group_by_pair(log, d);
  check_history(history, log, d);
  const std::size_t pairs = visits.size();
  StatsBatch out{std::vector<std::uint64_t>(pairs, 0), std::vector<double>(pairs, 0.0),
                 std::vector<double>(pairs, 0.0), std::vector<double>(pairs, 0.0)};
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& pv = visits[i];
    out.counts[i] = pv.size();
    for (std::size_t k = 1; k <= pv.size(); ++k) {
      const auto& rec = *pv[k - 1];
      const double x = next_value(history, rec, rec.s_next);
      const double b = bias_before(pv, k, history, d.horizon, rec.s_next);
      out.sum_y[i] += x;
      out.sum_y2[i] += x * x;
      out.corr_sum[i] += learning_coefficients(k, d.horizon).gamma_ring * (b - x);
    }
  }
  return out;
}

std::vector<double> recompute_bonus_batch(const VisitLog& log, const VbarHistory& history,
                                          const LearnerParams& params) {
  const BatchDims d{params.num_states, params.num_actions, params.horizon};
  const auto visits = group_by_pair(log, d);
  check_history(history, log, d);
  const auto H = static_cast<double>(params.horizon);
  std::vector<double> out(log.records.size(), 0.0);
  const VisitRecord* base = log.records.data();
  for (const auto& pv : visits) {
    double sy = 0.0, sy2 = 0.0, corr = 0.0, sw = 0.0, swy = 0.0, swy2 = 0.0;
    for (std::size_t k = 1; k <= pv.size(); ++k) {
      const auto& rec = *pv[k - 1];
      const double x = next_value(history, rec, rec.s_next);
      const double b = bias_before(pv, k, history, params.horizon, rec.s_next);
      const auto n = static_cast<double>(k);
      sy += x;
      sy2 += x * x;
      sw += 1.0 / n;
      swy += x / n;
      swy2 += x * x / n;
      corr += learning_coefficients(k, params.horizon).gamma_ring * (b - x);
      double w;
      if (params.variance == VarianceProxy::weighted) {
        w = std::max(0.0, swy2 - 2.0 * swy * swy + swy * swy * sw);
      } else {
        const double mean = sy / n;
        w = std::max(0.0, sy2 / n - mean * mean);
      }
      out[static_cast<std::size_t>(pv[k - 1] - base)] =
          2.0 * std::sqrt(params.zeta * w / n) + 53.0 * H * H * H * params.zeta * params.log_t / n +
          corr / (H * params.log_t * n);
    }
  }
  return out;
}

double weighted_variance_batch(const VisitLog& log, const VbarHistory& history, std::size_t h,
                               std::size_t s, std::size_t a) {
  if (!log.enabled) throw UnavailableError("visit log was not recorded for this run");
  std::vector<double> ys;
  for (const auto& rec : log.records) {
    if (rec.h == h && rec.s == s && rec.a == a) ys.push_back(next_value(history, rec, rec.s_next));
  }
  double mean = 0.0;
  for (std::size_t l = 0; l < ys.size(); ++l) mean += ys[l] / static_cast<double>(l + 1);
  double w = 0.0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double d = ys[k] - mean;
    w += d * d / static_cast<double>(k + 1);
  }
  return w;
}

}  // namespace uulab
