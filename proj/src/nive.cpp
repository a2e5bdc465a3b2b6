#include "uulab/nive.hpp"

#include <algorithm>
#include <cmath>

#include "uulab/errors.hpp"

namespace uulab {

LearnerTables LearnerTables::allocate(std::size_t S, std::size_t A, std::size_t H) {
  LearnerTables t;
  t.num_states = S;
  t.num_actions = A;
  t.horizon = H;
  t.q.assign(H * S * A, 0.0);
  t.qbar.assign(H * S * A, 0.0);
  t.vbar.assign((H + 1) * S, 0.0);
  t.vbias.assign(H * S * A * S, 0.0);
  return t;
}

NiveAverages averages_from_scratch(const LearnerTables& t, std::span<const std::size_t> aware) {
  if (aware.empty()) throw ContractError("averages_from_scratch: aware set is empty");
  const std::size_t S = t.num_states, A = t.num_actions, H = t.horizon;
  const auto n = static_cast<double>(aware.size());
  NiveAverages out{S, A, H, std::vector<double>(H * A, 0.0), std::vector<double>(H, 0.0),
                   std::vector<double>(H * S * A, 0.0), std::vector<double>(H * A * S, 0.0),
                   std::vector<double>(H * A, 0.0)};
  for (std::size_t h = 0; h < H; ++h) {
    double vsum = 0.0;
    for (auto s : aware) vsum += t.vbar[t.hs(h, s)];
    out.vbar_avg[h] = vsum / n;
    for (std::size_t a = 0; a < A; ++a) {
      double qsum = 0.0;
      double total = 0.0;
      for (auto s : aware) qsum += t.q[t.sa(h, s, a)];
      out.q_avg[h * A + a] = qsum / n;
      for (std::size_t s = 0; s < S; ++s) {
        double row = 0.0;
        for (auto next : aware) row += t.vbias[t.sas(h, s, a, next)];
        out.row_avg[(h * S + s) * A + a] = row / n;
      }
      for (std::size_t next = 0; next < S; ++next) {
        double col = 0.0;
        for (auto s : aware) col += t.vbias[t.sas(h, s, a, next)];
        out.col_avg[(h * A + a) * S + next] = col / n;
      }
      for (auto s : aware) {
        for (auto next : aware) total += t.vbias[t.sas(h, s, a, next)];
      }
      out.total_avg[h * A + a] = total / (n * n);
    }
  }
  return out;
}

AverageAccumulators AverageAccumulators::build(const LearnerTables& t,
                                               std::span<const std::size_t> aware) {
  if (aware.empty()) throw ContractError("AverageAccumulators: aware set is empty");
  AverageAccumulators acc;
  acc.S_ = t.num_states;
  acc.A_ = t.num_actions;
  acc.H_ = t.horizon;
  acc.count_ = aware.size();
  const std::size_t S = acc.S_, A = acc.A_, H = acc.H_;
  acc.q_sum_.assign(H * A, 0.0);
  acc.vbar_sum_.assign(H, 0.0);
  acc.row_sum_.assign(H * S * A, 0.0);
  acc.col_sum_.assign(H * A * S, 0.0);
  acc.total_sum_.assign(H * A, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    for (auto s : aware) {
      acc.vbar_sum_[h] += t.vbar[t.hs(h, s)];
      for (std::size_t a = 0; a < A; ++a) {
        acc.q_sum_[h * A + a] += t.q[t.sa(h, s, a)];
        for (auto next : aware) {
          const double v = t.vbias[t.sas(h, s, a, next)];
          acc.row_sum_[(h * S + s) * A + a] += v;
          acc.col_sum_[(h * A + a) * S + next] += v;
          acc.total_sum_[h * A + a] += v;
        }
      }
    }
  }
  return acc;
}

void AverageAccumulators::admit(const LearnerTables& t, std::span<const std::size_t> old_aware,
                                std::span<const std::size_t> fresh) {
  if (old_aware.size() != count_) {
    throw ContractError("admit: old aware set does not match accumulated count");
  }
  if (fresh.empty()) return;
  const std::size_t S = S_, A = A_;
  for (std::size_t h = 0; h < H_; ++h) {
    for (auto s : fresh) vbar_sum_[h] += t.vbar[t.hs(h, s)];
    for (std::size_t a = 0; a < A; ++a) {
      auto& total = total_sum_[h * A + a];
      for (auto s : fresh) q_sum_[h * A + a] += t.q[t.sa(h, s, a)];
      // Old rows gain the fresh columns; old columns gain the fresh rows.
      for (auto s : old_aware) {
        double extra = 0.0;
        for (auto next : fresh) extra += t.vbias[t.sas(h, s, a, next)];
        row_sum_[(h * S + s) * A + a] += extra;
        total += extra;
      }
      for (auto next : old_aware) {
        double extra = 0.0;
        for (auto s : fresh) extra += t.vbias[t.sas(h, s, a, next)];
        col_sum_[(h * A + a) * S + next] += extra;
      }
      // Fresh rows and columns are summed in full.
      for (auto s : fresh) {
        double row = 0.0;
        for (auto next : old_aware) row += t.vbias[t.sas(h, s, a, next)];
        for (auto next : fresh) row += t.vbias[t.sas(h, s, a, next)];
        row_sum_[(h * S + s) * A + a] = row;
        total += row;
      }
      for (auto next : fresh) {
        double col = 0.0;
        for (auto s : old_aware) col += t.vbias[t.sas(h, s, a, next)];
        for (auto s : fresh) col += t.vbias[t.sas(h, s, a, next)];
        col_sum_[(h * A + a) * S + next] = col;
      }
    }
  }
  count_ += fresh.size();
}

double AverageAccumulators::audit(const LearnerTables& t, std::span<const std::size_t> aware) const {
  if (aware.size() != count_) return INFINITY;
  const auto exact = averages_from_scratch(t, aware);
  double worst = 0.0;
  auto track = [&worst](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  for (std::size_t h = 0; h < H_; ++h) {
    track(vbar_avg(h), exact.vbar_avg[h]);
    for (std::size_t a = 0; a < A_; ++a) {
      track(q_avg(h, a), exact.q_avg[h * A_ + a]);
      track(total_avg(h, a), exact.total_avg[h * A_ + a]);
      for (auto s : aware) {
        track(row_avg(h, s, a), exact.row_avg[(h * S_ + s) * A_ + a]);
        track(col_avg(h, a, s), exact.col_avg[(h * A_ + a) * S_ + s]);
      }
    }
  }
  return worst;
}

std::size_t AverageAccumulators::bytes() const {
  return sizeof(double) * (q_sum_.capacity() + vbar_sum_.capacity() + row_sum_.capacity() +
                           col_sum_.capacity() + total_sum_.capacity());
}

void expand(LearnerTables& t, AverageAccumulators& acc, std::span<const std::size_t> old_aware,
            std::span<const std::size_t> fresh, double unvisited_bonus) {
  if (old_aware.empty()) throw ContractError("expand: previous aware set is empty");
  if (fresh.empty()) return;
  std::vector<char> is_old(t.num_states, 0);
  for (auto s : old_aware) is_old[s] = 1;
  for (auto s : fresh) {
    if (s >= t.num_states) throw IndexError("expand: state out of range");
    if (is_old[s]) throw ContractError("expand: new state already aware");
  }

  const std::size_t A = t.num_actions;
  for (std::size_t h = 0; h < t.horizon; ++h) {
    const double vbar_avg = acc.vbar_avg(h);
    for (auto s : fresh) t.vbar[t.hs(h, s)] = vbar_avg;
    for (std::size_t a = 0; a < A; ++a) {
      const double q_avg = acc.q_avg(h, a);
      const double total_avg = acc.total_avg(h, a);
      for (auto s : fresh) {
        t.q[t.sa(h, s, a)] = q_avg;
        t.qbar[t.sa(h, s, a)] = q_avg + unvisited_bonus;
      }
      for (auto s : old_aware) {
        const double row_avg = acc.row_avg(h, s, a);
        for (auto next : fresh) t.vbias[t.sas(h, s, a, next)] = row_avg;
      }
      for (auto s : fresh) {
        for (auto next : old_aware) t.vbias[t.sas(h, s, a, next)] = acc.col_avg(h, a, next);
        for (auto next : fresh) t.vbias[t.sas(h, s, a, next)] = total_avg;
      }
    }
  }
  acc.admit(t, old_aware, fresh);
}

}  // namespace uulab
