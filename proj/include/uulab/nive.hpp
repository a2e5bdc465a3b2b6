#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace uulab {

/// The four value tables NIVE expands, stored densely over the full state
/// space. Entries at unaware states are storage only; they carry no meaning
/// until the state is admitted.
struct LearnerTables {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::vector<double> q;      // [h][s][a]
  std::vector<double> qbar;   // [h][s][a]
  std::vector<double> vbar;   // [h][s], h = 0..H (row H stays 0)
  std::vector<double> vbias;  // [h][s][a][s']

  static LearnerTables allocate(std::size_t S, std::size_t A, std::size_t H);

  std::size_t sa(std::size_t h, std::size_t s, std::size_t a) const {
    return (h * num_states + s) * num_actions + a;
  }
  std::size_t hs(std::size_t h, std::size_t s) const { return h * num_states + s; }
  std::size_t sas(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const {
    return sa(h, s, a) * num_states + next;
  }

  std::span<double> vbias_row(std::size_t h, std::size_t s, std::size_t a) {
    return {vbias.data() + sa(h, s, a) * num_states, num_states};
  }
  std::span<const double> vbias_row(std::size_t h, std::size_t s, std::size_t a) const {
    return {vbias.data() + sa(h, s, a) * num_states, num_states};
  }
};

/// Exact averages over an aware set; the reference the running sums are
/// audited against.
struct NiveAverages {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::vector<double> q_avg;      // [h][a]
  std::vector<double> vbar_avg;   // [h]
  std::vector<double> row_avg;    // [h][s][a], mean over aware s'
  std::vector<double> col_avg;    // [h][a][s'], mean over aware s
  std::vector<double> total_avg;  // [h][a]
};

NiveAverages averages_from_scratch(const LearnerTables& tables, std::span<const std::size_t> aware);

/// Running sums behind the five NIVE averages, kept in step with every table
/// write so each average is O(1) to read.
class AverageAccumulators {
 public:
  AverageAccumulators() = default;

  /// Sums by full summation over `aware`. Throws ContractError if empty.
  static AverageAccumulators build(const LearnerTables& tables, std::span<const std::size_t> aware);

  std::size_t count() const { return count_; }

  double q_avg(std::size_t h, std::size_t a) const { return q_sum_[h * A_ + a] / n(); }
  double vbar_avg(std::size_t h) const { return h < H_ ? vbar_sum_[h] / n() : 0.0; }
  double row_avg(std::size_t h, std::size_t s, std::size_t a) const {
    return row_sum_[(h * S_ + s) * A_ + a] / n();
  }
  double col_avg(std::size_t h, std::size_t a, std::size_t next) const {
    return col_sum_[(h * A_ + a) * S_ + next] / n();
  }
  double total_avg(std::size_t h, std::size_t a) const {
    return total_sum_[h * A_ + a] / (n() * n());
  }

  void apply_q_delta(std::size_t h, std::size_t a, double old_value, double new_value) {
    q_sum_[h * A_ + a] += new_value - old_value;
  }
  void apply_vbar_delta(std::size_t h, double old_value, double new_value) {
    if (h < H_) vbar_sum_[h] += new_value - old_value;
  }
  void apply_vbias_delta(std::size_t h, std::size_t s, std::size_t a, std::size_t next,
                         double old_value, double new_value) {
    const double d = new_value - old_value;
    row_sum_[(h * S_ + s) * A_ + a] += d;
    col_sum_[(h * A_ + a) * S_ + next] += d;
    total_sum_[h * A_ + a] += d;
  }

  /// Extends the sums to cover `fresh`, whose table entries have already
  /// been written. `old_aware` is the set the sums covered before.
  void admit(const LearnerTables& tables, std::span<const std::size_t> old_aware,
             std::span<const std::size_t> fresh);

  /// Largest |running average - exact average| over all five families.
  double audit(const LearnerTables& tables, std::span<const std::size_t> aware) const;

  std::size_t bytes() const;

 private:
  double n() const { return static_cast<double>(count_); }

  std::size_t S_ = 0, A_ = 0, H_ = 0;
  std::size_t count_ = 0;
  std::vector<double> q_sum_;
  std::vector<double> vbar_sum_;
  std::vector<double> row_sum_;
  std::vector<double> col_sum_;
  std::vector<double> total_sum_;
};

/// NIVE expansion of Q, V-bar and the bias-value tables onto `fresh`, using
/// averages over `old_aware`. Q-bar at fresh entries becomes Q + `unvisited_bonus`.
/// Throws ContractError if old_aware is empty or overlaps fresh.
void expand(LearnerTables& tables, AverageAccumulators& acc, std::span<const std::size_t> old_aware,
            std::span<const std::size_t> fresh, double unvisited_bonus);

}  // namespace uulab
