#include "uulab/oracle.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace uulab {

namespace {

double expected_next(std::span<const double> row, const double* next_values) {
  double acc = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) acc += row[k] * next_values[k];
  return acc;
}

}  // namespace

ValueTables optimal_values(const EnvSpec& env) {
  const std::size_t S = env.num_states;
  const std::size_t A = env.num_actions;
  const std::size_t H = env.horizon;
  ValueTables out{S, A, H, std::vector<double>((H + 1) * S, 0.0),
                  std::vector<double>(H * S * A, 0.0)};
  for (std::size_t step = H; step-- > 0;) {
    const double* next = out.vstar.data() + (step + 1) * S;
    double* v = out.vstar.data() + step * S;
    double* q = out.qstar.data() + step * S * A;
    const auto states = static_cast<std::ptrdiff_t>(S);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < states; ++si) {
      const auto s = static_cast<std::size_t>(si);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) {
        const double value = env.reward(step, s, a) + expected_next(env.transition_row(step, s, a), next);
        q[s * A + a] = value;
        if (value > best) best = value;
      }
      v[s] = best;
    }
  }
  return out;
}

PolicyValues evaluate_policy(const EnvSpec& env, const DeterministicPolicy& policy) {
  const std::size_t S = env.num_states;
  const std::size_t H = env.horizon;
  if (policy.num_states != S || policy.horizon != H || policy.action_of.size() != H * S) {
    throw ContractError("evaluate_policy: policy shape does not match env");
  }
  PolicyValues out{S, H, std::vector<double>((H + 1) * S, 0.0)};
  for (std::size_t step = H; step-- > 0;) {
    const double* next = out.v.data() + (step + 1) * S;
    double* v = out.v.data() + step * S;
    const auto states = static_cast<std::ptrdiff_t>(S);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < states; ++si) {
      const auto s = static_cast<std::size_t>(si);
      const std::size_t a = policy(step, s);
      v[s] = env.reward(step, s, a) + expected_next(env.transition_row(step, s, a), next);
    }
  }
  return out;
}

DeterministicPolicy greedy_policy(const ValueTables& tables) {
  const std::size_t S = tables.num_states;
  const std::size_t A = tables.num_actions;
  DeterministicPolicy policy{S, tables.horizon, std::vector<std::size_t>(tables.horizon * S, 0)};
  for (std::size_t h = 0; h < tables.horizon; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < A; ++a) {
        if (tables.q(h, s, a) > tables.q(h, s, best)) best = a;
      }
      policy.action_of[h * S + s] = best;
    }
  }
  return policy;
}

double regret_increment(const ValueTables& optimal, const PolicyValues& policy_values,
                        std::size_t initial_state) {
  const double gap = optimal.v(0, initial_state) - policy_values.at(0, initial_state);
  if (gap >= 0.0) return gap;
  if (gap >= -1e-9) return 0.0;
  std::ostringstream msg;
  msg.precision(17);
  msg << "policy value exceeds the optimum by " << -gap;
  throw InternalError(msg.str());
}

ValueTables brute_force_optimal(const EnvSpec& env) {
  const std::size_t S = env.num_states;
  const std::size_t A = env.num_actions;
  const std::size_t H = env.horizon;
  const std::size_t slots = H * S;
  constexpr double kLimit = 1e6;
  if (static_cast<double>(slots) * std::log(static_cast<double>(A)) > std::log(kLimit) + 1e-12) {
    throw ContractError("brute_force_optimal: A^(H*S) exceeds 1e6");
  }
  std::size_t total = 1;
  for (std::size_t i = 0; i < slots; ++i) total *= A;

  ValueTables best{S, A, H, std::vector<double>((H + 1) * S, 0.0),
                   std::vector<double>(H * S * A, -std::numeric_limits<double>::infinity())};
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) best.vstar[h * S + s] = -std::numeric_limits<double>::infinity();
  }

  DeterministicPolicy policy{S, H, std::vector<std::size_t>(slots, 0)};
  std::vector<double> v((H + 1) * S);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t i = 0; i < slots; ++i) {
      policy.action_of[i] = rest % A;
      rest /= A;
    }
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t step = H; step-- > 0;) {
      const double* next = v.data() + (step + 1) * S;
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
          double qa = env.reward(step, s, a);
          const auto row = env.transition_row(step, s, a);
          for (std::size_t k = 0; k < S; ++k) qa += row[k] * next[k];
          auto& slot = best.qstar[(step * S + s) * A + a];
          if (qa > slot) slot = qa;
          if (a == policy(step, s)) v[step * S + s] = qa;
        }
        auto& vs = best.vstar[step * S + s];
        if (v[step * S + s] > vs) vs = v[step * S + s];
      }
    }
  }
  return best;
}

}  // namespace uulab
