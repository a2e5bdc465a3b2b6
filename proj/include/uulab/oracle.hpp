#pragma once

#include <cstddef>
#include <vector>

#include "uulab/env.hpp"

namespace uulab {

/// Optimal values. vstar has H+1 rows; row H is identically zero.
struct ValueTables {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::vector<double> vstar;  // [h][s], h = 0..H
  std::vector<double> qstar;  // [h][s][a], h = 0..H-1

  double v(std::size_t h, std::size_t s) const { return vstar[h * num_states + s]; }
  double q(std::size_t h, std::size_t s, std::size_t a) const {
    return qstar[(h * num_states + s) * num_actions + a];
  }

  bool operator==(const ValueTables&) const = default;
};

/// Deterministic policy defined on the full state space.
struct DeterministicPolicy {
  std::size_t num_states = 0;
  std::size_t horizon = 0;
  std::vector<std::size_t> action_of;  // [h][s]

  std::size_t operator()(std::size_t h, std::size_t s) const {
    return action_of[h * num_states + s];
  }
};

/// V^pi with H+1 rows (last row zero).
struct PolicyValues {
  std::size_t num_states = 0;
  std::size_t horizon = 0;
  std::vector<double> v;

  double at(std::size_t h, std::size_t s) const { return v[h * num_states + s]; }
};

/// Backward induction; each step is parallel over states.
ValueTables optimal_values(const EnvSpec& env);

/// Policy evaluation by backward induction; parallel over states.
PolicyValues evaluate_policy(const EnvSpec& env, const DeterministicPolicy& policy);

/// Greedy policy on Q*, lowest action index on ties.
DeterministicPolicy greedy_policy(const ValueTables& tables);

/// V*_1(s1) - V^pi_1(s1). Differences in [-1e-9, 0) clamp to 0; anything
/// lower throws InternalError.
double regret_increment(const ValueTables& optimal, const PolicyValues& policy_values,
                        std::size_t initial_state);

/// Exhaustive search over all A^(H*S) deterministic policies. Throws
/// ContractError when that count exceeds 1e6.
ValueTables brute_force_optimal(const EnvSpec& env);

/// Single-threaded references for the kernels above; same arithmetic order,
/// so results are bitwise identical.
namespace serial {
ValueTables optimal_values(const EnvSpec& env);
PolicyValues evaluate_policy(const EnvSpec& env, const DeterministicPolicy& policy);
}  // namespace serial

}  // namespace uulab
