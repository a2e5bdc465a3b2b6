#include <limits>

#include "uulab/oracle.hpp"

namespace uulab::serial {

ValueTables optimal_values(const EnvSpec& env) {
  const std::size_t S = env.num_states;
  const std::size_t A = env.num_actions;
  const std::size_t H = env.horizon;
  ValueTables out{S, A, H, std::vector<double>((H + 1) * S, 0.0),
                  std::vector<double>(H * S * A, 0.0)};
  for (std::size_t step = H; step-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) {
        double value = 0.0;
        const auto row = env.transition_row(step, s, a);
        for (std::size_t k = 0; k < S; ++k) value += row[k] * out.vstar[(step + 1) * S + k];
        value = env.reward(step, s, a) + value;
        out.qstar[(step * S + s) * A + a] = value;
        if (value > best) best = value;
      }
      out.vstar[step * S + s] = best;
    }
  }
  return out;
}

PolicyValues evaluate_policy(const EnvSpec& env, const DeterministicPolicy& policy) {
  const std::size_t S = env.num_states;
  const std::size_t H = env.horizon;
  if (policy.num_states != S || policy.horizon != H) {
    throw ContractError("evaluate_policy: policy shape does not match env");
  }
  PolicyValues out{S, H, std::vector<double>((H + 1) * S, 0.0)};
  for (std::size_t step = H; step-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t a = policy(step, s);
      double value = 0.0;
      const auto row = env.transition_row(step, s, a);
      for (std::size_t k = 0; k < S; ++k) value += row[k] * out.v[(step + 1) * S + k];
      out.v[step * S + s] = env.reward(step, s, a) + value;
    }
  }
  return out;
}

}  // namespace uulab::serial
