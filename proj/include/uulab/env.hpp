#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uulab/errors.hpp"

namespace uulab {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream). Streams with different ids do
/// not share state, so consumers on one stream cannot perturb another.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits; portable across stdlibs.
double uniform01(Rng& rng);

/// Ground-truth episodic MDP. Steps are 0-based (h = 0..H-1).
///
/// Transitions are stored densely as [h][s][a][s'], or as a single shared
/// [s][a][s'] block when `stationary` is set. Immutable once validated, so a
/// single instance can be shared by concurrent runs.
struct EnvSpec {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::size_t episodes = 0;
  double confidence = 0.1;
  std::size_t initial_state = 0;
  bool stationary = false;
  std::vector<std::size_t> initial_aware;  // sorted, unique
  std::vector<double> rewards;             // [h][s][a]
  std::vector<double> transitions;         // [h or 0][s][a][s']

  /// Zero tables of the right shape; S0 = {initial_state}.
  static EnvSpec zeros(std::size_t S, std::size_t A, std::size_t H, std::size_t T,
                       double delta, bool stationary = false);

  double reward(std::size_t h, std::size_t s, std::size_t a) const {
    return rewards[(h * num_states + s) * num_actions + a];
  }
  double& reward(std::size_t h, std::size_t s, std::size_t a) {
    return rewards[(h * num_states + s) * num_actions + a];
  }

  std::span<const double> transition_row(std::size_t h, std::size_t s, std::size_t a) const {
    return {transitions.data() + row_offset(h, s, a), num_states};
  }
  std::span<double> transition_row(std::size_t h, std::size_t s, std::size_t a) {
    return {transitions.data() + row_offset(h, s, a), num_states};
  }

  std::size_t transition_blocks() const { return stationary ? 1 : horizon; }

  /// Throws ValidationError naming the first broken invariant.
  void validate() const;

  bool operator==(const EnvSpec&) const = default;

 private:
  std::size_t row_offset(std::size_t h, std::size_t s, std::size_t a) const {
    const std::size_t block = stationary ? 0 : h;
    return ((block * num_states + s) * num_actions + a) * num_states;
  }
};

/// One rollout. steps[h] holds (s_h, a_h, r_h, s_{h+1}).
struct EpisodeTrace {
  struct Step {
    std::size_t state;
    std::size_t action;
    double reward;
    std::size_t next_state;
    bool operator==(const Step&) const = default;
  };
  std::vector<Step> steps;

  std::size_t size() const { return steps.size(); }
  bool operator==(const EpisodeTrace&) const = default;
};

std::size_t sample_transition(const EnvSpec& env, std::size_t h, std::size_t s, std::size_t a,
                              Rng& rng);

template <class Policy>
EpisodeTrace rollout_episode(const EnvSpec& env, Policy&& policy, Rng& rng) {
  EpisodeTrace trace;
  trace.steps.reserve(env.horizon);
  std::size_t s = env.initial_state;
  for (std::size_t h = 0; h < env.horizon; ++h) {
    const std::size_t a = policy(h, s);
    if (a >= env.num_actions) {
      throw ContractError("policy returned action " + std::to_string(a) + " at h=" +
                          std::to_string(h) + ", s=" + std::to_string(s) + " (A=" +
                          std::to_string(env.num_actions) + ")");
    }
    const std::size_t next = sample_transition(env, h, s, a, rng);
    trace.steps.push_back({s, a, env.reward(h, s, a), next});
    s = next;
  }
  return trace;
}

/// floor(sqrt(n)) without floating-point rounding surprises.
std::size_t isqrt(std::size_t n);

/// Minimal transition probability required by the dense-transition
/// assumption: 1 - (delta/3)^(1 / (H * floor(sqrt(T)))).
double transition_floor(double delta, std::size_t H, std::size_t T);

/// Dense random env: every row is theta * 1 + (1 - S theta) * q with q a
/// random distribution; rewards uniform in [0,1]. Throws InfeasibleError if
/// S * theta > 1.
EnvSpec generate_dense_env(std::size_t S, std::size_t A, std::size_t H, std::size_t T,
                           double delta, Rng& rng, bool stationary = false);

/// Same transitions as generate_dense_env, but the home state s1 pays reward 1
/// everywhere and every other state draws rewards uniformly in [0, cap].
/// Tilts sampled envs toward satisfying the homeland condition.
EnvSpec generate_homeland_env(std::size_t S, std::size_t A, std::size_t H, std::size_t T,
                              double delta, Rng& rng, double cap = 0.3);

/// All rewards 1, uniform transitions.
EnvSpec generate_constant_reward_env(std::size_t S, std::size_t A, std::size_t H,
                                     std::size_t T = 100, double delta = 0.1);

struct AssumptionReport {
  bool holds;
  double min_prob;
  double theta;
};

AssumptionReport check_assumption_transitions(const EnvSpec& env);

struct ValueTables;

struct HomelandViolation {
  std::size_t h;
  std::size_t state;
  /// Action for Q* violations; npos for V* violations.
  std::size_t action;
  double value;
  double aware_average;
};

struct HomelandReport {
  bool holds = true;
  std::vector<HomelandViolation> violations;
};

/// Homeland condition against optimal tables: every unaware state's Q* and V*
/// are at most the aware-set average, at every step.
HomelandReport check_homeland(const EnvSpec& env, const ValueTables& optimal,
                              std::span<const std::size_t> aware);

void save_env(const EnvSpec& env, const std::filesystem::path& path);
EnvSpec load_env(const std::filesystem::path& path);
std::string env_to_json(const EnvSpec& env);
/// `origin` is used in error messages only.
EnvSpec env_from_json(const std::string& text, const std::string& origin = "<string>");

}  // namespace uulab
