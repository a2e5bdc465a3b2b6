#include "uulab/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "uulab/oracle.hpp"

namespace uulab {

namespace {

constexpr int kSchemaVersion = 1;
constexpr double kRowSumTolerance = 1e-12;

std::string idx(std::size_t h, std::size_t s, std::size_t a) {
  return "[" + std::to_string(h) + "][" + std::to_string(s) + "][" + std::to_string(a) + "]";
}

void fill_dense_transitions(EnvSpec& env, double theta, Rng& rng) {
  const std::size_t S = env.num_states;
  const double spread = 1.0 - static_cast<double>(S) * theta;
  std::vector<double> q(S);
  for (std::size_t h = 0; h < env.transition_blocks(); ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < env.num_actions; ++a) {
        // Flat Dirichlet via normalized exponentials.
        double total = 0.0;
        for (auto& x : q) {
          x = -std::log1p(-uniform01(rng));
          total += x;
        }
        auto row = env.transition_row(h, s, a);
        for (std::size_t k = 0; k < S; ++k) row[k] = theta + spread * (q[k] / total);
      }
    }
  }
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

EnvSpec EnvSpec::zeros(std::size_t S, std::size_t A, std::size_t H, std::size_t T, double delta,
                       bool stationary) {
  if (S == 0 || A == 0 || H == 0 || T == 0) {
    throw ContractError("EnvSpec dimensions must be positive");
  }
  EnvSpec env;
  env.num_states = S;
  env.num_actions = A;
  env.horizon = H;
  env.episodes = T;
  env.confidence = delta;
  env.initial_state = 0;
  env.stationary = stationary;
  env.initial_aware = {0};
  env.rewards.assign(H * S * A, 0.0);
  env.transitions.assign(env.transition_blocks() * S * A * S, 0.0);
  return env;
}

void EnvSpec::validate() const {
  if (num_states == 0 || num_actions == 0 || horizon == 0 || episodes == 0) {
    throw ValidationError("S, A, H and T must all be positive");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ValidationError("delta must lie in (0,1), got " + std::to_string(confidence));
  }
  if (initial_state >= num_states) {
    throw ValidationError("initial_state " + std::to_string(initial_state) + " out of range");
  }
  if (initial_aware.empty()) throw ValidationError("initial_aware is empty");
  for (std::size_t i = 0; i < initial_aware.size(); ++i) {
    if (initial_aware[i] >= num_states) {
      throw ValidationError("initial_aware entry " + std::to_string(initial_aware[i]) +
                            " out of range");
    }
    if (i > 0 && initial_aware[i] <= initial_aware[i - 1]) {
      throw ValidationError("initial_aware must be sorted and free of duplicates");
    }
  }
  if (!std::binary_search(initial_aware.begin(), initial_aware.end(), initial_state)) {
    throw ValidationError("initial_aware must contain initial_state");
  }
  if (rewards.size() != horizon * num_states * num_actions) {
    throw ValidationError("rewards table has wrong size");
  }
  if (transitions.size() != transition_blocks() * num_states * num_actions * num_states) {
    throw ValidationError("transitions table has wrong size");
  }
  for (std::size_t h = 0; h < horizon; ++h) {
    for (std::size_t s = 0; s < num_states; ++s) {
      for (std::size_t a = 0; a < num_actions; ++a) {
        const double r = reward(h, s, a);
        if (!(r >= 0.0 && r <= 1.0)) {
          throw ValidationError("reward" + idx(h, s, a) + " = " + std::to_string(r) +
                                " outside [0,1]");
        }
      }
    }
  }
  for (std::size_t h = 0; h < transition_blocks(); ++h) {
    for (std::size_t s = 0; s < num_states; ++s) {
      for (std::size_t a = 0; a < num_actions; ++a) {
        double sum = 0.0;
        for (double p : transition_row(h, s, a)) {
          if (!(p >= 0.0)) {
            throw ValidationError("transition" + idx(h, s, a) + " has a negative or NaN entry");
          }
          sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
          std::ostringstream msg;
          msg.precision(17);
          msg << "transition" << idx(h, s, a) << " sums to " << sum << ", not 1";
          throw ValidationError(msg.str());
        }
      }
    }
  }
}

std::size_t sample_transition(const EnvSpec& env, std::size_t h, std::size_t s, std::size_t a,
                              Rng& rng) {
  if (h >= env.horizon) {
    throw IndexError("step " + std::to_string(h) + " out of range (H=" +
                     std::to_string(env.horizon) + ")");
  }
  if (s >= env.num_states) throw IndexError("state " + std::to_string(s) + " out of range");
  if (a >= env.num_actions) throw IndexError("action " + std::to_string(a) + " out of range");
  const auto row = env.transition_row(h, s, a);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] <= 0.0) continue;
    cumulative += row[k];
    last_positive = k;
    if (u < cumulative) return k;
  }
  // Row sums to 1 - eps; the residual mass belongs to the last support point.
  return last_positive;
}

std::size_t isqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

double transition_floor(double delta, std::size_t H, std::size_t T) {
  const double exponent = 1.0 / static_cast<double>(H * isqrt(T));
  return 1.0 - std::pow(delta / 3.0, exponent);
}

EnvSpec generate_dense_env(std::size_t S, std::size_t A, std::size_t H, std::size_t T,
                           double delta, Rng& rng, bool stationary) {
  const double theta = transition_floor(delta, H, T);
  if (static_cast<double>(S) * theta > 1.0) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "infeasible parameters: S * theta = " << S << " * " << theta << " > 1";
    throw InfeasibleError(msg.str());
  }
  EnvSpec env = EnvSpec::zeros(S, A, H, T, delta, stationary);
  fill_dense_transitions(env, theta, rng);
  for (auto& r : env.rewards) r = uniform01(rng);
  return env;
}

EnvSpec generate_homeland_env(std::size_t S, std::size_t A, std::size_t H, std::size_t T,
                              double delta, Rng& rng, double cap) {
  if (!(cap >= 0.0 && cap <= 1.0)) throw ContractError("reward cap must lie in [0,1]");
  EnvSpec env = generate_dense_env(S, A, H, T, delta, rng);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        env.reward(h, s, a) = s == env.initial_state ? 1.0 : cap * env.reward(h, s, a);
      }
    }
  }
  return env;
}

EnvSpec generate_constant_reward_env(std::size_t S, std::size_t A, std::size_t H, std::size_t T,
                                     double delta) {
  EnvSpec env = EnvSpec::zeros(S, A, H, T, delta);
  std::fill(env.rewards.begin(), env.rewards.end(), 1.0);
  std::fill(env.transitions.begin(), env.transitions.end(), 1.0 / static_cast<double>(S));
  return env;
}

AssumptionReport check_assumption_transitions(const EnvSpec& env) {
  const double theta = transition_floor(env.confidence, env.horizon, env.episodes);
  const double min_prob =
      env.transitions.empty() ? 0.0 : *std::min_element(env.transitions.begin(), env.transitions.end());
  return {min_prob >= theta, min_prob, theta};
}

HomelandReport check_homeland(const EnvSpec& env, const ValueTables& optimal,
                              std::span<const std::size_t> aware) {
  if (aware.empty()) throw ContractError("check_homeland: aware set is empty");
  const std::size_t S = env.num_states;
  const std::size_t A = env.num_actions;
  std::vector<char> member(S, 0);
  for (auto s : aware) {
    if (s >= S) throw IndexError("aware state out of range");
    member[s] = 1;
  }
  const auto n = static_cast<double>(aware.size());
  HomelandReport report;
  std::vector<double> q_avg(A);
  for (std::size_t h = 0; h < env.horizon; ++h) {
    double v_avg = 0.0;
    std::fill(q_avg.begin(), q_avg.end(), 0.0);
    for (auto s : aware) {
      v_avg += optimal.v(h, s);
      for (std::size_t a = 0; a < A; ++a) q_avg[a] += optimal.q(h, s, a);
    }
    v_avg /= n;
    for (auto& x : q_avg) x /= n;
    for (std::size_t s = 0; s < S; ++s) {
      if (member[s]) continue;
      for (std::size_t a = 0; a < A; ++a) {
        if (optimal.q(h, s, a) > q_avg[a]) {
          report.violations.push_back({h, s, a, optimal.q(h, s, a), q_avg[a]});
        }
      }
      if (optimal.v(h, s) > v_avg) {
        report.violations.push_back(
            {h, s, std::numeric_limits<std::size_t>::max(), optimal.v(h, s), v_avg});
      }
    }
  }
  report.holds = report.violations.empty();
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

const json& field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(std::string("missing field '") + name + "'");
  return *it;
}

std::size_t as_count(const json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw ParseError("field '" + where + "' must be a nonnegative integer");
  }
  return j.get<std::size_t>();
}

double as_real(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError("field '" + where + "' must be a number");
  return j.get<double>();
}

const json& as_array(const json& j, std::size_t expected, const std::string& where) {
  if (!j.is_array()) throw ParseError("field '" + where + "' must be an array");
  if (j.size() != expected) {
    throw ParseError("field '" + where + "' has " + std::to_string(j.size()) +
                     " entries, expected " + std::to_string(expected));
  }
  return j;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

std::string env_to_json(const EnvSpec& env) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["S"] = env.num_states;
  doc["A"] = env.num_actions;
  doc["H"] = env.horizon;
  doc["T"] = env.episodes;
  doc["delta"] = env.confidence;
  doc["initial_state"] = env.initial_state;
  doc["initial_aware"] = env.initial_aware;
  doc["stationary"] = env.stationary;
  json rewards = json::array();
  for (std::size_t h = 0; h < env.horizon; ++h) {
    json per_h = json::array();
    for (std::size_t s = 0; s < env.num_states; ++s) {
      json per_s = json::array();
      for (std::size_t a = 0; a < env.num_actions; ++a) per_s.push_back(env.reward(h, s, a));
      per_h.push_back(std::move(per_s));
    }
    rewards.push_back(std::move(per_h));
  }
  doc["rewards"] = std::move(rewards);
  json transitions = json::array();
  for (std::size_t h = 0; h < env.transition_blocks(); ++h) {
    json per_h = json::array();
    for (std::size_t s = 0; s < env.num_states; ++s) {
      json per_s = json::array();
      for (std::size_t a = 0; a < env.num_actions; ++a) {
        const auto row = env.transition_row(h, s, a);
        per_s.push_back(json(std::vector<double>(row.begin(), row.end())));
      }
      per_h.push_back(std::move(per_s));
    }
    transitions.push_back(std::move(per_h));
  }
  doc["transitions"] = std::move(transitions);
  return doc.dump() + "\n";
}

EnvSpec env_from_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": line " + std::to_string(line_of(text, e.byte)) + ": " +
                     e.what());
  }
  if (!doc.is_object()) throw ParseError(origin + ": top level must be an object");
  try {
    const auto version = as_count(field(doc, "schema_version"), "schema_version");
    if (version != kSchemaVersion) {
      throw ParseError("unsupported schema_version " + std::to_string(version));
    }
    const auto S = as_count(field(doc, "S"), "S");
    const auto A = as_count(field(doc, "A"), "A");
    const auto H = as_count(field(doc, "H"), "H");
    const auto T = as_count(field(doc, "T"), "T");
    const double delta = as_real(field(doc, "delta"), "delta");
    const auto s1 = as_count(field(doc, "initial_state"), "initial_state");
    const auto& stationary = field(doc, "stationary");
    if (!stationary.is_boolean()) throw ParseError("field 'stationary' must be a boolean");
    if (S == 0 || A == 0 || H == 0 || T == 0) {
      throw ParseError("fields S, A, H, T must be positive");
    }

    EnvSpec env = EnvSpec::zeros(S, A, H, T, delta, stationary.get<bool>());
    env.initial_state = s1;
    const auto& aware = field(doc, "initial_aware");
    if (!aware.is_array()) throw ParseError("field 'initial_aware' must be an array");
    env.initial_aware.clear();
    for (std::size_t i = 0; i < aware.size(); ++i) {
      env.initial_aware.push_back(as_count(aware[i], "initial_aware[" + std::to_string(i) + "]"));
    }

    const auto& rewards = as_array(field(doc, "rewards"), H, "rewards");
    for (std::size_t h = 0; h < H; ++h) {
      const std::string ph = "rewards[" + std::to_string(h) + "]";
      const auto& per_h = as_array(rewards[h], S, ph);
      for (std::size_t s = 0; s < S; ++s) {
        const std::string ps = ph + "[" + std::to_string(s) + "]";
        const auto& per_s = as_array(per_h[s], A, ps);
        for (std::size_t a = 0; a < A; ++a) {
          env.reward(h, s, a) = as_real(per_s[a], ps + "[" + std::to_string(a) + "]");
        }
      }
    }

    const auto& transitions =
        as_array(field(doc, "transitions"), env.transition_blocks(), "transitions");
    for (std::size_t h = 0; h < env.transition_blocks(); ++h) {
      const std::string ph = "transitions[" + std::to_string(h) + "]";
      const auto& per_h = as_array(transitions[h], S, ph);
      for (std::size_t s = 0; s < S; ++s) {
        const std::string ps = ph + "[" + std::to_string(s) + "]";
        const auto& per_s = as_array(per_h[s], A, ps);
        for (std::size_t a = 0; a < A; ++a) {
          const std::string pa = ps + "[" + std::to_string(a) + "]";
          const auto& row = as_array(per_s[a], S, pa);
          auto out = env.transition_row(h, s, a);
          for (std::size_t k = 0; k < S; ++k) {
            out[k] = as_real(row[k], pa + "[" + std::to_string(k) + "]");
          }
        }
      }
    }
    env.validate();
    return env;
  } catch (const ParseError& e) {
    throw ParseError(origin + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

void save_env(const EnvSpec& env, const std::filesystem::path& path) {
  env.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << env_to_json(env);
  if (!out) throw ConfigError("write failed for " + path.string());
}

EnvSpec load_env(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return env_from_json(buffer.str(), path.string());
}

}  // namespace uulab
