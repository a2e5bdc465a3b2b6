#include <doctest.h>

#include <array>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "support.hpp"

using namespace uulab;

namespace {

EnvSpec point_mass_env(std::size_t S, std::size_t A, std::size_t H, std::size_t target) {
  auto env = EnvSpec::zeros(S, A, H, 10, 0.1);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) env.transition_row(h, s, a)[target] = 1.0;
  return env;
}

}  // namespace

TEST_CASE("transition floor for S=5, H=3, T=100") {
  const double theta = transition_floor(0.1, 3, 100);
  CHECK(theta == doctest::Approx(1.0 - std::pow(0.1 / 3.0, 1.0 / 30.0)).epsilon(1e-15));
  Rng rng = make_stream(4, kGeneratorStream);
  const EnvSpec env = generate_dense_env(5, 2, 3, 100, 0.1, rng);
  double lowest = 1.0;
  for (double p : env.transitions) lowest = std::min(lowest, p);
  CHECK(lowest >= theta);
  const auto rep = check_assumption_transitions(env);
  CHECK(rep.holds);
  CHECK(rep.theta == theta);
  CHECK(rep.min_prob == lowest);
  CHECK_NOTHROW(env.validate());
  CHECK(env.initial_aware == std::vector<std::size_t>{env.initial_state});
}

TEST_CASE("dense generator rejects infeasible floors") {
  Rng rng = make_stream(1, kGeneratorStream);
  // floor(sqrt(4)) = 2, theta ~ 0.82, so 100 states cannot fit
  CHECK_THROWS_AS(generate_dense_env(100, 2, 1, 4, 0.1, rng), InfeasibleError);
}

TEST_CASE("zero transition entry breaks the assumption check") {
  auto env = point_mass_env(3, 1, 2, 0);
  const auto rep = check_assumption_transitions(env);
  CHECK_FALSE(rep.holds);
  CHECK(rep.min_prob == 0.0);
  CHECK(rep.theta > 0.0);
}

TEST_CASE("sample_transition") {
  Rng rng = make_stream(9, kRolloutStream);
  SUBCASE("point mass") {
    const auto env = point_mass_env(5, 2, 2, 3);
    for (int i = 0; i < 1000; ++i) CHECK(sample_transition(env, 1, 2, 1, rng) == 3);
  }
  SUBCASE("uniform over four states") {
    auto env = EnvSpec::zeros(4, 1, 1, 10, 0.1);
    for (auto& p : env.transition_row(0, 0, 0)) p = 0.25;
    std::array<std::size_t, 4> hits{};
    const std::size_t draws = 1000000;
    for (std::size_t i = 0; i < draws; ++i) ++hits[sample_transition(env, 0, 0, 0, rng)];
    for (auto c : hits) CHECK(std::abs(static_cast<double>(c) / draws - 0.25) <= 0.005);
  }
  SUBCASE("bad indices") {
    const auto env = point_mass_env(3, 2, 2, 0);
    CHECK_THROWS_AS(sample_transition(env, 2, 0, 0, rng), IndexError);
    CHECK_THROWS_AS(sample_transition(env, 0, 3, 0, rng), IndexError);
    CHECK_THROWS_AS(sample_transition(env, 0, 0, 2, rng), IndexError);
  }
}

TEST_CASE("rollout_episode") {
  SUBCASE("deterministic env gives the same trace for every seed") {
    const auto env = point_mass_env(4, 2, 3, 2);
    auto policy = [](std::size_t h, std::size_t) { return h % 2; };
    Rng a = make_stream(1, kRolloutStream), b = make_stream(777, kRolloutStream);
    const auto ta = rollout_episode(env, policy, a);
    CHECK(ta == rollout_episode(env, policy, b));
    REQUIRE(ta.size() == 3);
    CHECK(ta.steps[0].state == env.initial_state);
    CHECK(ta.steps[1].state == 2);
  }
  SUBCASE("single step") {
    const auto env = point_mass_env(2, 1, 1, 1);
    Rng rng = make_stream(2, kRolloutStream);
    const auto tr = rollout_episode(env, [](std::size_t, std::size_t) { return 0; }, rng);
    REQUIRE(tr.size() == 1);
    CHECK(tr.steps[0].next_state == 1);
  }
  SUBCASE("replay under a fixed seed, rewards copied from the env") {
    Rng g = make_stream(5, kGeneratorStream);
    const auto env = generate_dense_env(6, 3, 4, 100, 0.1, g);
    auto policy = [](std::size_t h, std::size_t s) { return (h + s) % 3; };
    Rng a = make_stream(11, kRolloutStream), b = make_stream(11, kRolloutStream);
    const auto ta = rollout_episode(env, policy, a);
    CHECK(ta == rollout_episode(env, policy, b));
    for (std::size_t h = 0; h < ta.size(); ++h) {
      const auto& st = ta.steps[h];
      CHECK(st.reward == env.reward(h, st.state, st.action));
      if (h > 0) CHECK(st.state == ta.steps[h - 1].next_state);
    }
  }
  SUBCASE("out-of-range action") {
    const auto env = point_mass_env(2, 2, 2, 0);
    Rng rng = make_stream(3, kRolloutStream);
    CHECK_THROWS_AS(rollout_episode(env, [](std::size_t, std::size_t) { return 2; }, rng),
                    ContractError);
  }
}

TEST_CASE("rng streams are independent and reproducible") {
  Rng a = make_stream(42, 1), b = make_stream(42, 1), c = make_stream(42, 2);
  const double x = uniform01(a);
  CHECK(x == uniform01(b));
  CHECK(x != uniform01(c));
  CHECK(x >= 0.0);
  CHECK(x < 1.0);
}

TEST_CASE("constant-reward env") {
  const auto env = generate_constant_reward_env(6, 2, 4);
  for (double r : env.rewards) CHECK(r == 1.0);
  CHECK_NOTHROW(env.validate());
  const auto opt = optimal_values(env);
  SUBCASE("homeland holds for any aware set") {
    const std::vector<std::size_t> one{0}, some{1, 3, 5};
    CHECK(check_homeland(env, opt, one).holds);
    CHECK(check_homeland(env, opt, some).holds);
  }
}

TEST_CASE("homeland condition") {
  // One step, one action: the state outside the aware set pays 1.0 against
  // an aware average of (0.2 + 0.4) / 2 = 0.3.
  auto env = EnvSpec::zeros(3, 1, 1, 10, 0.1);
  env.reward(0, 0, 0) = 0.2;
  env.reward(0, 1, 0) = 0.4;
  env.reward(0, 2, 0) = 1.0;
  for (std::size_t s = 0; s < 3; ++s) env.transition_row(0, s, 0)[0] = 1.0;
  const auto opt = optimal_values(env);

  const std::vector<std::size_t> aware{0, 1};
  const auto rep = check_homeland(env, opt, aware);
  CHECK_FALSE(rep.holds);
  REQUIRE(rep.violations.size() == 2);  // Q* and V* at s2
  for (const auto& v : rep.violations) {
    CHECK(v.h == 0);
    CHECK(v.state == 2);
    CHECK(v.value == doctest::Approx(1.0));
    CHECK(v.aware_average == doctest::Approx(0.3));
  }

  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(check_homeland(env, opt, all).holds);
  CHECK_THROWS_AS(check_homeland(env, opt, std::vector<std::size_t>{}), ContractError);
}

TEST_CASE("env file round trip and errors") {
  Rng rng = make_stream(8, kGeneratorStream);
  const auto dir = testing::scratch_dir("env");

  SUBCASE("per-step and stationary envs round-trip exactly") {
    for (bool stationary : {false, true}) {
      const auto env = generate_dense_env(5, 3, 4, 64, 0.1, rng, stationary);
      const auto path = dir / "e.json";
      save_env(env, path);
      CHECK(load_env(path) == env);
    }
  }
  SUBCASE("row not summing to one") {
    auto j = nlohmann::json::parse(env_to_json(generate_dense_env(3, 2, 2, 100, 0.1, rng)));
    j["transitions"][1][0][1][0] = j["transitions"][1][0][1][0].get<double>() + 1e-6;
    CHECK_THROWS_AS(env_from_json(j.dump()), ValidationError);
  }
  SUBCASE("missing field is named") {
    auto j = nlohmann::json::parse(env_to_json(generate_dense_env(3, 2, 2, 100, 0.1, rng)));
    j.erase("rewards");
    try {
      env_from_json(j.dump());
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("rewards") != std::string::npos);
    }
  }
  SUBCASE("syntax error reports its line") {
    try {
      env_from_json("{\n  \"S\": 3,\n  \"A\": ]\n}", "broken.json");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("broken.json") != std::string::npos);
      CHECK(msg.find("line 3") != std::string::npos);
    }
  }
  SUBCASE("wrong shape names the path") {
    auto j = nlohmann::json::parse(env_to_json(generate_dense_env(3, 2, 2, 100, 0.1, rng)));
    j["rewards"][1][2].erase(0);
    CHECK_THROWS_AS(env_from_json(j.dump()), ParseError);
  }
}
