#include <doctest.h>

#include <numeric>

#include "support.hpp"

using namespace uulab;

namespace {

EpisodeTrace path(std::initializer_list<std::size_t> states) {
  EpisodeTrace tr;
  const std::vector<std::size_t> v(states);
  for (std::size_t h = 0; h + 1 < v.size(); ++h) tr.steps.push_back({v[h], 0, 0.0, v[h + 1]});
  return tr;
}

}  // namespace

TEST_CASE("init") {
  const std::vector<std::size_t> s0{0};
  auto aw = AwareState::init(s0, 5);
  CHECK(aw.count() == 1);
  CHECK(aw.contains(0));
  CHECK(aw.aware_moment(0) == 0);
  for (std::size_t s = 1; s < 5; ++s) CHECK(aw.aware_moment(s) == kNever);

  std::vector<std::size_t> all(5);
  std::iota(all.begin(), all.end(), 0);
  auto full = AwareState::init(all, 5);
  CHECK(full.count() == 5);
  CHECK(full.observe_episode(path({0, 3, 4, 1}), 1).empty());
  CHECK(full.count() == 5);

  CHECK_THROWS_AS(AwareState::init(std::vector<std::size_t>{}, 5), ContractError);
  CHECK_THROWS_AS(AwareState::init(std::vector<std::size_t>{5}, 5), IndexError);
}

TEST_CASE("observe_episode") {
  const std::vector<std::size_t> s0{0};
  auto aw = AwareState::init(s0, 6);

  SUBCASE("trace inside the aware set") {
    CHECK(aw.observe_episode(path({0, 0, 0}), 1).empty());
    CHECK(aw.count() == 1);
  }
  SUBCASE("repeated new state listed once, terminal state excluded") {
    const auto fresh = aw.observe_episode(path({0, 2, 3, 2, 5}), 1);
    CHECK(fresh == std::vector<std::size_t>{2, 3});
    CHECK_FALSE(aw.contains(5));
    CHECK(aw.aware_moment(2) == 1);
    CHECK(aw.aware_moment(3) == 1);
  }
  SUBCASE("moments are set once and the set only grows") {
    aw.observe_episode(path({0, 1, 0}), 1);
    aw.observe_episode(path({0, 1, 4}), 2);
    aw.observe_episode(path({0, 4, 2}), 3);
    CHECK(aw.aware_moment(1) == 1);
    CHECK(aw.aware_moment(4) == 3);
    CHECK(aw.size_history() == std::vector<std::size_t>{2, 2, 3});
    const auto members = aw.members();
    CHECK(std::vector<std::size_t>(members.begin(), members.end()) == std::vector<std::size_t>{0, 1, 4});
  }
  SUBCASE("episode index starts at 1") {
    CHECK_THROWS_AS(aw.observe_episode(path({0, 1}), 0), ContractError);
  }
}

TEST_CASE("growth per episode is at most H") {
  Rng g = make_stream(3, kGeneratorStream);
  const auto env = generate_dense_env(12, 2, 4, 100, 0.1, g);
  Rng rng = make_stream(3, kRolloutStream);
  auto aw = AwareState::init(env.initial_aware, 12);
  std::size_t prev = aw.count();
  for (std::size_t t = 1; t <= 50; ++t) {
    aw.observe_episode(rollout_episode(env, [](std::size_t, std::size_t s) { return s % 2; }, rng), t);
    CHECK(aw.count() >= prev);
    CHECK(aw.count() <= prev + env.horizon);
    prev = aw.count();
  }
}
