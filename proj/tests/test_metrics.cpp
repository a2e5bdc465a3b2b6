#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace uulab;

TEST_CASE("awareness confidence") {
  const std::vector<double> vstar{1.0, 1.0, 2.0};
  const std::vector<std::size_t> two{0, 1}, all{0, 1, 2};
  CHECK(awareness_confidence(vstar, vstar, all) == 0.0);
  const std::vector<double> shifted{2.0, 2.0, 3.0};
  CHECK(awareness_confidence(shifted, vstar, all) == doctest::Approx(-1.0));
  const std::vector<double> f{3.0, 1.0, 0.0};
  CHECK(awareness_confidence(f, vstar, two) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(awareness_confidence(f, vstar, std::vector<std::size_t>{}), ContractError);
}

TEST_CASE("confidence drop check") {
  // H = 1, S = 3; V* = (1, 1, 1) on the first row
  ValueTables opt{3, 1, 1, {1.0, 1.0, 1.0, 0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  const std::vector<std::size_t> before{0, 1}, after{0, 1, 2};
  const std::vector<double> vbar{1.5, 1.1, 1.0, 0.0, 0.0, 0.0};

  SUBCASE("no expansion is an equality") {
    const auto rep = confidence_drop_check(vbar, vbar, opt, before, before);
    CHECK_FALSE(rep.skipped);
    CHECK(rep.all_pass());
    CHECK(rep.gap_before[0] == doctest::Approx(rep.gap_after[0]));
  }
  SUBCASE("expanded to the average passes, a low new value fails") {
    std::vector<double> grown = vbar;
    grown[2] = 1.3;  // the average of 1.5 and 1.1
    CHECK(confidence_drop_check(vbar, grown, opt, before, after).all_pass());
    grown[2] = 1.0;
    const auto rep = confidence_drop_check(vbar, grown, opt, before, after);
    CHECK_FALSE(rep.skipped);
    CHECK_FALSE(rep.all_pass());
  }
  SUBCASE("skips") {
    const std::vector<double> low{0.5, 1.1, 1.0, 0.0, 0.0, 0.0};
    const auto no_optimism = confidence_drop_check(low, low, opt, before, after);
    CHECK(no_optimism.skipped);
    CHECK_FALSE(no_optimism.reason.empty());
    const std::vector<std::size_t> other{2};
    const auto not_nested = confidence_drop_check(vbar, vbar, opt, before, other);
    CHECK(not_nested.skipped);
  }
}

TEST_CASE("optimism audit") {
  Rng g = make_stream(12, kGeneratorStream);
  const auto env = generate_dense_env(5, 2, 3, 100, 0.1, g);
  const auto opt = optimal_values(env);
  Learner L(LearnerParams::from_env(env, Mode::growing_awareness), env.initial_aware);
  CHECK(optimism_audit(L, opt).empty());

  const std::size_t s = env.initial_state;
  L.tables_for_testing().qbar[L.tables().sa(1, s, 1)] = -1.0;
  const auto viol = optimism_audit(L, opt);
  REQUIRE(viol.size() == 1);
  CHECK(viol[0].h == 1);
  CHECK(viol[0].s == s);
  CHECK(viol[0].a == 1);
  CHECK(viol[0].estimate == -1.0);
  CHECK(viol[0].optimum == opt.q(1, s, 1));
}

TEST_CASE("scalar expansion probe on a constant-reward env") {
  const auto env = generate_constant_reward_env(6, 2, 4, 200, 0.1);
  const auto opt = optimal_values(env);
  RunConfig cfg;
  cfg.seed = 3;
  cfg.capture_expansions = true;
  const auto res = run_experiment(env, opt, cfg);
  REQUIRE_FALSE(res.expansions.empty());
  const std::optional<ExpansionSnapshot> first = res.expansions.front();
  CHECK(scalar_expansion_probe(first, 0.5, opt));
  CHECK(scalar_expansion_probe(first, 0.999, opt));
  CHECK_FALSE(scalar_expansion_probe(first, 1.0, opt));
  CHECK_THROWS_AS(scalar_expansion_probe(std::nullopt, 0.5, opt), ContractError);
  CHECK_THROWS_AS(scalar_expansion_probe(first, 0.0, opt), ContractError);
  CHECK_THROWS_AS(scalar_expansion_probe(first, 1.5, opt), ContractError);
}

TEST_CASE("aware moment report") {
  SUBCASE("full S0") {
    const std::vector<std::size_t> all{0, 1, 2, 3};
    const auto aw = AwareState::init(all, 4);
    const auto rep = aware_moment_report(aw, 100);
    CHECK(rep.max_moment == 0);
    CHECK(rep.exceed_count == 0);
    CHECK(rep.never_count == 0);
    CHECK(rep.threshold == 10);
  }
  SUBCASE("never-aware states count as exceeding") {
    const std::vector<std::size_t> s0{0};
    auto aw = AwareState::init(s0, 3);
    aw.observe_episode(EpisodeTrace{{{0, 0, 0.0, 1}, {1, 0, 0.0, 0}}}, 12);
    const auto rep = aware_moment_report(aw, 100);
    CHECK(rep.max_moment == 12);
    CHECK(rep.never_count == 1);
    CHECK(rep.exceed_count == 2);
  }
}

TEST_CASE("records csv") {
  CHECK(records_csv_header(0) ==
        "episode,return,v_pi,regret_inc,regret_cum,aware,new_states,optimism_ok");
  CHECK(records_csv_header(2).ends_with(",ac_1,ac_2"));
  RunRecord rec;
  rec.episode = 3;
  rec.aware = 2;
  std::ostringstream out;
  write_record_csv(out, rec);
  CHECK(out.str().find(",na") != std::string::npos);
  rec.optimism_ok = true;
  std::ostringstream out2;
  write_record_csv(out2, rec);
  CHECK(out2.str().find(",na") == std::string::npos);
}

TEST_CASE("V-bar bound check") {
  const auto env = generate_constant_reward_env(4, 2, 3, 100, 0.1);
  Learner L(LearnerParams::from_env(env, Mode::full_awareness), env.initial_aware);
  CHECK(check_vbound(L).ok());
  Rng rng = make_stream(1, kRolloutStream);
  for (std::size_t t = 1; t <= 20; ++t) L.update_after_episode(rollout_episode(env, L.policy(), rng), t);
  CHECK(check_vbound(L).ok());

  SUBCASE("bias value below the next V-bar") {
    auto& tab = L.tables_for_testing();
    tab.vbias[tab.sas(0, 0, 0, 1)] = -0.5;
    const auto rep = check_vbound(L);
    CHECK(rep.dominance_violations == 1);
    CHECK(rep.worst >= 0.5);
  }
  SUBCASE("V-bar outside the range") {
    auto& tab = L.tables_for_testing();
    tab.vbar[tab.hs(1, 2)] = -0.25;
    CHECK(check_vbound(L).range_violations >= 1);
  }
}
