#include <doctest.h>

#include "support.hpp"

using namespace uulab;

namespace {

LearnerTables random_tables(Rng& rng, std::size_t S, std::size_t A, std::size_t H) {
  auto t = LearnerTables::allocate(S, A, H);
  for (auto& x : t.q) x = 3.0 * uniform01(rng);
  for (auto& x : t.qbar) x = 3.0 * uniform01(rng);
  for (std::size_t i = 0; i < H * S; ++i) t.vbar[i] = 3.0 * uniform01(rng);
  for (auto& x : t.vbias) x = 3.0 * uniform01(rng);
  return t;
}

}  // namespace

TEST_CASE("averages from scratch") {
  auto t = LearnerTables::allocate(3, 2, 2);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t a = 0; a < 2; ++a) {
      t.q[t.sa(h, 0, a)] = 0.0;
      t.q[t.sa(h, 1, a)] = 2.0;
      t.q[t.sa(h, 2, a)] = 100.0;  // not aware, must not count
    }
  const std::vector<std::size_t> aware{0, 1};
  const auto avg = averages_from_scratch(t, aware);
  CHECK(avg.q_avg[0] == 1.0);
  CHECK(avg.q_avg[3] == 1.0);

  SUBCASE("constant V-bar") {
    for (std::size_t i = 0; i < 6; ++i) t.vbar[i] = 4.0;
    CHECK(averages_from_scratch(t, aware).vbar_avg == std::vector<double>{4.0, 4.0});
  }
  SUBCASE("singleton set reproduces the entry") {
    Rng rng = make_stream(1, 9);
    const auto r = random_tables(rng, 3, 2, 2);
    const std::vector<std::size_t> one{1};
    const auto a1 = averages_from_scratch(r, one);
    CHECK(a1.q_avg[1] == r.q[r.sa(0, 1, 1)]);
    CHECK(a1.vbar_avg[1] == r.vbar[r.hs(1, 1)]);
    CHECK(a1.total_avg[2] == r.vbias[r.sas(1, 1, 0, 1)]);
  }
  CHECK_THROWS_AS(averages_from_scratch(t, std::vector<std::size_t>{}), ContractError);
}

TEST_CASE("running sums track random deltas") {
  Rng rng = make_stream(12, 9);
  const std::size_t S = 6, A = 3, H = 4;
  auto t = random_tables(rng, S, A, H);
  const std::vector<std::size_t> aware{0, 2, 3, 5};
  auto acc = AverageAccumulators::build(t, aware);
  CHECK(acc.audit(t, aware) <= 1e-12);

  SUBCASE("single Q change of +1 over four states moves the average by 1/4") {
    const double before = acc.q_avg(1, 2);
    const auto i = t.sa(1, 3, 2);
    acc.apply_q_delta(1, 2, t.q[i], t.q[i] + 1.0);
    t.q[i] += 1.0;
    CHECK(acc.q_avg(1, 2) - before == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("no-op delta") {
    const double before = acc.row_avg(0, 2, 1);
    acc.apply_vbias_delta(0, 2, 1, 3, 1.5, 1.5);
    CHECK(acc.row_avg(0, 2, 1) == before);
  }
  SUBCASE("1000 random writes") {
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(uniform01(rng) * n); };
    for (int k = 0; k < 1000; ++k) {
      const std::size_t h = pick(H), a = pick(A), s = aware[pick(aware.size())];
      const double v = 3.0 * uniform01(rng);
      switch (k % 3) {
        case 0:
          acc.apply_q_delta(h, a, t.q[t.sa(h, s, a)], v);
          t.q[t.sa(h, s, a)] = v;
          break;
        case 1:
          acc.apply_vbar_delta(h, t.vbar[t.hs(h, s)], v);
          t.vbar[t.hs(h, s)] = v;
          break;
        default: {
          const std::size_t n = aware[pick(aware.size())];
          acc.apply_vbias_delta(h, s, a, n, t.vbias[t.sas(h, s, a, n)], v);
          t.vbias[t.sas(h, s, a, n)] = v;
        }
      }
    }
    CHECK(acc.audit(t, aware) <= 1e-9);
  }
}

TEST_CASE("expand") {
  const std::size_t S = 4, A = 2, H = 2;
  Rng rng = make_stream(5, 9);
  auto t = random_tables(rng, S, A, H);
  const std::vector<std::size_t> old_aware{0, 1};
  t.vbar[t.hs(1, 0)] = 3.0;
  t.vbar[t.hs(1, 1)] = 1.0;
  auto acc = AverageAccumulators::build(t, old_aware);
  const auto before = averages_from_scratch(t, old_aware);
  const std::vector<std::size_t> fresh{2};
  expand(t, acc, old_aware, fresh, 2.0);

  CHECK(t.vbar[t.hs(1, 2)] == 2.0);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t a = 0; a < A; ++a) {
      CHECK(t.q[t.sa(h, 2, a)] == before.q_avg[h * A + a]);
      CHECK(t.qbar[t.sa(h, 2, a)] == before.q_avg[h * A + a] + 2.0);
      CHECK(t.vbias[t.sas(h, 2, a, 2)] == doctest::Approx(before.total_avg[h * A + a]));
      for (auto s : old_aware) {
        CHECK(t.vbias[t.sas(h, s, a, 2)] == doctest::Approx(before.row_avg[(h * S + s) * A + a]));
        CHECK(t.vbias[t.sas(h, 2, a, s)] == doctest::Approx(before.col_avg[(h * A + a) * S + s]));
      }
    }
  }
  const std::vector<std::size_t> now{0, 1, 2};
  CHECK(acc.count() == 3);
  CHECK(acc.audit(t, now) <= 1e-12);

  SUBCASE("errors and the empty expansion") {
    const auto snapshot = t.vbias;
    expand(t, acc, now, std::vector<std::size_t>{}, 2.0);
    CHECK(t.vbias == snapshot);
    CHECK_THROWS_AS(expand(t, acc, std::vector<std::size_t>{}, fresh, 2.0), ContractError);
    CHECK_THROWS_AS(expand(t, acc, now, std::vector<std::size_t>{1}, 2.0), ContractError);
  }
}

TEST_CASE("expanding constant tables keeps every average") {
  const std::size_t S = 5, A = 2, H = 3;
  auto t = LearnerTables::allocate(S, A, H);
  const std::vector<std::size_t> old_aware{0, 3};
  for (auto s : old_aware)
    for (std::size_t h = 0; h < H; ++h) {
      t.vbar[t.hs(h, s)] = 1.5;
      for (std::size_t a = 0; a < A; ++a) {
        t.q[t.sa(h, s, a)] = 0.7;
        for (auto n : old_aware) t.vbias[t.sas(h, s, a, n)] = 2.25;
      }
    }
  auto acc = AverageAccumulators::build(t, old_aware);
  const std::vector<std::size_t> fresh{4, 1};
  expand(t, acc, old_aware, fresh, 3.0);
  const std::vector<std::size_t> now{0, 3, 4, 1};
  const auto avg = averages_from_scratch(t, now);
  for (double x : avg.q_avg) CHECK(x == doctest::Approx(0.7).epsilon(1e-15));
  for (double x : avg.vbar_avg) CHECK(x == doctest::Approx(1.5).epsilon(1e-15));
  for (double x : avg.total_avg) CHECK(x == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(acc.audit(t, now) <= 1e-12);
}
