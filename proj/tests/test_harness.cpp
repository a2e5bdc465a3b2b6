#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"

using namespace uulab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EnvSpec small_env(std::uint64_t seed, std::size_t T = 120) {
  Rng g = make_stream(seed, kGeneratorStream);
  return generate_dense_env(5, 2, 3, T, 0.1, g);
}

std::string csv_of(const RunResult& r) {
  std::ostringstream out;
  for (const auto& rec : r.records) write_record_csv(out, rec);
  return out.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(UULAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Rewrites one field of one visits.jsonl line.
template <class Edit>
void edit_visit(const fs::path& dir, std::size_t line_no, const std::string& key, Edit edit) {
  std::istringstream in(slurp(dir / "visits.jsonl"));
  std::ostringstream out;
  std::string line;
  for (std::size_t i = 0; std::getline(in, line); ++i) {
    if (i == line_no) {
      auto j = nlohmann::json::parse(line);
      j[key] = edit(j[key]);
      line = j.dump();
    }
    out << line << '\n';
  }
  std::ofstream(dir / "visits.jsonl", std::ios::binary) << out.str();
}

void corrupt_visit(const fs::path& dir, std::size_t line_no, const std::string& key, const nlohmann::json& value) {
  edit_visit(dir, line_no, key, [&](const nlohmann::json&) { return value; });
}

bool check_failed(const AuditReport& rep, const std::string& name) {
  for (const auto& c : rep.checks)
    if (c.name == name) return !c.passed;
  return false;
}

}  // namespace

TEST_CASE("runs are deterministic") {
  const auto env = small_env(1);
  const auto opt = optimal_values(env);
  RunConfig cfg;
  cfg.seed = 5;
  const auto a = run_experiment(env, opt, cfg);
  const auto b = run_experiment(env, opt, cfg);
  CHECK(csv_of(a) == csv_of(b));
  CHECK(summary_to_json(a.summary) == summary_to_json(b.summary));

  cfg.visit_log = true;
  const auto logged = run_experiment(env, opt, cfg);
  CHECK(csv_of(logged) == csv_of(a));

  const auto dir = testing::scratch_dir("determinism");
  write_run_dir(a, env, dir / "a");
  write_run_dir(b, env, dir / "b");
  CHECK(slurp(dir / "a" / "records.csv") == slurp(dir / "b" / "records.csv"));
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
}

TEST_CASE("run records") {
  const auto env = small_env(2);
  const auto opt = optimal_values(env);
  for (auto mode : {Mode::growing_awareness, Mode::full_awareness}) {
    RunConfig cfg;
    cfg.mode = mode;
    cfg.seed = 9;
    cfg.record_confidence = true;
    const auto res = run_experiment(env, opt, cfg);
    REQUIRE(res.records.size() == env.episodes);
    double prev = 0.0;
    std::size_t aware = 0;
    for (const auto& rec : res.records) {
      CHECK(rec.regret_increment >= 0.0);
      CHECK(rec.regret_cumulative >= prev);
      CHECK(rec.aware >= aware);
      CHECK(rec.confidence.size() == env.horizon);
      for (double ac : rec.confidence) CHECK(ac <= 0.0);
      prev = rec.regret_cumulative;
      aware = rec.aware;
    }
    CHECK(res.summary.final_regret == prev);
    CHECK(res.summary.half_regret == res.records[env.episodes / 2 - 1].regret_cumulative);
    if (mode == Mode::full_awareness) {
      CHECK(res.summary.expansion_events == 0);
      CHECK(res.summary.final_aware == env.num_states);
    }
  }
}

TEST_CASE("audit") {
  const auto env = small_env(3);
  const auto opt = optimal_values(env);
  RunConfig cfg;
  cfg.seed = 4;
  cfg.visit_log = true;
  const auto res = run_experiment(env, opt, cfg);
  const auto in_memory = audit_run(artifacts_from(res, env));
  CHECK(in_memory.ok());

  const auto dir = testing::scratch_dir("audit");
  write_run_dir(res, env, dir / "run");
  const auto from_disk = audit_run(load_run_dir(dir / "run"));
  CHECK(from_disk.ok());
  CHECK(from_disk.to_text() == audit_run(load_run_dir(dir / "run")).to_text());

  SUBCASE("a corrupted coefficient is named") {
    corrupt_visit(dir / "run", 7, "alpha", 0.123);
    const auto rep = audit_run(load_run_dir(dir / "run"));
    CHECK_FALSE(rep.ok());
    CHECK(check_failed(rep, "coefficients"));
  }
  SUBCASE("a corrupted reward breaks the Q recomputation") {
    corrupt_visit(dir / "run", 3, "r", 0.987654);
    const auto rep = audit_run(load_run_dir(dir / "run"));
    CHECK_FALSE(rep.ok());
    CHECK(check_failed(rep, "q_batch"));
  }
  SUBCASE("a corrupted next state breaks the trajectory") {
    edit_visit(dir / "run", 0, "s_next", [&](const nlohmann::json& v) {
      return (v.get<std::size_t>() + 1) % env.num_states;
    });
    const auto rep = audit_run(load_run_dir(dir / "run"));
    CHECK_FALSE(rep.ok());
    CHECK(check_failed(rep, "log_shape"));
  }
  SUBCASE("no log") {
    cfg.visit_log = false;
    const auto plain = run_experiment(env, opt, cfg);
    write_run_dir(plain, env, dir / "plain");
    CHECK_THROWS_AS(audit_run(load_run_dir(dir / "plain")), UnavailableError);
    CHECK_THROWS_AS(audit_run(artifacts_from(plain, env)), UnavailableError);
  }
}

TEST_CASE("sweeps do not depend on threads or seed order") {
  SweepConfig cfg;
  cfg.generator.num_states = 5;
  cfg.generator.num_actions = 2;
  cfg.generator.horizon = 3;
  cfg.generator.episodes = 80;
  cfg.seeds = {1, 2, 3, 4, 5, 6};
  cfg.baseline = true;
  cfg.threads = 1;
  const auto one = sweep_to_json(run_sweep(cfg));
  cfg.threads = 4;
  CHECK(sweep_to_json(run_sweep(cfg)) == one);
  CHECK(sweep_to_json(run_sweep_serial(cfg)) == one);
  cfg.seeds = {6, 5, 4, 3, 2, 1};
  const auto rev = run_sweep(cfg);
  CHECK(sweep_to_json(rev) == one);
  REQUIRE(rev.outcomes.size() == 6);
  CHECK(rev.outcomes.front().seed == 1);
  CHECK(rev.failed_seeds.empty());
  CHECK(rev.regret_ratio > 0.0);

  SUBCASE("fixed env") {
    cfg.fixed_env = small_env(9, 80);
    const auto fixed = run_sweep(cfg);
    CHECK(fixed.failed_seeds.empty());
    cfg.threads = 1;
    CHECK(sweep_to_json(run_sweep(cfg)) == sweep_to_json(fixed));
  }
  SUBCASE("failed seeds are listed") {
    cfg.generator.num_states = 100;
    cfg.generator.episodes = 4;
    const auto bad = run_sweep(cfg);
    CHECK(bad.failed_seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5, 6});
    for (const auto& o : bad.outcomes) CHECK_FALSE(o.error.empty());
  }
  SUBCASE("bad seed lists") {
    cfg.seeds = {};
    CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
    cfg.seeds = {1, 1};
    CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  }
}

TEST_CASE("oracle cache") {
  const auto dir = testing::scratch_dir("cache");
  const auto env = small_env(4);
  save_env(env, dir / "e.json");
  const auto first = cached_optimal_values(dir / "e.json", env);
  CHECK(first == optimal_values(env));
  std::size_t caches = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().filename().string().starts_with("e.json.oracle-")) ++caches;
  CHECK(caches == 1);
  CHECK(cached_optimal_values(dir / "e.json", env) == first);

  const auto other = small_env(5);
  save_env(other, dir / "e.json");
  CHECK(cached_optimal_values(dir / "e.json", other) == optimal_values(other));
}

TEST_CASE("cli") {
  const auto dir = testing::scratch_dir("cli");
  const std::string env_a = (dir / "a.json").string(), env_b = (dir / "b.json").string();
  CHECK(cli("gen-env --dense --S 5 --A 2 --H 3 --T 60 --seed 7 --out " + env_a) == 0);
  CHECK(cli("gen-env --dense --S 5 --A 2 --H 3 --T 60 --seed 7 --out " + env_b) == 0);
  CHECK(slurp(env_a) == slurp(env_b));
  CHECK(cli("gen-env --constant-reward --S 4 --A 2 --H 3 --out " + (dir / "c.json").string()) == 0);

  CHECK(cli("gen-env --dense --S 100 --H 1 --T 4 --out " + (dir / "x.json").string()) == 2);
  CHECK(cli("gen-env --out " + (dir / "x.json").string()) == 2);
  CHECK(cli("gen-env --dense --homeland --out " + (dir / "x.json").string()) == 2);
  CHECK(cli("run --no-such-flag") == 2);
  CHECK(cli("run --env " + (dir / "missing.json").string()) == 2);

  const std::string logged = (dir / "logged").string(), plain = (dir / "plain").string();
  CHECK(cli("run --env " + env_a + " --seed 3 --visit-log --out " + logged) == 0);
  CHECK(cli("run --env " + env_a + " --seed 3 --out " + plain) == 0);
  CHECK(slurp(fs::path(logged) / "records.csv") == slurp(fs::path(plain) / "records.csv"));
  CHECK(cli("audit " + logged) == 0);
  CHECK(cli("audit " + plain) == 2);
  CHECK(cli("report " + logged) == 0);

  corrupt_visit(logged, 2, "beta", 1e9);
  CHECK(cli("audit " + logged) == 1);

  const std::string rep = (dir / "sweep.json").string();
  CHECK(cli("sweep --dense --S 5 --A 2 --H 3 --T 40 --seeds 1..3 --baseline --out " + rep) == 0);
  CHECK(cli("report " + rep) == 0);
  CHECK(cli("sweep --env " + env_a + " --seeds 1,2 --T 30") == 0);
  CHECK(cli("sweep --dense --S 100 --H 1 --T 4 --seeds 1..2") == 1);
  CHECK(cli("sweep --dense --seeds 3,3") == 2);
}
