#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uulab/harness.hpp"

namespace uulab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string mode_name(Mode m) { return m == Mode::full_awareness ? "full" : "growing"; }

Mode parse_mode(const std::string& s) {
  if (s == "full") return Mode::full_awareness;
  if (s == "growing") return Mode::growing_awareness;
  throw ParseError("unknown learner mode '" + s + "'");
}

std::string variance_name(VarianceProxy v) {
  return v == VarianceProxy::weighted ? "weighted" : "empirical";
}

VarianceProxy parse_variance(const std::string& s) {
  if (s == "weighted") return VarianceProxy::weighted;
  if (s == "empirical") return VarianceProxy::empirical;
  throw ParseError("unknown variance proxy '" + s + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

json parse_json(const std::string& text, const fs::path& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin.string() + ": " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const fs::path& origin) {
  if (!j.contains(key)) throw ParseError(origin.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(origin.string() + ": field '" + key + "': " + e.what());
  }
}

json moments_json(const std::vector<std::size_t>& moments) {
  json out = json::array();
  for (auto m : moments) {
    if (m == kNever) {
      out.push_back(-1);
    } else {
      out.push_back(m);
    }
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string summary_to_json(const RunSummary& s) {
  json j;
  j["mode"] = mode_name(s.mode);
  j["seed"] = s.seed;
  j["episodes"] = s.episodes;
  j["zeta"] = s.zeta;
  j["log_t"] = s.log_t;
  j["final_regret"] = s.final_regret;
  j["half_regret"] = s.half_regret;
  j["expansion_events"] = s.expansion_events;
  j["final_aware"] = s.final_aware;
  j["max_aware_moment"] = s.moments.max_moment;
  j["moment_threshold"] = s.moments.threshold;
  j["moment_exceed_count"] = s.moments.exceed_count;
  j["never_aware_count"] = s.moments.never_count;
  j["optimism_violation_episodes"] = s.optimism_violation_episodes;
  j["first_violation_episode"] = s.first_violation_episode;
  j["homeland_all"] = s.homeland_all;
  return j.dump(2);
}

void write_run_dir(const RunResult& result, const EnvSpec& env, const fs::path& dir) {
  if (!result.learner) throw ContractError("write_run_dir: run has no final learner");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create run directory " + dir.string() + ": " + ec.message());
  const auto& p = result.learner->params();

  {
    std::ostringstream csv;
    const std::size_t ac = result.records.empty() ? 0 : result.records.front().confidence.size();
    csv << records_csv_header(ac) << '\n';
    for (const auto& rec : result.records) write_record_csv(csv, rec);
    write_file(dir / "records.csv", csv.str());
  }

  json summary = json::parse(summary_to_json(result.summary));
  json learner;
  learner["S"] = p.num_states;
  learner["A"] = p.num_actions;
  learner["H"] = p.horizon;
  learner["T"] = p.episodes;
  learner["delta"] = p.delta;
  learner["variance"] = variance_name(p.variance);
  std::vector<std::size_t> s0;
  for (std::size_t s = 0; s < p.num_states; ++s) {
    if (result.learner->awareness().aware_moment(s) == 0) s0.push_back(s);
  }
  learner["initial_aware"] = s0;
  summary["learner"] = learner;
  summary["visit_log"] = result.visits.enabled;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  write_file(dir / "env.json", env_to_json(env));

  if (!result.visits.enabled) return;

  {
    std::ostringstream out;
    for (const auto& r : result.visits.records) {
      json j = {{"t", r.t},           {"h", r.h},           {"s", r.s},
                {"a", r.a},           {"s_next", r.s_next}, {"r", r.r},
                {"n_after", r.n_after}, {"alpha", r.alpha}, {"gamma", r.gamma},
                {"eta", r.eta},       {"beta", r.beta}};
      out << j.dump() << '\n';
    }
    write_file(dir / "visits.jsonl", out.str());
  }
  {
    std::ostringstream out;
    for (std::size_t t = 0; t < result.vbar_history.snapshots.size(); ++t) {
      json j = {{"t", t + 1}, {"vbar", result.vbar_history.snapshots[t]}};
      out << j.dump() << '\n';
    }
    write_file(dir / "vbar_history.jsonl", out.str());
  }
  {
    const RunArtifacts art = artifacts_from(result, env);
    json j;
    j["q"] = art.q;
    j["vbar"] = art.vbar;
    j["vbias"] = art.vbias_ring;
    j["counts"] = art.counts;
    j["sum_y"] = art.sum_y;
    j["sum_y2"] = art.sum_y2;
    j["corr_sum"] = art.corr_sum;
    j["aware_moment"] = moments_json(art.aware_moment);
    write_file(dir / "final_tables.json", j.dump() + "\n");
  }
}

RunArtifacts load_run_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a run directory: " + dir.string());
  RunArtifacts art;
  art.env = load_env(dir / "env.json");

  const fs::path summary_path = dir / "summary.json";
  const json summary = parse_json(read_file(summary_path), summary_path);
  const json learner = field<json>(summary, "learner", summary_path);
  const Mode mode = parse_mode(field<std::string>(summary, "mode", summary_path));
  art.params = LearnerParams::from_env(art.env, mode, field<std::size_t>(learner, "T", summary_path));
  art.params.variance = parse_variance(field<std::string>(learner, "variance", summary_path));
  if (art.params.num_states != field<std::size_t>(learner, "S", summary_path) ||
      art.params.num_actions != field<std::size_t>(learner, "A", summary_path) ||
      art.params.horizon != field<std::size_t>(learner, "H", summary_path)) {
    throw ParseError(summary_path.string() + ": learner dimensions do not match env.json");
  }
  art.initial_aware = field<std::vector<std::size_t>>(learner, "initial_aware", summary_path);

  const fs::path visits_path = dir / "visits.jsonl";
  if (!field<bool>(summary, "visit_log", summary_path) || !fs::exists(visits_path)) {
    art.visits.enabled = false;
    return art;
  }
  const std::size_t S = art.params.num_states;
  const std::size_t H = art.params.horizon;

  {
    std::istringstream in(read_file(visits_path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const fs::path where = visits_path.string() + ":" + std::to_string(lineno);
      const json j = parse_json(line, where);
      VisitRecord r{field<std::size_t>(j, "t", where),      field<std::size_t>(j, "h", where),
                    field<std::size_t>(j, "s", where),      field<std::size_t>(j, "a", where),
                    field<std::size_t>(j, "s_next", where), field<double>(j, "r", where),
                    field<std::size_t>(j, "n_after", where), field<double>(j, "alpha", where),
                    field<double>(j, "gamma", where),       field<double>(j, "eta", where),
                    field<double>(j, "beta", where)};
      art.visits.records.push_back(r);
    }
  }

  const fs::path hist_path = dir / "vbar_history.jsonl";
  art.vbar_history.num_states = S;
  art.vbar_history.horizon = H;
  {
    std::istringstream in(read_file(hist_path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const fs::path where = hist_path.string() + ":" + std::to_string(lineno);
      const json j = parse_json(line, where);
      if (field<std::size_t>(j, "t", where) != art.vbar_history.snapshots.size() + 1) {
        throw ParseError(where.string() + ": episodes out of order");
      }
      auto row = field<std::vector<double>>(j, "vbar", where);
      if (row.size() != (H + 1) * S) throw ParseError(where.string() + ": wrong snapshot size");
      art.vbar_history.snapshots.push_back(std::move(row));
    }
  }

  const fs::path tables_path = dir / "final_tables.json";
  const json tables = parse_json(read_file(tables_path), tables_path);
  art.q = field<std::vector<double>>(tables, "q", tables_path);
  art.vbar = field<std::vector<double>>(tables, "vbar", tables_path);
  art.vbias_ring = field<std::vector<double>>(tables, "vbias", tables_path);
  art.counts = field<std::vector<std::uint64_t>>(tables, "counts", tables_path);
  art.sum_y = field<std::vector<double>>(tables, "sum_y", tables_path);
  art.sum_y2 = field<std::vector<double>>(tables, "sum_y2", tables_path);
  art.corr_sum = field<std::vector<double>>(tables, "corr_sum", tables_path);
  for (auto m : field<std::vector<long long>>(tables, "aware_moment", tables_path)) {
    art.aware_moment.push_back(m < 0 ? kNever : static_cast<std::size_t>(m));
  }
  const std::size_t pairs = H * S * art.params.num_actions;
  if (art.q.size() != pairs || art.counts.size() != pairs || art.sum_y.size() != pairs ||
      art.sum_y2.size() != pairs || art.corr_sum.size() != pairs ||
      art.vbias_ring.size() != pairs * S || art.vbar.size() != (H + 1) * S ||
      art.aware_moment.size() != S) {
    throw ParseError(tables_path.string() + ": table shapes do not match the dimensions");
  }
  return art;
}

ValueTables cached_optimal_values(const fs::path& env_path, const EnvSpec& env) {
  const std::string bytes = read_file(env_path);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  const fs::path cache = env_path.string() + ".oracle-" + hex + ".json";

  if (fs::exists(cache)) {
    try {
      const json j = json::parse(read_file(cache));
      ValueTables vt{j.at("S").get<std::size_t>(), j.at("A").get<std::size_t>(),
                     j.at("H").get<std::size_t>(), j.at("vstar").get<std::vector<double>>(),
                     j.at("qstar").get<std::vector<double>>()};
      if (vt.num_states == env.num_states && vt.num_actions == env.num_actions &&
          vt.horizon == env.horizon && vt.vstar.size() == (env.horizon + 1) * env.num_states &&
          vt.qstar.size() == env.horizon * env.num_states * env.num_actions) {
        return vt;
      }
    } catch (const json::exception&) {
      // unreadable cache: recompute below
    }
  }

  ValueTables vt = optimal_values(env);
  json j = {{"S", vt.num_states}, {"A", vt.num_actions}, {"H", vt.horizon},
            {"vstar", vt.vstar},  {"qstar", vt.qstar}};
  const fs::path tmp = cache.string() + ".tmp";
  try {
    write_file(tmp, j.dump() + "\n");
    fs::rename(tmp, cache);
  } catch (const std::exception&) {
    // a read-only env directory just means no cache
    std::error_code ec;
    fs::remove(tmp, ec);
  }
  return vt;
}

}  // namespace uulab
