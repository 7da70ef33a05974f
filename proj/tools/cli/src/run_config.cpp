#include "fdrscca/cli/run_config.hpp"

#include <fstream>
#include <set>

#include "fdrscca/simulation.hpp"

namespace fdrscca::cli {

namespace {

template <typename T>
void read(const Json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
void read_optional(const Json& j, const char* key, std::optional<T>& target) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    target.reset();
    return;
  }
  T value{};
  read(j, key, value);
  target = value;
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError("unknown config key '" + item.key() + "' in " + where);
    }
  }
}

void check_level(double q, const std::string& what) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError(what + " must lie in (0, 1)");
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kAnalyze: return "analyze";
    case Mode::kSimulate: return "simulate";
    case Mode::kVerify: return "verify";
  }
  return "analyze";
}

Mode parse_mode(const std::string& text) {
  if (text == "analyze") return Mode::kAnalyze;
  if (text == "simulate") return Mode::kSimulate;
  if (text == "verify") return Mode::kVerify;
  throw ConfigError("unknown mode '" + text + "' (expected analyze, simulate or verify)");
}

void SimulateConfig::apply_full_scale() {
  n = 600;
  px = py = 1500;
  sx = sy = {1, 20, 40, 60, 80, 100, 120};
  reps = 500;
}

void RunConfig::validate() const {
  check_level(q_u, "q_u");
  check_level(q_v, "q_v");
  if (combined_q) check_level(*combined_q, "combined_q");
  if (target_nnz && *target_nnz < 1) throw ConfigError("target_nnz must be at least 1");
  if (!write_csv && !write_json) throw ConfigError("at least one output format is required");
  try {
    solver.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  switch (mode) {
    case Mode::kAnalyze:
      if (x_path.empty() || y_path.empty()) throw ConfigError("analyze needs --x and --y");
      break;
    case Mode::kSimulate: {
      const auto& s = simulate;
      if (s.model != "block" && s.model != "latent") {
        throw ConfigError("simulate.model must be 'block' or 'latent'");
      }
      if (s.reps < 1) throw ConfigError("reps must be at least 1");
      if (s.n < 9) throw ConfigError("simulate.n must be at least 9");
      if (s.px < 1 || s.py < 1) throw ConfigError("simulate.px and simulate.py must be positive");
      if (s.q.empty()) throw ConfigError("at least one q level is required");
      for (double q : s.q) check_level(q, "q");
      if (s.methods.empty()) throw ConfigError("at least one method is required");
      for (const auto& m : s.methods) {
        try {
          Method::parse(m);
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      }
      if (s.model == "block" && (s.sx.empty() || s.sy.empty())) {
        throw ConfigError("simulate.sx and simulate.sy must be nonempty");
      }
      if (s.model == "latent" && s.latent_s.empty()) {
        throw ConfigError("simulate.latent_s must be nonempty");
      }
      for (const auto& src : {s.x_source, s.y_source}) {
        if (src != "normal" && src != "skewed") {
          throw ConfigError("column source must be 'normal' or 'skewed', got '" + src + "'");
        }
      }
      if (s.target_nnz && *s.target_nnz < 1) throw ConfigError("target_nnz must be at least 1");
      break;
    }
    case Mode::kVerify:
      if (verify.only && *verify.only != "theorem1" && *verify.only != "lemma" &&
          *verify.only != "bh") {
        throw ConfigError("--only must be one of theorem1, lemma, bh");
      }
      if (verify.reps && *verify.reps < 2) throw ConfigError("reps must be at least 2");
      break;
  }
}

RunConfig merge_config(RunConfig c, const Json& j) {
  reject_unknown(j,
                 {"mode", "x", "y", "stratum_column", "out", "format", "seed", "threads", "q",
                  "q_u", "q_v", "combined_q", "target_nnz", "solver", "simulate", "verify"},
                 "config");
  if (j.contains("mode")) {
    std::string mode;
    read(j, "mode", mode);
    c.mode = parse_mode(mode);
  }
  read(j, "x", c.x_path);
  read(j, "y", c.y_path);
  read_optional(j, "stratum_column", c.stratum_column);
  read(j, "out", c.out);
  if (j.contains("format")) {
    std::vector<std::string> formats;
    if (j.at("format").is_string()) {
      formats.push_back(j.at("format").get<std::string>());
    } else {
      read(j, "format", formats);
    }
    c.write_csv = c.write_json = false;
    for (const auto& f : formats) {
      if (f == "csv") {
        c.write_csv = true;
      } else if (f == "json") {
        c.write_json = true;
      } else {
        throw ConfigError("unknown format '" + f + "'");
      }
    }
  }
  read_optional(j, "seed", c.seed);
  read(j, "threads", c.threads);
  if (j.contains("q")) {
    read(j, "q", c.q_u);
    c.q_v = c.q_u;
  }
  read(j, "q_u", c.q_u);
  read(j, "q_v", c.q_v);
  read_optional(j, "combined_q", c.combined_q);
  read_optional(j, "target_nnz", c.target_nnz);
  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    reject_unknown(s, {"max_iters", "tol"}, "solver");
    read(s, "max_iters", c.solver.max_iters);
    read(s, "tol", c.solver.tol);
  }
  if (j.contains("simulate")) {
    const Json& s = j.at("simulate");
    reject_unknown(s,
                   {"model", "n", "px", "py", "sx", "sy", "rho_within", "rho_background",
                    "rho_cross", "k_blocks", "latent_s", "rho_xy", "x_source", "y_source", "reps",
                    "q", "methods", "target_nnz", "full_scale"},
                   "simulate");
    bool full = false;
    read(s, "full_scale", full);
    if (full) c.simulate.apply_full_scale();
    auto& t = c.simulate;
    read(s, "model", t.model);
    read(s, "n", t.n);
    read(s, "px", t.px);
    read(s, "py", t.py);
    read(s, "sx", t.sx);
    read(s, "sy", t.sy);
    read(s, "rho_within", t.rho_within);
    read(s, "rho_background", t.rho_background);
    read(s, "rho_cross", t.rho_cross);
    read(s, "k_blocks", t.k_blocks);
    read(s, "latent_s", t.latent_s);
    read(s, "rho_xy", t.rho_xy);
    read(s, "x_source", t.x_source);
    read(s, "y_source", t.y_source);
    read(s, "reps", t.reps);
    read(s, "q", t.q);
    read(s, "methods", t.methods);
    read_optional(s, "target_nnz", t.target_nnz);
  }
  if (j.contains("verify")) {
    const Json& v = j.at("verify");
    reject_unknown(v, {"only", "reps"}, "verify");
    read_optional(v, "only", c.verify.only);
    read_optional(v, "reps", c.verify.reps);
  }
  return c;
}

RunConfig load_config_file(RunConfig base, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return merge_config(std::move(base), j);
}

Json to_json(const RunConfig& c, bool include_out) {
  Json j;
  j["mode"] = to_string(c.mode);
  if (c.mode == Mode::kAnalyze) {
    j["x"] = c.x_path;
    j["y"] = c.y_path;
    j["stratum_column"] = optional_json(c.stratum_column);
  }
  if (include_out) j["out"] = c.out;
  Json formats = Json::array();
  if (c.write_csv) formats.push_back("csv");
  if (c.write_json) formats.push_back("json");
  j["format"] = formats;
  j["seed"] = optional_json(c.seed);
  j["threads"] = c.threads;
  if (c.mode == Mode::kAnalyze) {
    j["q_u"] = c.q_u;
    j["q_v"] = c.q_v;
    j["combined_q"] = optional_json(c.combined_q);
    j["target_nnz"] = optional_json(c.target_nnz);
  }
  if (c.mode != Mode::kVerify) {
    j["solver"] = {{"max_iters", c.solver.max_iters}, {"tol", c.solver.tol}};
  }
  if (c.mode == Mode::kSimulate) {
    const auto& s = c.simulate;
    Json sim;
    sim["model"] = s.model;
    sim["n"] = s.n;
    sim["px"] = s.px;
    sim["py"] = s.py;
    if (s.model == "block") {
      sim["sx"] = s.sx;
      sim["sy"] = s.sy;
      sim["rho_within"] = s.rho_within;
      sim["rho_background"] = s.rho_background;
      sim["rho_cross"] = s.rho_cross;
      sim["k_blocks"] = s.k_blocks;
    } else {
      sim["latent_s"] = s.latent_s;
      sim["rho_xy"] = s.rho_xy;
      sim["x_source"] = s.x_source;
      sim["y_source"] = s.y_source;
    }
    sim["reps"] = s.reps;
    sim["q"] = s.q;
    sim["methods"] = s.methods;
    sim["target_nnz"] = optional_json(s.target_nnz);
    j["simulate"] = sim;
  }
  if (c.mode == Mode::kVerify) {
    j["verify"] = {{"only", optional_json(c.verify.only)},
                   {"reps", optional_json(c.verify.reps)}};
  }
  return j;
}

}  // namespace fdrscca::cli
