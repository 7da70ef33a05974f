#include <algorithm>
#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "fdrscca/cli/commands.hpp"
#include "fdrscca/cli/verify.hpp"
#include "fdrscca/random.hpp"
#include "fdrscca/version.hpp"

namespace fdrscca::cli {

namespace {

// Verify mode is a battery of Monte-Carlo checks; it runs from a fixed seed
// unless one is given so that a plain `--mode verify` is reproducible.
constexpr std::uint64_t kVerifyDefaultSeed = 20240917;

}  // namespace

namespace detail {

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << content;
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
}

std::string csv_preamble(const Json& config_echo) {
  return std::string("# fdrscca ") + kVersion + " config=" + config_echo.dump() + "\n";
}

Json manifest(const RunConfig& config, const std::string& seed_source, const Json& files) {
  const std::uint64_t seed = *config.seed;
  Json m;
  m["tool"] = "fdrscca";
  m["version"] = kVersion;
  m["mode"] = to_string(config.mode);
  m["seed"] = seed;
  m["seed_source"] = seed_source;
  if (config.mode == Mode::kAnalyze) {
    m["derived_seeds"] = {{"split", stream_seed(seed, Stream::kSplit)}, {"solver", seed}};
  } else if (config.mode == Mode::kSimulate) {
    m["derived_seeds"] = {
        {"rep_seed_rule", "mix64(seed + (rep + 1) * 0x9E3779B97F4A7C15)"},
        {"first_rep_seeds", {child_seed(seed, 0), child_seed(seed, 1), child_seed(seed, 2)}}};
  }
  m["config"] = to_json(config, true);
  m["files"] = files;
  return m;
}

}  // namespace detail

int cmd_verify(const RunConfig& config, const std::string& seed_source, std::ostream& out,
               std::ostream&) {
  const std::uint64_t seed = *config.seed;
  const auto& only = config.verify.only;
  std::vector<CheckResult> results;
  if (!only || *only == "theorem1") {
    results.push_back(config.verify.reps ? check_theorem1(seed, *config.verify.reps)
                                         : check_theorem1(seed));
  }
  if (!only || *only == "lemma") {
    results.push_back(config.verify.reps ? check_lemma(seed, *config.verify.reps)
                                         : check_lemma(seed));
  }
  if (!only || *only == "bh") results.push_back(check_bh(seed));

  bool all = true;
  out << "seed " << seed << " (" << seed_source << ")\n";
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail
        << (r.warning ? " [warning: too few Monte-Carlo draws]" : "") << '\n';
    all = all && r.passed;
  }
  return all ? kExitOk : kExitCheckFailed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"FDR-corrected sparse canonical correlation analysis"};
  app.set_version_flag("--version", std::string(kVersion));

  std::string mode, x, y, out_dir, config_path, only, stratum;
  std::vector<double> q;
  std::vector<std::string> formats, methods;
  Index target_nnz = 0, reps = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double combined_q = 0.0;
  bool full_scale = false;

  app.add_option("--mode", mode, "analyze, simulate or verify")
      ->check(CLI::IsMember({"analyze", "simulate", "verify"}));
  app.add_option("--x", x, "CSV file with the X matrix (rows = samples)");
  app.add_option("--y", y, "CSV file with the Y matrix");
  app.add_option("--stratum-column", stratum,
                 "column of the X file holding stratum labels for the split");
  app.add_option("--q", q, "FDR level(s); analyze: q or q_u,q_v; simulate: list")
      ->delimiter(',');
  app.add_option("--combined-q", combined_q, "single BH pass over u and v at this level");
  app.add_option("--target-nnz", target_nnz, "preliminary support size");
  app.add_option("--seed", seed, "master seed (drawn from entropy when absent)");
  app.add_option("--threads", threads, "worker threads for simulation reps (0 = all cores)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", formats, "csv, json or both")
      ->delimiter(',')
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--config", config_path, "JSON config file; flags take precedence");
  app.add_option("--reps", reps, "repetitions (simulate) or Monte-Carlo draws (verify)");
  app.add_option("--methods", methods,
                 "simulate: fdr_corrected, cv, permutation, fixed_lambda:<value>")
      ->delimiter(',');
  app.add_option("--only", only, "verify: theorem1, lemma or bh");
  app.add_flag("--full-scale", full_scale, "simulate the full-size grid (pX = pY = 1500)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const auto given = [&](const char* flag) { return app.count(flag) > 0; };

  RunConfig config;
  std::string seed_source;
  try {
    if (given("--config")) config = load_config_file(config, config_path);
    const std::optional<std::uint64_t> config_seed = config.seed;
    if (given("--mode")) config.mode = parse_mode(mode);
    if (full_scale) config.simulate.apply_full_scale();
    if (given("--x")) config.x_path = x;
    if (given("--y")) config.y_path = y;
    if (given("--stratum-column")) config.stratum_column = stratum;
    if (given("--out")) config.out = out_dir;
    if (given("--format")) {
      config.write_csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
      config.write_json = std::find(formats.begin(), formats.end(), "json") != formats.end();
    }
    if (given("--threads")) config.threads = threads;
    if (given("--combined-q")) config.combined_q = combined_q;
    if (given("--q")) {
      if (config.mode == Mode::kSimulate) {
        config.simulate.q = q;
      } else if (q.size() == 1) {
        config.q_u = config.q_v = q[0];
      } else if (q.size() == 2) {
        config.q_u = q[0];
        config.q_v = q[1];
      } else {
        throw ConfigError("analyze takes --q q or --q q_u,q_v");
      }
    }
    if (given("--target-nnz")) {
      if (config.mode == Mode::kSimulate) {
        config.simulate.target_nnz = target_nnz;
      } else {
        config.target_nnz = target_nnz;
      }
    }
    if (given("--reps")) {
      if (config.mode == Mode::kVerify) {
        config.verify.reps = reps;
      } else {
        config.simulate.reps = reps;
      }
    }
    if (given("--methods")) config.simulate.methods = methods;
    if (given("--only")) config.verify.only = only;

    if (given("--seed")) {
      config.seed = seed;
      seed_source = "flag";
    } else if (config_seed) {
      seed_source = "config";
    } else if (config.mode == Mode::kVerify) {
      config.seed = kVerifyDefaultSeed;
      seed_source = "default";
    } else {
      config.seed = entropy_seed();
      seed_source = "entropy";
    }
    config.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    switch (config.mode) {
      case Mode::kAnalyze: return cmd_analyze(config, seed_source, out, err);
      case Mode::kSimulate: return cmd_simulate(config, seed_source, out, err);
      case Mode::kVerify: return cmd_verify(config, seed_source, out, err);
    }
  } catch (const Error& e) {
    err << e.name() << ": " << e.what() << '\n';
    return kExitPipeline;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace fdrscca::cli
