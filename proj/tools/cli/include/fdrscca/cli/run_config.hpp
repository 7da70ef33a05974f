#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdrscca/scca.hpp"
#include "json.hpp"

namespace fdrscca::cli {

using Json = nlohmann::ordered_json;

// Invalid flags, config file contents or combinations thereof (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { kAnalyze, kSimulate, kVerify };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct SimulateConfig {
  std::string model = "block";  // "block" or "latent"
  Index n = 600;
  Index px = 300;
  Index py = 300;
  // Block model grid.
  std::vector<Index> sx{1, 20, 40, 60};
  std::vector<Index> sy{1, 20, 40, 60};
  double rho_within = 0.5;
  double rho_background = 0.1;
  double rho_cross = 0.4;
  Index k_blocks = 1;
  // Latent model grid.
  std::vector<Index> latent_s{30, 60, 90, 120, 150};
  double rho_xy = 0.5;
  std::string x_source = "normal";  // "normal" or "skewed"
  std::string y_source = "normal";

  Index reps = 200;
  std::vector<double> q{0.05, 0.1, 0.2};
  std::vector<std::string> methods{"fdr_corrected"};
  std::optional<Index> target_nnz = 100;

  // n = 600, pX = pY = 1500, sX, sY in {1, 20, ..., 120}, 500 reps.
  void apply_full_scale();
};

struct VerifyConfig {
  std::optional<std::string> only;  // "theorem1", "lemma" or "bh"
  std::optional<Index> reps;
};

struct RunConfig {
  Mode mode = Mode::kAnalyze;
  std::string x_path;
  std::string y_path;
  std::optional<std::string> stratum_column;  // column of the X file
  std::string out = "fdrscca-out";
  bool write_csv = true;
  bool write_json = true;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;

  double q_u = 0.1;
  double q_v = 0.1;
  std::optional<double> combined_q;
  std::optional<Index> target_nnz;
  SolverConfig solver;

  SimulateConfig simulate;
  VerifyConfig verify;

  // Throws ConfigError when a mode-specific field is missing or out of range.
  void validate() const;
};

// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
RunConfig merge_config(RunConfig base, const Json& j);
RunConfig load_config_file(RunConfig base, const std::string& path);

// Full echo of the configuration. `include_out` controls whether the output
// directory is part of it (left out where byte-identical reruns matter).
Json to_json(const RunConfig& config, bool include_out = true);

}  // namespace fdrscca::cli
