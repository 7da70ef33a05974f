#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fdrscca/core.hpp"
#include "fdrscca/fdr_pipeline.hpp"
#include "fdrscca/random.hpp"
#include "fdrscca/scca.hpp"

namespace fdrscca {

// Block-wise constant joint covariance. The first sX features of X and sY of Y
// are active. Active features form k_blocks equal contiguous blocks with
// rho_within inside a block and rho_background everywhere else off-diagonal.
// Cross-correlation rho_cross links block b of X with block b of Y; with one
// block that is the whole sX x sY rectangle.
struct BlockModelSpec {
  Index px = 0;
  Index py = 0;
  Index sx = 0;
  Index sy = 0;
  double rho_within = 0.5;
  double rho_background = 0.1;
  double rho_cross = 0.4;
  Index k_blocks = 1;

  void validate() const;
};

// Throws NotPositiveDefinite when the assembled Sigma is not PD.
CovarianceModel build_block_model(const BlockModelSpec& spec);

// Cholesky-factored sampler; factor once, draw many datasets.
class GaussianSampler {
 public:
  explicit GaussianSampler(const CovarianceModel& model);
  // n i.i.d. rows of N(0, Sigma); deterministic given seed.
  DataMatrixPair sample(Index n, std::uint64_t seed) const;

 private:
  Matrix lower_;
  Index px_;
};

DataMatrixPair sample_joint_gaussian(const CovarianceModel& model, Index n, std::uint64_t seed);

enum class ColumnSource {
  kStandardNormal,
  // Genotype-like {0,1,2} counts, Binomial(2, maf) with maf ~ U(0.05, 0.5) per
  // column: discrete and skewed.
  kSkewedDiscrete,
};

struct LatentSpec {
  Index s = 0;
  double rho_xy = 0.5;
  ColumnSource x_source = ColumnSource::kStandardNormal;
  ColumnSource y_source = ColumnSource::kStandardNormal;

  void validate() const;
};

struct LatentModelSpec {
  Index px = 0;
  Index py = 0;
  LatentSpec latent;
};

struct InjectedData {
  DataMatrixPair data;
  IndexSet truth_u;
  IndexSet truth_v;
};

// Replaces the first s columns of x and y by sqrt(1-rho) col + sqrt(rho) z with
// one shared z ~ N(0, I_n). Columns are expected to have unit variance already.
InjectedData inject_latent_cross_correlation(const DataMatrixPair& data, const LatentSpec& spec,
                                             std::uint64_t seed);

// Draws x and y from the configured column sources, standardizes, then injects.
InjectedData generate_latent_data(const LatentModelSpec& spec, Index n, std::uint64_t seed);

// Features with a nonzero row (X) or column (Y) of Sigma_XY.
std::pair<IndexSet, IndexSet> truth_sets(const CovarianceModel& model);

enum class MethodKind { kFdrCorrected, kFixedLambda, kPermutation, kCrossValidation };

struct Method {
  MethodKind kind = MethodKind::kFdrCorrected;
  double lambda = 0.3;     // kFixedLambda only
  int n_perms = 25;        // kPermutation only
  int k_folds = 5;         // kCrossValidation only
  std::vector<double> grid = default_lambda_grid();

  static Method fdr_corrected() { return {}; }
  static Method fixed_lambda(double lambda);
  static Method permutation(int n_perms = 25);
  static Method cross_validation(int k_folds = 5);

  // "fdr_corrected", "fixed_lambda(0.3)", "permutation", "cv".
  std::string label() const;
  // Accepts the labels above plus "fixed_lambda:<value>" and "lambda=<value>".
  static Method parse(const std::string& text);
};

struct ExperimentSpec {
  std::variant<BlockModelSpec, LatentModelSpec> model;
  Index n = 600;
  Index reps = 200;
  std::vector<double> q_levels{0.1};
  Method method;
  std::uint64_t master_seed = 0;
  std::optional<Index> target_nnz;
  SolverConfig solver;
  unsigned threads = 0;

  void validate() const;
};

struct RepOutcome {
  Index rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;            // error name when !ok
  std::vector<FdpTpp> metrics;  // one per level (one entry for non-FDR methods)
};

struct Estimate {
  double mean = 0.0;
  std::optional<double> se;  // sample sd / sqrt(reps); absent for a single rep
};

struct LevelSummary {
  std::optional<double> q;  // absent for methods without a target level
  Index reps_ok = 0;
  Index excluded = 0;
  Estimate fdr_u, fdr_v, tpr_u, tpr_v;
  std::map<Index, Index> rejections_hist_u;  // R -> number of reps
  std::map<Index, Index> rejections_hist_v;
  std::vector<double> tpp_u;  // per successful rep, in rep order
  std::vector<double> tpp_v;
};

struct ExperimentSummary {
  std::string method;
  std::vector<LevelSummary> levels;
  std::vector<RepOutcome> reps;
};

// Child seed of rep r is child_seed(master_seed, r); data, split and any
// method randomness are sub-streams of it.
ExperimentSummary run_experiment(const ExperimentSpec& spec);

// Aggregates per-rep outcomes; independent of their order.
ExperimentSummary summarize(const ExperimentSpec& spec, std::vector<RepOutcome> reps);

struct TppHistogram {
  Index k = 1;
  std::vector<double> centers;  // j / k for j = 0..k
  std::vector<double> mass;     // fraction of reps nearest to, and within 0.05 of, each center
  double mass_near_multiples = 0.0;
  Index distinct_values = 0;    // distinct observed TPP values
};

// TPP(v) distribution against the multiples of 1/k.
TppHistogram tpp_distribution(const LevelSummary& level, Index k_blocks);
TppHistogram tpp_distribution(const std::vector<double>& tpp, Index k_blocks);

}  // namespace fdrscca
