#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fdrscca/core.hpp"
#include "fdrscca/scca.hpp"

namespace fdrscca {

struct PipelineConfig {
  double q_u = 0.1;
  double q_v = 0.1;
  // Preliminary support size; defaults to floor(n2 / 2). Clamped to pX / pY.
  std::optional<Index> target_nnz;
  std::uint64_t split_seed = 0;
  SolverConfig solver;
  // When set, a single BH pass over the pooled u and v hypotheses at this level
  // replaces the two separate passes.
  std::optional<double> combined_q;
  // Optional per-row stratum labels, balanced across the three parts.
  std::optional<std::vector<int>> strata;

  void validate() const;
};

// Random three-way row partition with n0 = floor(n/3); remainder rows go to
// part1, then part2. Rows are shuffled (within strata when labels are given)
// and dealt round-robin, so each stratum is spread evenly over the parts.
// Parts are returned sorted. Throws TooFewRows for n < 9.
SplitIndices split_data(Index n, std::uint64_t seed,
                        const std::optional<std::vector<int>>& strata = std::nullopt);

// Maximum-likelihood (divisor n1) covariance of [x1 y1], partitioned into blocks.
CovarianceModel mle_covariance(const Matrix& x1, const Matrix& y1);

// Benjamini-Hochberg step-up at level q. Returns the rejected indices, sorted.
IndexSet benjamini_hochberg(const Vector& pvals, double q);

// Steps 1-5 of the procedure: everything up to, but excluding, the FDR cut.
// Kept separate so one set of p-values can be cut at several levels.
struct PreparedTests {
  SplitIndices split;
  CanonicalPair preliminary;
  PenaltyParams penalty;
  bool tuning_hit_band = true;
  CovarianceModel sigma_hat;  // restricted to the preliminary supports
  Vector z_u, z_v, p_u, p_v;  // indexed like preliminary.support_u / support_v
  Vector full_u_direction;    // X'Y v0 on all rows
  Vector full_v_direction;    // Y'X u0 on all rows
};

struct FdrCcaResult {
  CanonicalPair corrected;
  CanonicalPair preliminary;
  Vector z_u, z_v, p_u, p_v;
  IndexSet rejected_u;
  IndexSet rejected_v;
  SplitIndices split;
  CovarianceModel sigma_hat;
  PenaltyParams penalty;
  bool tuning_hit_band = true;
  double q_u = 0.1;
  double q_v = 0.1;
  std::optional<double> combined_q;
};

PreparedTests prepare_tests(const DataMatrixPair& data, const PipelineConfig& cfg);

// Step 6 at the given levels. `data` must be the data `tests` came from.
FdrCcaResult apply_fdr_correction(const DataMatrixPair& data, const PreparedTests& tests,
                                  double q_u, double q_v,
                                  std::optional<double> combined_q = std::nullopt);

FdrCcaResult run_procedure(const DataMatrixPair& data, const PipelineConfig& cfg);

struct FdpTpp {
  double fdp_u = 0.0;
  double fdp_v = 0.0;
  double tpp_u = 0.0;
  double tpp_v = 0.0;
  Index rejections_u = 0;
  Index rejections_v = 0;
  Index false_u = 0;
  Index false_v = 0;
};

// FDP = V / max(R, 1), TPP = (R - V) / s. With s = 0, TPP is 1 (no true
// feature could be missed).
FdpTpp fdp_tpp(const IndexSet& selected_u, const IndexSet& selected_v, const IndexSet& truth_u,
               const IndexSet& truth_v);
FdpTpp fdp_tpp(const FdrCcaResult& result, const IndexSet& truth_u, const IndexSet& truth_v);

}  // namespace fdrscca
