#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fdrscca/core.hpp"

namespace fdrscca {

// l1 penalty levels in the (lambda, sqrt(p)) parametrization: c = lambda * sqrt(p).
class PenaltyParams {
 public:
  // Throws InfeasiblePenalty unless both lambdas lie in (0, 1].
  PenaltyParams(double lambda_u, double lambda_v, Index px, Index py);

  // Penalty with explicit l1 bounds (used by tuning, which searches c directly).
  static PenaltyParams from_bounds(double c1, double c2, Index px, Index py);

  double lambda_u() const noexcept { return lambda_u_; }
  double lambda_v() const noexcept { return lambda_v_; }
  double c1() const noexcept { return c1_; }
  double c2() const noexcept { return c2_; }

 private:
  PenaltyParams() = default;
  double lambda_u_ = 1.0;
  double lambda_v_ = 1.0;
  double c1_ = 1.0;
  double c2_ = 1.0;
};

struct SolverConfig {
  int max_iters = 200;
  double tol = 1e-6;  // on the l-inf change of (u, v) between outer iterations
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Raised when the alternating solver hits max_iters; the last iterate is usable.
class DidNotConverge : public Error {
 public:
  DidNotConverge(CanonicalPair last, int iterations);
  const CanonicalPair& last_iterate() const noexcept { return last_; }
  int iterations() const noexcept { return iterations_; }

 private:
  CanonicalPair last_;
  int iterations_;
};

// Raised when support tuning cannot land in the target band. Carries the
// sparsest bracketing solution that respects the hard support cap.
class TargetUnreachable : public Error {
 public:
  TargetUnreachable(const std::string& what, CanonicalPair fallback, PenaltyParams penalty);
  const CanonicalPair& fallback() const noexcept { return fallback_; }
  const PenaltyParams& penalty() const noexcept { return penalty_; }

 private:
  CanonicalPair fallback_;
  PenaltyParams penalty_;
};

// Componentwise sign(w) * max(|w| - delta, 0). Entries that shrink to zero are
// stored as exact 0.0.
Vector soft_threshold(const Vector& w, double delta);

// argmax_u <u, a> subject to ||u||_2 <= 1 and ||u||_1 <= bound.
//
// For bound >= 1 the maximizer is S(a, delta) / ||S(a, delta)||_2 with delta = 0
// when the l1 constraint is slack, otherwise the unique delta at which the l1
// constraint binds. delta is located by bisection over the sorted breakpoints
// |a|_(k) and solved in closed form inside the bracketing segment. For
// bound < 1 the maximizer is the l1-ball vertex bound * sign(a_k) * e_k.
Vector l1_l2_maximizer(const Vector& a, double bound);

// Hotelling's first canonical pair. u, v have unit sample variance (divisor
// n-1); objective is the first canonical correlation.
CanonicalPair classical_cca(const DataMatrixPair& data);

struct SolveTrace {
  std::vector<double> objective;  // after each full (u then v) update
  int iterations = 0;
  bool converged = false;
};

// Alternating maximizer for max (1/n) u'X'Yv under l2 and l1 bounds.
//
// The cross-product and the unpenalized starting vector are computed once, so
// repeated solves over a penalty path (tuning, CV, permutation) share them.
class SparseCcaSolver {
 public:
  SparseCcaSolver(const DataMatrixPair& data, SolverConfig cfg = {});
  SparseCcaSolver(Matrix cross, SolverConfig cfg);

  // Throws DidNotConverge (with the last iterate) when max_iters is reached.
  CanonicalPair solve(const PenaltyParams& penalty) const;
  // Never throws DidNotConverge; reports convergence in `trace`.
  CanonicalPair solve(const PenaltyParams& penalty, SolveTrace& trace) const;

  const Matrix& cross() const noexcept { return cross_; }
  const Vector& initial_v() const noexcept { return v_init_; }
  Index px() const noexcept { return cross_.rows(); }
  Index py() const noexcept { return cross_.cols(); }

 private:
  Matrix cross_;  // X'Y / n
  Vector v_init_;
  SolverConfig cfg_;
};

CanonicalPair l1_penalized_cca(const DataMatrixPair& data, const PenaltyParams& penalty,
                               const SolverConfig& cfg = {});

struct TunedFit {
  CanonicalPair pair;
  PenaltyParams penalty;
};

// Bisects lambda_u, then lambda_v (alternating until both settle) so that
// each support lands in [0.8 * target, 1.2 * target] without ever exceeding
// floor(1.2 * target) or `max_support` when given.
TunedFit tune_to_target_support(const DataMatrixPair& data, Index target_nnz_u,
                                Index target_nnz_v, const SolverConfig& cfg = {},
                                std::optional<Index> max_support = std::nullopt);

// Ten equispaced values in [0.1, 0.7].
std::vector<double> default_lambda_grid();

// Sample Pearson correlation of a and b; 0 when either is constant.
double sample_correlation(const Vector& a, const Vector& b);

struct PermutationSelection {
  PenaltyParams penalty;
  std::vector<double> z_statistics;  // one per grid value
  std::vector<double> correlations;  // on the original data
};

// Permutation-based lambda selection with lambda_u = lambda_v. Rows of Y are
// permuted; the statistic per lambda is
//   (atanh(cor) - mean(atanh(cor_perm))) / sd(atanh(cor_perm)).
PermutationSelection permutation_select_lambda_detailed(const DataMatrixPair& data,
                                                        const std::vector<double>& grid,
                                                        int n_perms = 25,
                                                        const SolverConfig& cfg = {});
PenaltyParams permutation_select_lambda(const DataMatrixPair& data,
                                        const std::vector<double>& grid, int n_perms = 25,
                                        const SolverConfig& cfg = {});

struct CvSelection {
  PenaltyParams penalty;
  std::vector<double> mean_heldout_correlation;  // one per grid value
};

// k-fold CV over lambda_u = lambda_v; folds are contiguous blocks of a row
// shuffle seeded by cfg.rng_seed.
CvSelection cv_select_lambda_detailed(const DataMatrixPair& data, const std::vector<double>& grid,
                                      int k_folds = 5, const SolverConfig& cfg = {});
PenaltyParams cv_select_lambda(const DataMatrixPair& data, const std::vector<double>& grid,
                               int k_folds = 5, const SolverConfig& cfg = {});

}  // namespace fdrscca
