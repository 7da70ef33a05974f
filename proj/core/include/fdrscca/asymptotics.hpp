#pragma once

#include <cstdint>
#include <optional>

#include "fdrscca/core.hpp"

namespace fdrscca {

// Gaussian limit of sqrt(n) * ((1/n) X'Yv - mu) for a fixed v.
struct NullDistribution {
  Vector mu;
  Vector omega_diag;
  std::optional<Matrix> omega;  // full matrix, only when requested
  Index n_eff = 0;
};

// mu = Sigma_XY v. Throws DimensionMismatch unless v has pY entries.
Vector asymptotic_mean(const CovarianceModel& model, const Vector& v);

// Omega = mu mu' + (v' Sigma_Y v) Sigma_X.
Matrix asymptotic_covariance(const CovarianceModel& model, const Vector& v);

// Diagonal of Omega without forming the full matrix.
Vector asymptotic_variance_diag(const CovarianceModel& model, const Vector& v);

NullDistribution null_distribution(const CovarianceModel& model, const Vector& v, Index n_eff,
                                   bool full_omega = false);

// z_i = xi_i / (sqrt(n2) * sqrt(omega_hat_ii)) with xi = x2' y2 v0 and omega_hat
// from (v0, model_hat). x2/y2 and model_hat must already be restricted to the
// preliminary supports. For the v-side statistics call with the roles of X
// and Y swapped (model_hat.swapped(), u0).
//
// Throws NonPositiveVariance(i) when omega_hat_ii <= 0 for a nonzero v0.
Vector null_zscores(const Matrix& x2, const Matrix& y2, const Vector& v0,
                    const CovarianceModel& model_hat);

// Standard normal CDF and upper tail via erfc (no cancellation in the tail).
double normal_cdf(double z);
double normal_upper_tail(double z);

// p_i = 2 (1 - Phi(|z_i|)).
Vector two_sided_pvalues(const Vector& z);

struct TraceCovariance {
  double analytic = 0.0;   // 2n tr(A Sigma B Sigma)
  double empirical = 0.0;  // sample covariance of tr(A S), tr(B S)
  double standard_error = 0.0;
};

// Monte-Carlo check of Cov(tr(AS), tr(BS)) = 2n tr(A Sigma B Sigma) for
// S = Z'Z, Z with n i.i.d. N(0, Sigma) rows. a, b must be symmetric and sized
// to the joint Sigma; otherwise AsymmetricInput / DimensionMismatch.
TraceCovariance wishart_trace_cov_oracle(const Matrix& a, const Matrix& b,
                                         const CovarianceModel& model, Index n, Index reps,
                                         std::uint64_t seed);

// A = (1/2n) [[0, e_i v'], [v e_i', 0]], the matrix with tr(A [X Y]'[X Y]) = ((1/n) X'Yv)_i.
Matrix cross_product_selector(Index px, const Vector& v, Index i, Index n);

}  // namespace fdrscca
