#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "fdrscca/errors.hpp"

namespace fdrscca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Sorted, duplicate-free list of feature (column) or sample (row) indices.
using IndexSet = std::vector<Index>;

// Two row-aligned observation matrices over the same n samples.
class DataMatrixPair {
 public:
  DataMatrixPair(Matrix x, Matrix y);

  const Matrix& x() const noexcept { return x_; }
  const Matrix& y() const noexcept { return y_; }
  Index n() const noexcept { return x_.rows(); }
  Index px() const noexcept { return x_.cols(); }
  Index py() const noexcept { return y_.cols(); }

  // Row subset, in the order given.
  DataMatrixPair rows(const IndexSet& rows) const;
  // Column restriction of x to `cols_x` and y to `cols_y`.
  DataMatrixPair columns(const IndexSet& cols_x, const IndexSet& cols_y) const;

 private:
  Matrix x_;
  Matrix y_;
};

// Joint covariance of [X Y], stored as its three blocks.
//
// Construction checks block dimensions and symmetry only. Sample estimates
// may legitimately be singular; positive definiteness is checked by
// validate_model().
class CovarianceModel {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  CovarianceModel(Matrix sigma_x, Matrix sigma_y, Matrix sigma_xy);

  const Matrix& sigma_x() const noexcept { return sigma_x_; }
  const Matrix& sigma_y() const noexcept { return sigma_y_; }
  const Matrix& sigma_xy() const noexcept { return sigma_xy_; }
  Index px() const noexcept { return sigma_x_.rows(); }
  Index py() const noexcept { return sigma_y_.rows(); }

  // (pX+pY) x (pX+pY) block matrix [[Sx, Sxy], [Sxy^T, Sy]].
  Matrix joint() const;

  // Blocks restricted to the given X and Y feature indices.
  CovarianceModel restricted(const IndexSet& cols_x, const IndexSet& cols_y) const;

  // The same model with the roles of X and Y exchanged.
  CovarianceModel swapped() const;

 private:
  Matrix sigma_x_;
  Matrix sigma_y_;
  Matrix sigma_xy_;
};

struct CanonicalPair {
  Vector u;
  Vector v;
  IndexSet support_u;
  IndexSet support_v;
  double objective = 0.0;

  // Builds a pair and derives both support sets from the exact-zero pattern.
  static CanonicalPair from_vectors(Vector u, Vector v, double objective);
};

struct SplitIndices {
  IndexSet part0;
  IndexSet part1;
  IndexSet part2;
  std::uint64_t seed = 0;
};

// Indices i with v[i] != 0.0 exactly.
IndexSet support_of(const Vector& v);

// Columns centered to mean 0 and scaled to sample sd 1 (divisor n-1).
// Throws ConstantColumn for a zero-variance column, TooFewRows for n < 2.
Matrix standardize_columns(const Matrix& m);

DataMatrixPair standardize(const DataMatrixPair& data);

// Returns iff joint() admits a Cholesky factorization. Throws AsymmetricBlock
// or NotPositiveDefinite (carrying the failing pivot).
void validate_model(const CovarianceModel& model);

}  // namespace fdrscca
