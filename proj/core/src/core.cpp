#include "fdrscca/core.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace fdrscca {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidArgument(std::string(what) + " contains non-finite entries");
  }
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = j + 1; i < m.rows(); ++i) {
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    }
  }
  return true;
}

// Unblocked right-looking Cholesky; used only to locate the pivot at which a
// factorization breaks down.
std::size_t first_failing_pivot(Matrix a) {
  const Index d = a.rows();
  for (Index k = 0; k < d; ++k) {
    const double pivot = a(k, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return static_cast<std::size_t>(k);
    const double root = std::sqrt(pivot);
    a.col(k).tail(d - k - 1) /= root;
    for (Index j = k + 1; j < d; ++j) {
      a.col(j).tail(d - j) -= a(j, k) * a.col(k).tail(d - j);
    }
  }
  // LLT rejected a matrix the plain loop accepts only at the margin of
  // roundoff; report the last pivot.
  return static_cast<std::size_t>(d > 0 ? d - 1 : 0);
}

}  // namespace

DataMatrixPair::DataMatrixPair(Matrix x, Matrix y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() != y_.rows()) {
    throw DimensionMismatch("x has " + std::to_string(x_.rows()) + " rows but y has " +
                            std::to_string(y_.rows()));
  }
  if (x_.rows() < 2) throw TooFewRows("a data pair needs at least 2 rows");
  if (x_.cols() < 1 || y_.cols() < 1) {
    throw DimensionMismatch("x and y need at least one column each");
  }
  require_finite(x_, "x");
  require_finite(y_, "y");
}

DataMatrixPair DataMatrixPair::rows(const IndexSet& rows) const {
  return DataMatrixPair(x_(rows, Eigen::all), y_(rows, Eigen::all));
}

DataMatrixPair DataMatrixPair::columns(const IndexSet& cols_x, const IndexSet& cols_y) const {
  return DataMatrixPair(x_(Eigen::all, cols_x), y_(Eigen::all, cols_y));
}

CovarianceModel::CovarianceModel(Matrix sigma_x, Matrix sigma_y, Matrix sigma_xy)
    : sigma_x_(std::move(sigma_x)), sigma_y_(std::move(sigma_y)), sigma_xy_(std::move(sigma_xy)) {
  if (sigma_x_.rows() != sigma_x_.cols() || sigma_y_.rows() != sigma_y_.cols() ||
      sigma_xy_.rows() != sigma_x_.rows() || sigma_xy_.cols() != sigma_y_.rows()) {
    throw DimensionMismatch("covariance blocks have inconsistent dimensions");
  }
  require_finite(sigma_x_, "sigma_x");
  require_finite(sigma_y_, "sigma_y");
  require_finite(sigma_xy_, "sigma_xy");
  if (!is_symmetric(sigma_x_, kSymmetryTolerance)) throw AsymmetricBlock("sigma_x is not symmetric");
  if (!is_symmetric(sigma_y_, kSymmetryTolerance)) throw AsymmetricBlock("sigma_y is not symmetric");
}

Matrix CovarianceModel::joint() const {
  const Index px = this->px();
  const Index py = this->py();
  Matrix out(px + py, px + py);
  out.topLeftCorner(px, px) = sigma_x_;
  out.topRightCorner(px, py) = sigma_xy_;
  out.bottomLeftCorner(py, px) = sigma_xy_.transpose();
  out.bottomRightCorner(py, py) = sigma_y_;
  return out;
}

CovarianceModel CovarianceModel::restricted(const IndexSet& cols_x, const IndexSet& cols_y) const {
  return CovarianceModel(sigma_x_(cols_x, cols_x), sigma_y_(cols_y, cols_y),
                         sigma_xy_(cols_x, cols_y));
}

CovarianceModel CovarianceModel::swapped() const {
  return CovarianceModel(sigma_y_, sigma_x_, sigma_xy_.transpose());
}

IndexSet support_of(const Vector& v) {
  IndexSet out;
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) out.push_back(i);
  }
  return out;
}

CanonicalPair CanonicalPair::from_vectors(Vector u, Vector v, double objective) {
  CanonicalPair pair;
  pair.support_u = support_of(u);
  pair.support_v = support_of(v);
  pair.u = std::move(u);
  pair.v = std::move(v);
  pair.objective = objective;
  return pair;
}

Matrix standardize_columns(const Matrix& m) {
  const Index n = m.rows();
  if (n < 2) throw TooFewRows("standardization needs at least 2 rows");
  Matrix out(n, m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double mean = m.col(j).mean();
    Vector centered = m.col(j).array() - mean;
    // Second pass removes the residual mean left by roundoff in the first.
    centered.array() -= centered.mean();
    const double var = centered.squaredNorm() / static_cast<double>(n - 1);
    if (!(var > 0.0)) throw ConstantColumn(static_cast<std::size_t>(j));
    out.col(j) = centered / std::sqrt(var);
  }
  return out;
}

DataMatrixPair standardize(const DataMatrixPair& data) {
  return DataMatrixPair(standardize_columns(data.x()), standardize_columns(data.y()));
}

void validate_model(const CovarianceModel& model) {
  if (!is_symmetric(model.sigma_x(), CovarianceModel::kSymmetryTolerance)) {
    throw AsymmetricBlock("sigma_x is not symmetric");
  }
  if (!is_symmetric(model.sigma_y(), CovarianceModel::kSymmetryTolerance)) {
    throw AsymmetricBlock("sigma_y is not symmetric");
  }
  const Matrix joint = model.joint();
  Eigen::LLT<Matrix> llt(joint);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(first_failing_pivot(joint));
}

}  // namespace fdrscca
