#include "fdrscca/asymptotics.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

#include "fdrscca/random.hpp"

namespace fdrscca {

namespace {

void check_v(const CovarianceModel& model, const Vector& v) {
  if (v.size() != model.py()) {
    throw DimensionMismatch("v has " + std::to_string(v.size()) + " entries, expected pY = " +
                            std::to_string(model.py()));
  }
}

bool symmetric(const Matrix& m) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace

Vector asymptotic_mean(const CovarianceModel& model, const Vector& v) {
  check_v(model, v);
  return model.sigma_xy() * v;
}

Matrix asymptotic_covariance(const CovarianceModel& model, const Vector& v) {
  const Vector mu = asymptotic_mean(model, v);
  const double quad = v.dot(model.sigma_y() * v);
  return mu * mu.transpose() + quad * model.sigma_x();
}

Vector asymptotic_variance_diag(const CovarianceModel& model, const Vector& v) {
  const Vector mu = asymptotic_mean(model, v);
  const double quad = v.dot(model.sigma_y() * v);
  return mu.cwiseAbs2() + quad * model.sigma_x().diagonal();
}

NullDistribution null_distribution(const CovarianceModel& model, const Vector& v, Index n_eff,
                                   bool full_omega) {
  NullDistribution out;
  out.mu = asymptotic_mean(model, v);
  out.omega_diag = asymptotic_variance_diag(model, v);
  if (full_omega) out.omega = asymptotic_covariance(model, v);
  out.n_eff = n_eff;
  return out;
}

Vector null_zscores(const Matrix& x2, const Matrix& y2, const Vector& v0,
                    const CovarianceModel& model_hat) {
  if (x2.rows() != y2.rows()) throw DimensionMismatch("x2 and y2 have different row counts");
  if (x2.cols() != model_hat.px() || y2.cols() != model_hat.py() || v0.size() != y2.cols()) {
    throw DimensionMismatch("null_zscores inputs are not restricted to the same supports");
  }
  const Index n2 = x2.rows();
  const Vector xi = x2.transpose() * (y2 * v0);
  const Vector omega = asymptotic_variance_diag(model_hat, v0);
  Vector z = Vector::Zero(xi.size());
  if (v0.isZero(0.0)) return z;
  const double root_n = std::sqrt(static_cast<double>(n2));
  for (Index i = 0; i < xi.size(); ++i) {
    if (!(omega[i] > 0.0)) throw NonPositiveVariance(static_cast<std::size_t>(i));
    z[i] = xi[i] / (root_n * std::sqrt(omega[i]));
  }
  return z;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

Vector two_sided_pvalues(const Vector& z) {
  Vector p(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    p[i] = std::min(1.0, 2.0 * normal_upper_tail(std::abs(z[i])));
  }
  return p;
}

TraceCovariance wishart_trace_cov_oracle(const Matrix& a, const Matrix& b,
                                         const CovarianceModel& model, Index n, Index reps,
                                         std::uint64_t seed) {
  const Matrix sigma = model.joint();
  const Index d = sigma.rows();
  if (a.rows() != d || a.cols() != d || b.rows() != d || b.cols() != d) {
    throw DimensionMismatch("A and B must match the joint covariance dimension");
  }
  if (!symmetric(a) || !symmetric(b)) throw AsymmetricInput("A and B must be symmetric");
  if (n < 1 || reps < 2) throw InvalidArgument("need n >= 1 and reps >= 2");
  validate_model(model);

  TraceCovariance out;
  out.analytic = 2.0 * static_cast<double>(n) * (a * sigma * b * sigma).trace();

  const Matrix lower = Eigen::LLT<Matrix>(sigma).matrixL();
  Rng rng(stream_seed(seed, Stream::kOracle));
  Vector ta(reps);
  Vector tb(reps);
  for (Index r = 0; r < reps; ++r) {
    const Matrix z = standard_normal(n, d, rng) * lower.transpose();
    const Matrix s = z.transpose() * z;
    ta[r] = (a * s).trace();
    tb[r] = (b * s).trace();
  }
  const Vector da = ta.array() - ta.mean();
  const Vector db = tb.array() - tb.mean();
  const Vector prod = da.cwiseProduct(db);
  const double rd = static_cast<double>(reps);
  out.empirical = prod.sum() / (rd - 1.0);
  const Vector dev = prod.array() - prod.mean();
  out.standard_error = std::sqrt(dev.squaredNorm() / (rd - 1.0) / rd);
  return out;
}

Matrix cross_product_selector(Index px, const Vector& v, Index i, Index n) {
  const Index py = v.size();
  Matrix a = Matrix::Zero(px + py, px + py);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  a.block(i, px, 1, py) = scale * v.transpose();
  a.block(px, i, py, 1) = scale * v;
  return a;
}

}  // namespace fdrscca
