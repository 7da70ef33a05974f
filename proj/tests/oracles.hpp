#pragma once

// Test-side reference computations. Nothing here calls into the library under
// test beyond its basic types.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fdrscca/core.hpp"

namespace oracle {

using fdrscca::Index;
using fdrscca::IndexSet;
using fdrscca::Matrix;
using fdrscca::Vector;

// Brute-force BH: largest k with at least k p-values at or below k q / m.
inline IndexSet bh(const Vector& p, double q) {
  const Index m = p.size();
  for (Index k = m; k >= 1; --k) {
    const double cut = static_cast<double>(k) * q / static_cast<double>(m);
    if ((p.array() <= cut).count() >= k) {
      std::vector<double> sorted(p.data(), p.data() + m);
      std::sort(sorted.begin(), sorted.end());
      const double threshold = sorted[static_cast<std::size_t>(k - 1)];
      IndexSet out;
      for (Index i = 0; i < m; ++i) {
        if (p[i] <= threshold) out.push_back(i);
      }
      return out;
    }
  }
  return {};
}

// N(0, sigma) rows via std::normal_distribution and Eigen's LLT.
inline Matrix gaussian_rows(const Matrix& sigma, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix z(n, sigma.rows());
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index j = 0; j < z.cols(); ++j) z(i, j) = gauss(rng);
  }
  const Matrix l = Eigen::LLT<Matrix>(sigma).matrixL();
  return z * l.transpose();
}

inline Matrix iid_normal(Index n, Index p, std::uint64_t seed) {
  return gaussian_rows(Matrix::Identity(p, p), n, seed);
}

// Largest singular value of X'Y / n.
inline double top_singular_value(const Matrix& x, const Matrix& y) {
  const Matrix c = x.transpose() * y / static_cast<double>(x.rows());
  Eigen::JacobiSVD<Matrix> svd(c);
  return svd.singularValues()[0];
}

// Population first canonical correlation: sqrt of the top eigenvalue of
// Sx^{-1} Sxy Sy^{-1} Syx.
inline double population_canonical_correlation(const Matrix& sx, const Matrix& sy,
                                               const Matrix& sxy) {
  const Matrix m = sx.ldlt().solve(sxy) * sy.ldlt().solve(sxy.transpose());
  Eigen::EigenSolver<Matrix> es(m);
  double best = 0.0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    best = std::max(best, es.eigenvalues()[i].real());
  }
  return std::sqrt(best);
}

inline double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().minCoeff();
}

inline double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance of a sample to the standard normal.
inline double ks_to_normal(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = phi(z[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
