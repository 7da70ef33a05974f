#include "fdrscca/cli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdrscca/asymptotics.hpp"
#include "fdrscca/fdr_pipeline.hpp"
#include "fdrscca/random.hpp"
#include "fdrscca/simulation.hpp"

namespace fdrscca::cli {

namespace {

CovarianceModel theorem1_model() {
  Matrix sx(3, 3), sy(3, 3), sxy(3, 3);
  sx << 1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0;
  sy << 1.0, -0.2, 0.1, -0.2, 1.0, 0.3, 0.1, 0.3, 1.0;
  sxy << 0.3, 0.1, 0.0, 0.0, 0.2, 0.1, 0.1, 0.0, 0.25;
  return CovarianceModel(sx, sy, sxy);
}

Matrix sample_cov(const Matrix& w) {
  const Matrix c = w.rowwise() - w.colwise().mean();
  return c.transpose() * c / static_cast<double>(w.rows() - 1);
}

// Random symmetric matrix with entries in [-1, 1].
Matrix random_symmetric(Index d, Rng& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix m(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = unif(rng);
  }
  return m;
}

}  // namespace

CheckResult check_theorem1(std::uint64_t seed, Index reps) {
  constexpr Index n = 200;
  const CovarianceModel model = theorem1_model();
  Vector v(3);
  v << 1.0, -0.5, 0.25;
  const Matrix target = asymptotic_covariance(model, v) / static_cast<double>(n);

  const GaussianSampler sampler(model);
  Matrix w(reps, 3);
  for (Index r = 0; r < reps; ++r) {
    const DataMatrixPair d = sampler.sample(n, child_seed(seed, static_cast<std::uint64_t>(r)));
    w.row(r) = (d.x().transpose() * (d.y() * v)).transpose() / static_cast<double>(n);
  }
  const Matrix empirical = sample_cov(w);

  constexpr int kBoot = 200;
  Rng rng(stream_seed(seed, Stream::kOracle));
  std::uniform_int_distribution<Index> pick(0, reps - 1);
  Matrix sum = Matrix::Zero(3, 3), sum_sq = Matrix::Zero(3, 3);
  Matrix resampled(reps, 3);
  for (int b = 0; b < kBoot; ++b) {
    for (Index r = 0; r < reps; ++r) resampled.row(r) = w.row(pick(rng));
    const Matrix c = sample_cov(resampled);
    sum += c;
    sum_sq += c.cwiseProduct(c);
  }
  const Matrix mean = sum / kBoot;
  const Matrix se = ((sum_sq / kBoot - mean.cwiseProduct(mean)) * kBoot / (kBoot - 1.0))
                        .cwiseMax(0.0)
                        .cwiseSqrt();

  double worst = 0.0;
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j <= i; ++j) {
      worst = std::max(worst, std::abs(empirical(i, j) - target(i, j)) / se(i, j));
    }
  }
  CheckResult out;
  out.name = "theorem1";
  out.passed = worst <= 3.0;
  out.warning = reps < 1000;
  std::ostringstream detail;
  detail << "max |cov - Omega/n| / SE = " << worst << " over 6 entries, " << reps << " datasets";
  if (out.warning) detail << " (few datasets; Monte-Carlo noise may dominate)";
  out.detail = detail.str();
  return out;
}

CheckResult check_lemma(std::uint64_t seed, Index reps, int instances) {
  Rng rng(stream_seed(seed, Stream::kOracle));
  std::uniform_int_distribution<Index> dim(1, 3);
  std::uniform_int_distribution<Index> size(2, 30);
  int agree = 0;
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const Index px = dim(rng);
    const Index py = dim(rng);
    const Index d = px + py;
    // Sigma = M M' / d + I/2 is always positive definite.
    Matrix m(d, d);
    std::normal_distribution<double> gauss;
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
    Matrix sigma = m * m.transpose() / static_cast<double>(d) + 0.5 * Matrix::Identity(d, d);
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    const CovarianceModel model(sigma.topLeftCorner(px, px), sigma.bottomRightCorner(py, py),
                                sigma.topRightCorner(px, py));
    const Matrix a = random_symmetric(d, rng);
    const Matrix b = random_symmetric(d, rng);
    const Index n = size(rng);
    const TraceCovariance t =
        wishart_trace_cov_oracle(a, b, model, n, reps, child_seed(seed, static_cast<std::uint64_t>(k)));
    const double dev = std::abs(t.empirical - t.analytic) / t.standard_error;
    worst = std::max(worst, dev);
    if (dev <= 3.0) ++agree;
  }
  CheckResult out;
  out.name = "lemma";
  out.passed = agree >= instances - instances / 20;
  out.warning = reps < 5000;
  std::ostringstream detail;
  detail << agree << "/" << instances << " instances within 3 SE (worst " << worst << " SE), "
         << reps << " draws each";
  out.detail = detail.str();
  return out;
}

CheckResult check_bh(std::uint64_t seed, int instances) {
  Rng rng(stream_seed(seed, Stream::kOracle));
  std::uniform_int_distribution<int> size(1, 50);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> level(0.01, 0.5);
  int mismatches = 0;
  for (int k = 0; k < instances; ++k) {
    const int m = size(rng);
    Vector p(m);
    for (int i = 0; i < m; ++i) {
      // A third of the values are tiny and some are repeated, to exercise ties.
      const double u = unif(rng);
      p[i] = u < 0.33 ? unif(rng) * 0.01 : unif(rng);
      if (i > 0 && u > 0.9) p[i] = p[i - 1];
    }
    const double q = level(rng);
    // max{k : #{p_i <= k q / m} >= k}; reject every p at or below k q / m.
    int k_star = 0;
    for (int kk = m; kk >= 1; --kk) {
      const double cut = kk * q / m;
      if ((p.array() <= cut).count() >= kk) {
        k_star = kk;
        break;
      }
    }
    IndexSet brute;
    if (k_star > 0) {
      std::vector<double> sorted(p.data(), p.data() + m);
      std::sort(sorted.begin(), sorted.end());
      const double threshold = sorted[static_cast<std::size_t>(k_star - 1)];
      for (int i = 0; i < m; ++i) {
        if (p[i] <= threshold) brute.push_back(i);
      }
    }
    if (benjamini_hochberg(p, q) != brute) ++mismatches;
  }
  // Cutoffs k q / m are 0.01, 0.02, 0.03, 0.04, 0.05; the largest k with
  // p_(k) <= k q / m is 2 (0.039 > 0.03 and 0.041 > 0.04).
  Vector worked(5);
  worked << 0.001, 0.008, 0.039, 0.041, 0.17;
  const bool worked_ok = benjamini_hochberg(worked, 0.05) == IndexSet{0, 1};

  CheckResult out;
  out.name = "bh";
  out.passed = mismatches == 0 && worked_ok;
  std::ostringstream detail;
  detail << mismatches << " mismatches in " << instances
         << " random instances; worked example " << (worked_ok ? "rejects 2" : "FAILED");
  out.detail = detail.str();
  return out;
}

}  // namespace fdrscca::cli
