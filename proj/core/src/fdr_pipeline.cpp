#include "fdrscca/fdr_pipeline.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "fdrscca/asymptotics.hpp"
#include "fdrscca/random.hpp"

namespace fdrscca {

namespace {

void check_level(double q, const char* which) {
  if (!(q > 0.0 && q < 1.0)) {
    throw InvalidArgument(std::string(which) + " must lie in (0, 1), got " + std::to_string(q));
  }
}

// Maps positions within a support back to feature indices.
IndexSet lift(const IndexSet& positions, const IndexSet& support) {
  IndexSet out;
  out.reserve(positions.size());
  for (Index pos : positions) out.push_back(support[static_cast<std::size_t>(pos)]);
  return out;
}

Vector corrected_vector(Index size, const IndexSet& rejected, const Vector& direction) {
  Vector out = Vector::Zero(size);
  for (Index i : rejected) out[i] = direction[i];
  const double norm = out.norm();
  if (norm > 0.0) out /= norm;
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  check_level(q_u, "q_u");
  check_level(q_v, "q_v");
  if (combined_q) check_level(*combined_q, "combined_q");
  if (target_nnz && *target_nnz < 1) throw InvalidArgument("target_nnz must be at least 1");
  solver.validate();
}

SplitIndices split_data(Index n, std::uint64_t seed, const std::optional<std::vector<int>>& strata) {
  if (n < 9) throw TooFewRows("data splitting needs at least 9 rows, got " + std::to_string(n));
  if (strata && static_cast<Index>(strata->size()) != n) {
    throw DimensionMismatch("stratum labels must have one entry per row");
  }
  Rng rng(stream_seed(seed, Stream::kSplit));

  IndexSet order;
  if (!strata) {
    order = random_permutation(n, rng);
  } else {
    std::map<int, IndexSet> groups;
    for (Index i = 0; i < n; ++i) groups[(*strata)[static_cast<std::size_t>(i)]].push_back(i);
    for (auto& [label, rows] : groups) {
      const IndexSet perm = random_permutation(static_cast<Index>(rows.size()), rng);
      for (Index k : perm) order.push_back(rows[static_cast<std::size_t>(k)]);
    }
  }

  // Dealing positions 0,1,2 to parts 1,2,0 gives n0 = floor(n/3) with the
  // remainder landing in part1 and then part2.
  SplitIndices split;
  split.seed = seed;
  for (Index pos = 0; pos < n; ++pos) {
    const Index row = order[static_cast<std::size_t>(pos)];
    switch (pos % 3) {
      case 0: split.part1.push_back(row); break;
      case 1: split.part2.push_back(row); break;
      default: split.part0.push_back(row); break;
    }
  }
  std::sort(split.part0.begin(), split.part0.end());
  std::sort(split.part1.begin(), split.part1.end());
  std::sort(split.part2.begin(), split.part2.end());
  return split;
}

CovarianceModel mle_covariance(const Matrix& x1, const Matrix& y1) {
  if (x1.rows() != y1.rows()) throw DimensionMismatch("x1 and y1 have different row counts");
  if (x1.rows() < 2) throw TooFewRows("covariance estimation needs at least 2 rows");
  const double n = static_cast<double>(x1.rows());
  const Matrix xc = x1.rowwise() - x1.colwise().mean();
  const Matrix yc = y1.rowwise() - y1.colwise().mean();
  Matrix sx = xc.transpose() * xc / n;
  Matrix sy = yc.transpose() * yc / n;
  // Symmetrize exactly; the products above can differ in the last ulp.
  sx = 0.5 * (sx + sx.transpose()).eval();
  sy = 0.5 * (sy + sy.transpose()).eval();
  return CovarianceModel(std::move(sx), std::move(sy), xc.transpose() * yc / n);
}

IndexSet benjamini_hochberg(const Vector& pvals, double q) {
  check_level(q, "q");
  const Index m = pvals.size();
  for (Index i = 0; i < m; ++i) {
    if (!(pvals[i] >= 0.0 && pvals[i] <= 1.0)) throw InvalidPValue(static_cast<std::size_t>(i));
  }
  if (m == 0) return {};
  std::vector<double> sorted(pvals.data(), pvals.data() + m);
  std::sort(sorted.begin(), sorted.end());
  const double md = static_cast<double>(m);
  double threshold = -1.0;
  for (Index k = m; k >= 1; --k) {
    if (sorted[static_cast<std::size_t>(k - 1)] <= static_cast<double>(k) * q / md) {
      threshold = sorted[static_cast<std::size_t>(k - 1)];
      break;
    }
  }
  IndexSet rejected;
  if (threshold < 0.0) return rejected;
  for (Index i = 0; i < m; ++i) {
    if (pvals[i] <= threshold) rejected.push_back(i);
  }
  return rejected;
}

PreparedTests prepare_tests(const DataMatrixPair& data, const PipelineConfig& cfg) {
  cfg.validate();
  // Step 1.
  SplitIndices split = split_data(data.n(), cfg.split_seed, cfg.strata);
  const Index n2 = static_cast<Index>(split.part2.size());

  // Step 2: preliminary fit on part0, supports never larger than n2.
  const Index target = cfg.target_nnz.value_or(n2 / 2);
  if (target > n2) {
    throw InvalidArgument("target_nnz " + std::to_string(target) + " exceeds n2 = " +
                          std::to_string(n2));
  }
  const DataMatrixPair part0 = data.rows(split.part0);
  bool hit_band = true;
  std::optional<TunedFit> fit;
  try {
    fit = tune_to_target_support(part0, std::min(target, data.px()), std::min(target, data.py()),
                                 cfg.solver, n2);
  } catch (const TargetUnreachable& e) {
    fit = TunedFit{e.fallback(), e.penalty()};
    hit_band = false;
  }
  CanonicalPair preliminary = std::move(fit->pair);
  if (preliminary.support_u.empty() || preliminary.support_v.empty()) {
    throw EmptyPreliminarySupport("the preliminary fit returned an all-zero canonical vector");
  }
  const IndexSet& iu = preliminary.support_u;
  const IndexSet& iv = preliminary.support_v;

  // Step 3, computed directly on the support columns (the only blocks Step 5 reads).
  CovarianceModel sigma_hat =
      mle_covariance(data.x()(split.part1, iu), data.y()(split.part1, iv));

  // Steps 4-5 on part2, column-restricted to the supports.
  const Matrix x2 = data.x()(split.part2, iu);
  const Matrix y2 = data.y()(split.part2, iv);
  const Vector u0 = preliminary.u(iu);
  const Vector v0 = preliminary.v(iv);
  Vector z_u = null_zscores(x2, y2, v0, sigma_hat);
  Vector z_v = null_zscores(y2, x2, u0, sigma_hat.swapped());
  Vector p_u = two_sided_pvalues(z_u);
  Vector p_v = two_sided_pvalues(z_v);

  Vector full_u = data.x().transpose() * (data.y() * preliminary.v);
  Vector full_v = data.y().transpose() * (data.x() * preliminary.u);

  return PreparedTests{std::move(split),    std::move(preliminary), fit->penalty,
                       hit_band,            std::move(sigma_hat),   std::move(z_u),
                       std::move(z_v),      std::move(p_u),         std::move(p_v),
                       std::move(full_u),   std::move(full_v)};
}

FdrCcaResult apply_fdr_correction(const DataMatrixPair& data, const PreparedTests& tests,
                                  double q_u, double q_v, std::optional<double> combined_q) {
  const IndexSet& iu = tests.preliminary.support_u;
  const IndexSet& iv = tests.preliminary.support_v;
  IndexSet rejected_u;
  IndexSet rejected_v;
  if (combined_q) {
    Vector pooled(tests.p_u.size() + tests.p_v.size());
    pooled << tests.p_u, tests.p_v;
    const auto mu = static_cast<Index>(iu.size());
    for (Index k : benjamini_hochberg(pooled, *combined_q)) {
      if (k < mu) {
        rejected_u.push_back(iu[static_cast<std::size_t>(k)]);
      } else {
        rejected_v.push_back(iv[static_cast<std::size_t>(k - mu)]);
      }
    }
  } else {
    rejected_u = lift(benjamini_hochberg(tests.p_u, q_u), iu);
    rejected_v = lift(benjamini_hochberg(tests.p_v, q_v), iv);
  }

  const Index px = tests.preliminary.u.size();
  const Index py = tests.preliminary.v.size();
  Vector u = corrected_vector(px, rejected_u, tests.full_u_direction);
  Vector v = corrected_vector(py, rejected_v, tests.full_v_direction);
  const double objective =
      (data.x() * u).dot(data.y() * v) / static_cast<double>(data.n());
  CanonicalPair corrected = CanonicalPair::from_vectors(std::move(u), std::move(v), objective);
  return FdrCcaResult{std::move(corrected), tests.preliminary, tests.z_u,   tests.z_v,
                      tests.p_u,            tests.p_v,         rejected_u,  rejected_v,
                      tests.split,          tests.sigma_hat,   tests.penalty,
                      tests.tuning_hit_band, q_u,              q_v,         combined_q};
}

FdrCcaResult run_procedure(const DataMatrixPair& data, const PipelineConfig& cfg) {
  return apply_fdr_correction(data, prepare_tests(data, cfg), cfg.q_u, cfg.q_v, cfg.combined_q);
}

FdpTpp fdp_tpp(const IndexSet& selected_u, const IndexSet& selected_v, const IndexSet& truth_u,
               const IndexSet& truth_v) {
  auto score = [](const IndexSet& selected, const IndexSet& truth, double& fdp, double& tpp,
                  Index& r, Index& v) {
    r = static_cast<Index>(selected.size());
    Index true_hits = 0;
    for (Index i : selected) {
      if (std::binary_search(truth.begin(), truth.end(), i)) ++true_hits;
    }
    v = r - true_hits;
    fdp = static_cast<double>(v) / static_cast<double>(std::max<Index>(r, 1));
    tpp = truth.empty() ? 1.0 : static_cast<double>(true_hits) / static_cast<double>(truth.size());
  };
  FdpTpp out;
  score(selected_u, truth_u, out.fdp_u, out.tpp_u, out.rejections_u, out.false_u);
  score(selected_v, truth_v, out.fdp_v, out.tpp_v, out.rejections_v, out.false_v);
  return out;
}

FdpTpp fdp_tpp(const FdrCcaResult& result, const IndexSet& truth_u, const IndexSet& truth_v) {
  return fdp_tpp(result.rejected_u, result.rejected_v, truth_u, truth_v);
}

}  // namespace fdrscca
