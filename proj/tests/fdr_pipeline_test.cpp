#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <random>

#include "fdrscca/fdr_pipeline.hpp"
#include "fdrscca/simulation.hpp"
#include "oracles.hpp"

using namespace fdrscca;

namespace {

IndexSet sorted_union(const SplitIndices& s) {
  IndexSet all = s.part0;
  all.insert(all.end(), s.part1.begin(), s.part1.end());
  all.insert(all.end(), s.part2.begin(), s.part2.end());
  std::sort(all.begin(), all.end());
  return all;
}

DataMatrixPair block_data(Index n, std::uint64_t seed, Index s = 20) {
  BlockModelSpec spec;
  spec.px = spec.py = 100;
  spec.sx = spec.sy = s;
  return standardize(sample_joint_gaussian(build_block_model(spec), n, seed));
}

}  // namespace

TEST(SplitData, SizesFollowRemainderRule) {
  const std::map<Index, std::array<std::size_t, 3>> expected{
      {9, {3, 3, 3}}, {10, {3, 4, 3}}, {11, {3, 4, 4}}, {600, {200, 200, 200}}};
  for (const auto& [n, sizes] : expected) {
    const SplitIndices s = split_data(n, 5);
    EXPECT_EQ(s.part0.size(), sizes[0]) << n;
    EXPECT_EQ(s.part1.size(), sizes[1]) << n;
    EXPECT_EQ(s.part2.size(), sizes[2]) << n;
  }
}

TEST(SplitData, PartitionIsExactAndSorted) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 9 + static_cast<Index>(seed) * 7;
    const SplitIndices s = split_data(n, seed);
    IndexSet all = sorted_union(s);
    IndexSet iota(static_cast<std::size_t>(n));
    std::iota(iota.begin(), iota.end(), Index{0});
    EXPECT_EQ(all, iota);
    EXPECT_TRUE(std::is_sorted(s.part0.begin(), s.part0.end()));
    EXPECT_TRUE(std::is_sorted(s.part2.begin(), s.part2.end()));
  }
}

TEST(SplitData, DeterministicInSeed) {
  const SplitIndices a = split_data(100, 42);
  const SplitIndices b = split_data(100, 42);
  const SplitIndices c = split_data(100, 43);
  EXPECT_EQ(a.part0, b.part0);
  EXPECT_EQ(a.part1, b.part1);
  EXPECT_NE(a.part0, c.part0);
}

TEST(SplitData, BalancesStrata) {
  std::vector<int> strata(90);
  for (std::size_t i = 0; i < strata.size(); ++i) strata[i] = i < 60 ? 0 : 1;
  const SplitIndices s = split_data(90, 7, strata);
  for (const IndexSet* part : {&s.part0, &s.part1, &s.part2}) {
    const auto cases = std::count_if(part->begin(), part->end(),
                                     [&](Index i) { return strata[static_cast<std::size_t>(i)] == 0; });
    EXPECT_EQ(cases, 20);
  }
}

TEST(SplitData, Errors) {
  EXPECT_THROW(split_data(8, 1), TooFewRows);
  EXPECT_THROW(split_data(20, 1, std::vector<int>(19, 0)), DimensionMismatch);
}

TEST(MleCovariance, IdenticalRowsGiveZero) {
  const Matrix x = Matrix::Ones(4, 2) * 3.0;
  const Matrix y = Matrix::Ones(4, 1) * -1.0;
  const CovarianceModel m = mle_covariance(x, y);
  EXPECT_EQ(m.sigma_x(), Matrix::Zero(2, 2));
  EXPECT_EQ(m.sigma_xy(), Matrix::Zero(2, 1));
}

TEST(MleCovariance, DivisorN) {
  Matrix x(2, 1), y(2, 1);
  x << 1, -1;
  y << 2, -2;
  const CovarianceModel m = mle_covariance(x, y);
  EXPECT_DOUBLE_EQ(m.sigma_x()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.sigma_y()(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(m.sigma_xy()(0, 0), 2.0);
}

TEST(MleCovariance, ConvergesToTruth) {
  BlockModelSpec spec;
  spec.px = spec.py = 4;
  spec.sx = spec.sy = 2;
  const CovarianceModel truth = build_block_model(spec);
  const DataMatrixPair d = sample_joint_gaussian(truth, 20000, 9);
  const CovarianceModel m = mle_covariance(d.x(), d.y());
  EXPECT_LT((m.joint() - truth.joint()).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_THROW(mle_covariance(Matrix::Ones(3, 1), Matrix::Ones(4, 1)), DimensionMismatch);
}

TEST(BenjaminiHochberg, WorkedExample) {
  // k q / m = 0.01 .. 0.05; 0.039 > 0.03 and 0.041 > 0.04, so k* = 2.
  Vector p(5);
  p << 0.001, 0.008, 0.039, 0.041, 0.17;
  EXPECT_EQ(benjamini_hochberg(p, 0.05), (IndexSet{0, 1}));
  // At q = 0.1 the cutoffs double and four are rejected.
  EXPECT_EQ(benjamini_hochberg(p, 0.1), (IndexSet{0, 1, 2, 3}));
}

TEST(BenjaminiHochberg, EdgeCases) {
  EXPECT_EQ(benjamini_hochberg(Vector(0), 0.1), IndexSet{});
  EXPECT_EQ(benjamini_hochberg(Vector::Ones(4), 0.1), IndexSet{});
  EXPECT_EQ(benjamini_hochberg(Vector::Zero(3), 0.1), (IndexSet{0, 1, 2}));
  Vector bad(2);
  bad << 0.1, 1.5;
  try {
    benjamini_hochberg(bad, 0.1);
    FAIL() << "expected InvalidPValue";
  } catch (const InvalidPValue& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(BenjaminiHochberg, TiesShareFate) {
  Vector p(4);
  p << 0.02, 0.02, 0.02, 0.9;
  EXPECT_EQ(benjamini_hochberg(p, 0.08), (IndexSet{0, 1, 2}));
  EXPECT_EQ(benjamini_hochberg(p, 0.02), IndexSet{});
}

TEST(BenjaminiHochberg, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const Index m = 1 + static_cast<Index>(unif(rng) * 40);
    Vector p(m);
    for (Index i = 0; i < m; ++i) {
      p[i] = unif(rng) < 0.4 ? unif(rng) * 0.02 : unif(rng);
      if (i > 0 && unif(rng) < 0.1) p[i] = p[i - 1];
    }
    const double q = 0.01 + 0.3 * unif(rng);
    ASSERT_EQ(benjamini_hochberg(p, q), oracle::bh(p, q)) << "trial " << trial;
  }
}

TEST(BenjaminiHochberg, MonotoneInLevelAndPValues) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector p(20);
    for (Index i = 0; i < 20; ++i) p[i] = unif(rng) * unif(rng);
    const IndexSet low = benjamini_hochberg(p, 0.05);
    const IndexSet high = benjamini_hochberg(p, 0.2);
    EXPECT_TRUE(std::includes(high.begin(), high.end(), low.begin(), low.end()));
    // Lowering one p-value never removes a rejection.
    Vector lower = p;
    lower[trial % 20] *= 0.5;
    const IndexSet after = benjamini_hochberg(lower, 0.05);
    EXPECT_TRUE(std::includes(after.begin(), after.end(), low.begin(), low.end()));
  }
}

TEST(FdpTpp, Examples) {
  const FdpTpp a = fdp_tpp({0, 1, 5}, {2}, {0, 1, 2}, {2, 3});
  EXPECT_DOUBLE_EQ(a.fdp_u, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(a.tpp_u, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(a.fdp_v, 0.0);
  EXPECT_DOUBLE_EQ(a.tpp_v, 0.5);
  EXPECT_EQ(a.rejections_u, 3);
  EXPECT_EQ(a.false_u, 1);

  const FdpTpp empty = fdp_tpp({}, {}, {0}, {});
  EXPECT_EQ(empty.fdp_u, 0.0);
  EXPECT_EQ(empty.tpp_u, 0.0);
  EXPECT_EQ(empty.tpp_v, 1.0);  // nothing to find
}

TEST(RunProcedure, StructuralInvariants) {
  const DataMatrixPair d = block_data(300, 1);
  PipelineConfig cfg;
  cfg.split_seed = 11;
  const FdrCcaResult r = run_procedure(d, cfg);
  const auto& iu = r.preliminary.support_u;
  const auto& iv = r.preliminary.support_v;
  EXPECT_LE(static_cast<Index>(iu.size()), 50);
  EXPECT_EQ(r.z_u.size(), static_cast<Index>(iu.size()));
  EXPECT_EQ(r.p_v.size(), static_cast<Index>(iv.size()));
  EXPECT_TRUE(std::includes(iu.begin(), iu.end(), r.rejected_u.begin(), r.rejected_u.end()));
  EXPECT_TRUE(std::includes(iv.begin(), iv.end(), r.rejected_v.begin(), r.rejected_v.end()));
  EXPECT_EQ(r.corrected.support_u, r.rejected_u);
  EXPECT_EQ(r.corrected.support_v, r.rejected_v);
  EXPECT_EQ(r.sigma_hat.px(), static_cast<Index>(iu.size()));
  if (!r.rejected_u.empty()) {
    EXPECT_NEAR(r.corrected.u.norm(), 1.0, 1e-12);
  }
  // Strong signal: most of the 20 active features survive on both sides.
  IndexSet truth(20);
  std::iota(truth.begin(), truth.end(), Index{0});
  EXPECT_GE(fdp_tpp(r, truth, truth).tpp_u, 0.5);
}

TEST(RunProcedure, Deterministic) {
  const DataMatrixPair d = block_data(300, 2);
  PipelineConfig cfg;
  cfg.split_seed = 5;
  const FdrCcaResult a = run_procedure(d, cfg);
  const FdrCcaResult b = run_procedure(d, cfg);
  EXPECT_EQ(a.rejected_u, b.rejected_u);
  EXPECT_EQ(a.corrected.u, b.corrected.u);
  EXPECT_EQ(a.p_v, b.p_v);
}

TEST(RunProcedure, CutLevelsShareTests) {
  const DataMatrixPair d = block_data(300, 3);
  PipelineConfig cfg;
  cfg.split_seed = 8;
  const PreparedTests t = prepare_tests(d, cfg);
  const FdrCcaResult lo = apply_fdr_correction(d, t, 0.05, 0.05);
  const FdrCcaResult hi = apply_fdr_correction(d, t, 0.2, 0.2);
  EXPECT_TRUE(std::includes(hi.rejected_u.begin(), hi.rejected_u.end(), lo.rejected_u.begin(),
                            lo.rejected_u.end()));
  cfg.q_u = cfg.q_v = 0.05;
  EXPECT_EQ(run_procedure(d, cfg).rejected_u, lo.rejected_u);
}

TEST(RunProcedure, CombinedLevelPoolsHypotheses) {
  const DataMatrixPair d = block_data(300, 4);
  PipelineConfig cfg;
  cfg.split_seed = 2;
  const PreparedTests t = prepare_tests(d, cfg);
  const FdrCcaResult r = apply_fdr_correction(d, t, 0.1, 0.1, 0.1);
  Vector pooled(t.p_u.size() + t.p_v.size());
  pooled << t.p_u, t.p_v;
  const IndexSet expected = oracle::bh(pooled, 0.1);
  EXPECT_EQ(r.rejected_u.size() + r.rejected_v.size(), expected.size());
  ASSERT_TRUE(r.combined_q.has_value());
}

TEST(RunProcedure, SmallTargetIsRespected) {
  const DataMatrixPair d = block_data(300, 5);
  PipelineConfig cfg;
  cfg.target_nnz = 10;
  const FdrCcaResult r = run_procedure(d, cfg);
  EXPECT_LE(static_cast<Index>(r.preliminary.support_u.size()), 12);
  cfg.target_nnz = 500;
  EXPECT_THROW(run_procedure(d, cfg), InvalidArgument);
}

TEST(RunProcedure, ConfigValidation) {
  PipelineConfig cfg;
  cfg.q_u = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.q_u = 0.1;
  cfg.combined_q = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.combined_q.reset();
  cfg.target_nnz = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}
