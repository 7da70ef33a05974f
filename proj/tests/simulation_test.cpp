#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fdrscca/simulation.hpp"
#include "oracles.hpp"

using namespace fdrscca;

namespace {

BlockModelSpec block(Index p, Index sx, Index sy) {
  BlockModelSpec s;
  s.px = s.py = p;
  s.sx = sx;
  s.sy = sy;
  return s;
}

ExperimentSpec small_experiment(Index reps) {
  ExperimentSpec e;
  e.model = block(60, 10, 10);
  e.n = 150;
  e.reps = reps;
  e.q_levels = {0.1, 0.2};
  e.master_seed = 99;
  e.threads = 1;
  return e;
}

}  // namespace

TEST(BlockModel, FiveFeatureEntries) {
  const CovarianceModel m = build_block_model(block(5, 2, 2));
  EXPECT_EQ(m.sigma_x()(0, 0), 1.0);
  EXPECT_EQ(m.sigma_x()(0, 1), 0.5);
  EXPECT_EQ(m.sigma_x()(0, 2), 0.1);
  EXPECT_EQ(m.sigma_x()(3, 4), 0.1);
  EXPECT_EQ(m.sigma_xy()(1, 0), 0.4);
  EXPECT_EQ(m.sigma_xy()(2, 0), 0.0);
  EXPECT_EQ(m.sigma_x(), m.sigma_y());
  const auto [tu, tv] = truth_sets(m);
  EXPECT_EQ(tu, (IndexSet{0, 1}));
  EXPECT_EQ(tv, (IndexSet{0, 1}));
}

TEST(BlockModel, NoActiveFeaturesMeansNoCross) {
  const CovarianceModel m = build_block_model(block(10, 0, 0));
  EXPECT_EQ(m.sigma_xy(), Matrix::Zero(10, 10));
  EXPECT_TRUE(truth_sets(m).first.empty());
}

TEST(BlockModel, PositiveDefiniteAcrossGrid) {
  for (Index sx : {1, 20, 60}) {
    for (Index sy : {1, 20, 60}) {
      const CovarianceModel m = build_block_model(block(120, sx, sy));
      EXPECT_GT(oracle::min_eigenvalue(m.joint()), 0.0) << sx << "/" << sy;
    }
  }
}

TEST(BlockModel, LargestGridConfiguration) {
  EXPECT_NO_THROW(build_block_model(block(1500, 120, 120)));
}

TEST(BlockModel, MultipleBlocks) {
  BlockModelSpec s = block(30, 6, 6);
  s.k_blocks = 3;
  const CovarianceModel m = build_block_model(s);
  EXPECT_EQ(m.sigma_x()(0, 1), 0.5);   // same block
  EXPECT_EQ(m.sigma_x()(0, 2), 0.1);   // different blocks
  EXPECT_EQ(m.sigma_xy()(2, 3), 0.4);  // matched blocks
  EXPECT_EQ(m.sigma_xy()(0, 2), 0.0);  // unmatched blocks
  EXPECT_GT(oracle::min_eigenvalue(m.joint()), 0.0);
  s.sx = 7;
  EXPECT_THROW(build_block_model(s), InvalidArgument);
}

TEST(BlockModel, RejectsNonPositiveDefinite) {
  BlockModelSpec s = block(4, 2, 2);
  s.rho_cross = 0.99;
  s.rho_within = 0.0;
  s.rho_background = 0.0;
  EXPECT_THROW(build_block_model(s), NotPositiveDefinite);
}

TEST(Sampler, DeterministicAndSeedSensitive) {
  const CovarianceModel m = build_block_model(block(5, 2, 2));
  const GaussianSampler sampler(m);
  EXPECT_EQ(sampler.sample(10, 3).x(), sampler.sample(10, 3).x());
  EXPECT_NE(sampler.sample(10, 3).x(), sampler.sample(10, 4).x());
  EXPECT_EQ(sample_joint_gaussian(m, 10, 3).y(), sampler.sample(10, 3).y());
}

TEST(Sampler, MomentsMatchModel) {
  const CovarianceModel m = build_block_model(block(5, 2, 2));
  const DataMatrixPair d = sample_joint_gaussian(m, 50000, 1);
  Matrix w(d.n(), 10);
  w << d.x(), d.y();
  const Matrix c = w.rowwise() - w.colwise().mean();
  const Matrix cov = c.transpose() * c / static_cast<double>(d.n() - 1);
  EXPECT_LT((cov - m.joint()).cwiseAbs().maxCoeff(), 0.03);
  EXPECT_LT(w.colwise().mean().cwiseAbs().maxCoeff(), 0.03);
}

TEST(LatentInjection, ZeroActiveLeavesDataUnchanged) {
  const DataMatrixPair d(oracle::iid_normal(50, 4, 1), oracle::iid_normal(50, 3, 2));
  LatentSpec spec;
  spec.s = 0;
  const InjectedData out = inject_latent_cross_correlation(d, spec, 3);
  EXPECT_EQ(out.data.x(), d.x());
  EXPECT_EQ(out.data.y(), d.y());
  EXPECT_TRUE(out.truth_u.empty());
}

TEST(LatentInjection, TooManyActive) {
  const DataMatrixPair d(oracle::iid_normal(20, 4, 1), oracle::iid_normal(20, 3, 2));
  LatentSpec spec;
  spec.s = 4;
  EXPECT_THROW(inject_latent_cross_correlation(d, spec, 1), TooManyActive);
  spec.s = 1;
  spec.rho_xy = 1.0;
  EXPECT_THROW(inject_latent_cross_correlation(d, spec, 1), InvalidArgument);
}

TEST(LatentInjection, InducesTargetCorrelation) {
  LatentModelSpec spec;
  spec.px = 8;
  spec.py = 6;
  spec.latent.s = 3;
  const InjectedData out = generate_latent_data(spec, 20000, 5);
  EXPECT_EQ(out.truth_u, (IndexSet{0, 1, 2}));
  const Matrix& x = out.data.x();
  const Matrix& y = out.data.y();
  auto corr = [](const Vector& a, const Vector& b) {
    const Vector ca = a.array() - a.mean();
    const Vector cb = b.array() - b.mean();
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  };
  EXPECT_NEAR(corr(x.col(0), y.col(2)), 0.5, 0.03);
  EXPECT_NEAR(corr(x.col(1), x.col(2)), 0.5, 0.03);
  EXPECT_NEAR(corr(x.col(5), y.col(0)), 0.0, 0.03);
  EXPECT_NEAR(corr(x.col(3), x.col(4)), 0.0, 0.03);
}

TEST(LatentInjection, SkewedSourceIsDiscreteBeforeInjection) {
  LatentModelSpec spec;
  spec.px = 4;
  spec.py = 4;
  spec.latent.s = 1;
  spec.latent.x_source = ColumnSource::kSkewedDiscrete;
  const InjectedData out = generate_latent_data(spec, 500, 2);
  // An untouched column is a standardized {0,1,2} variable: at most 3 distinct values.
  std::vector<double> values(out.data.x().col(3).data(), out.data.x().col(3).data() + 500);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  EXPECT_LE(values.size(), 3u);
}

TEST(Method, ParseAndLabel) {
  EXPECT_EQ(Method::parse("fdr_corrected").kind, MethodKind::kFdrCorrected);
  EXPECT_EQ(Method::parse("cv").kind, MethodKind::kCrossValidation);
  EXPECT_EQ(Method::parse("permutation").kind, MethodKind::kPermutation);
  const Method fixed = Method::parse("lambda=0.01");
  EXPECT_EQ(fixed.kind, MethodKind::kFixedLambda);
  EXPECT_DOUBLE_EQ(fixed.lambda, 0.01);
  EXPECT_DOUBLE_EQ(Method::parse(fixed.label()).lambda, 0.01);
  EXPECT_DOUBLE_EQ(Method::parse("fixed_lambda:0.3").lambda, 0.3);
  EXPECT_THROW(Method::parse("lasso"), InvalidArgument);
  EXPECT_THROW(Method::parse("lambda=abc"), InvalidArgument);
}

TEST(Experiment, SingleRepHasNoStandardError) {
  const ExperimentSummary s = run_experiment(small_experiment(1));
  ASSERT_EQ(s.levels.size(), 2u);
  EXPECT_FALSE(s.levels[0].fdr_u.se.has_value());
  EXPECT_EQ(s.levels[0].reps_ok + s.levels[0].excluded, 1);
}

TEST(Experiment, DeterministicAndThreadIndependent) {
  ExperimentSpec e = small_experiment(4);
  const ExperimentSummary a = run_experiment(e);
  e.threads = 3;
  const ExperimentSummary b = run_experiment(e);
  ASSERT_EQ(a.levels.size(), b.levels.size());
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    EXPECT_EQ(a.levels[l].fdr_v.mean, b.levels[l].fdr_v.mean);
    EXPECT_EQ(a.levels[l].tpp_u, b.levels[l].tpp_u);
  }
}

TEST(Experiment, SummaryIgnoresRepOrder) {
  const ExperimentSpec e = small_experiment(5);
  const ExperimentSummary a = run_experiment(e);
  std::vector<RepOutcome> reversed(a.reps.rbegin(), a.reps.rend());
  const ExperimentSummary b = summarize(e, reversed);
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    EXPECT_EQ(a.levels[l].fdr_u.mean, b.levels[l].fdr_u.mean);
    EXPECT_EQ(a.levels[l].tpr_v.mean, b.levels[l].tpr_v.mean);
    EXPECT_EQ(a.levels[l].tpp_v, b.levels[l].tpp_v);
    EXPECT_EQ(a.levels[l].rejections_hist_u, b.levels[l].rejections_hist_u);
  }
}

TEST(Experiment, GlobalNullControlsFamilywiseRate) {
  // With no signal every rejection is false; FDR equals P(any rejection).
  ExperimentSpec e;
  e.model = block(40, 0, 0);
  e.n = 150;
  e.reps = 40;
  e.q_levels = {0.1};
  e.master_seed = 3;
  const ExperimentSummary s = run_experiment(e);
  const LevelSummary& l = s.levels[0];
  EXPECT_EQ(l.tpr_u.mean, 1.0);
  EXPECT_LE(l.fdr_u.mean, 0.1 + 2.0 * l.fdr_u.se.value_or(0.0) + 0.05);
}

TEST(Experiment, Validation) {
  ExperimentSpec e = small_experiment(0);
  EXPECT_THROW(e.validate(), InvalidArgument);
  e.reps = 1;
  e.q_levels.clear();
  EXPECT_THROW(e.validate(), InvalidArgument);
  e.q_levels = {1.2};
  EXPECT_THROW(e.validate(), InvalidArgument);
}

TEST(TppDistribution, Histogram) {
  const TppHistogram h = tpp_distribution(std::vector<double>{0.0, 0.5, 0.51, 1.0, 0.25}, 2);
  ASSERT_EQ(h.centers.size(), 3u);
  EXPECT_DOUBLE_EQ(h.centers[1], 0.5);
  EXPECT_DOUBLE_EQ(h.mass[0], 0.2);
  EXPECT_DOUBLE_EQ(h.mass[1], 0.4);
  EXPECT_DOUBLE_EQ(h.mass[2], 0.2);
  EXPECT_DOUBLE_EQ(h.mass_near_multiples, 0.8);
  EXPECT_EQ(h.distinct_values, 5);
  const TppHistogram empty = tpp_distribution(std::vector<double>{}, 1);
  EXPECT_EQ(empty.mass_near_multiples, 0.0);
  EXPECT_THROW(tpp_distribution(std::vector<double>{0.5}, 0), InvalidArgument);
}
