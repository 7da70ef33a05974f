#include "fdrscca/simulation.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "fdrscca/parallel.hpp"

namespace fdrscca {

namespace {

// Block id of an active feature, or -1 for inactive ones.
Index block_of(Index i, Index active, Index k_blocks) {
  if (i >= active) return -1;
  return i / (active / k_blocks);
}

Matrix within_block(Index p, Index active, const BlockModelSpec& spec) {
  Matrix m(p, p);
  for (Index j = 0; j < p; ++j) {
    const Index bj = block_of(j, active, spec.k_blocks);
    for (Index i = 0; i < p; ++i) {
      if (i == j) {
        m(i, j) = 1.0;
        continue;
      }
      const Index bi = block_of(i, active, spec.k_blocks);
      m(i, j) = (bi >= 0 && bi == bj) ? spec.rho_within : spec.rho_background;
    }
  }
  return m;
}

Matrix draw_columns(Index n, Index p, ColumnSource source, Rng& rng) {
  if (source == ColumnSource::kStandardNormal) return standard_normal(n, p, rng);
  Matrix out(n, p);
  std::uniform_real_distribution<double> maf_dist(0.05, 0.5);
  for (Index j = 0; j < p; ++j) {
    // Redraw the rare all-equal column so standardization is defined.
    do {
      std::binomial_distribution<int> genotype(2, maf_dist(rng));
      for (Index i = 0; i < n; ++i) out(i, j) = genotype(rng);
    } while ((out.col(j).array() == out(0, j)).all());
  }
  return out;
}

Estimate estimate(const std::vector<double>& values) {
  Estimate e;
  if (values.empty()) return e;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double x : values) sum += x;
  e.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double x : values) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return e;
}

std::string format_lambda(double lambda) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << lambda;
  return os.str();
}

}  // namespace

void BlockModelSpec::validate() const {
  if (px < 1 || py < 1) throw InvalidArgument("pX and pY must be positive");
  if (sx < 0 || sy < 0 || sx > px || sy > py) throw InvalidArgument("need 0 <= sX <= pX, 0 <= sY <= pY");
  if (k_blocks < 1) throw InvalidArgument("k_blocks must be at least 1");
  if (k_blocks > 1 && (sx % k_blocks != 0 || sy % k_blocks != 0 || sx == 0 || sy == 0)) {
    throw InvalidArgument("with k_blocks > 1, sX and sY must be positive multiples of k_blocks");
  }
}

CovarianceModel build_block_model(const BlockModelSpec& spec) {
  spec.validate();
  Matrix sigma_x = within_block(spec.px, spec.sx, spec);
  Matrix sigma_y = within_block(spec.py, spec.sy, spec);
  Matrix sigma_xy = Matrix::Zero(spec.px, spec.py);
  if (spec.sx > 0 && spec.sy > 0) {
    for (Index j = 0; j < spec.sy; ++j) {
      for (Index i = 0; i < spec.sx; ++i) {
        if (block_of(i, spec.sx, spec.k_blocks) == block_of(j, spec.sy, spec.k_blocks)) {
          sigma_xy(i, j) = spec.rho_cross;
        }
      }
    }
  }
  CovarianceModel model(std::move(sigma_x), std::move(sigma_y), std::move(sigma_xy));
  validate_model(model);
  return model;
}

GaussianSampler::GaussianSampler(const CovarianceModel& model) : px_(model.px()) {
  validate_model(model);
  lower_ = Eigen::LLT<Matrix>(model.joint()).matrixL();
}

DataMatrixPair GaussianSampler::sample(Index n, std::uint64_t seed) const {
  Rng rng(seed);
  const Index d = lower_.rows();
  const Matrix z = standard_normal(n, d, rng);
  const Matrix rows = z * lower_.triangularView<Eigen::Lower>().transpose();
  return DataMatrixPair(rows.leftCols(px_), rows.rightCols(d - px_));
}

DataMatrixPair sample_joint_gaussian(const CovarianceModel& model, Index n, std::uint64_t seed) {
  return GaussianSampler(model).sample(n, seed);
}

void LatentSpec::validate() const {
  if (s < 0) throw InvalidArgument("s must be nonnegative");
  if (!(rho_xy > 0.0 && rho_xy < 1.0)) throw InvalidArgument("rho_xy must lie in (0, 1)");
}

InjectedData inject_latent_cross_correlation(const DataMatrixPair& data, const LatentSpec& spec,
                                             std::uint64_t seed) {
  spec.validate();
  if (spec.s > std::min(data.px(), data.py())) {
    throw TooManyActive("s = " + std::to_string(spec.s) + " exceeds min(pX, pY)");
  }
  if (spec.s == 0) return {data, {}, {}};
  Rng rng(stream_seed(seed, Stream::kLatent));
  const Vector z = standard_normal(data.n(), 1, rng).col(0);
  const double keep = std::sqrt(1.0 - spec.rho_xy);
  const double share = std::sqrt(spec.rho_xy);
  Matrix x = data.x();
  Matrix y = data.y();
  for (Index i = 0; i < spec.s; ++i) {
    x.col(i) = keep * x.col(i) + share * z;
    y.col(i) = keep * y.col(i) + share * z;
  }
  IndexSet truth(static_cast<std::size_t>(spec.s));
  for (Index i = 0; i < spec.s; ++i) truth[static_cast<std::size_t>(i)] = i;
  return {DataMatrixPair(std::move(x), std::move(y)), truth, truth};
}

InjectedData generate_latent_data(const LatentModelSpec& spec, Index n, std::uint64_t seed) {
  Rng rng(stream_seed(seed, Stream::kData));
  Matrix x = draw_columns(n, spec.px, spec.latent.x_source, rng);
  Matrix y = draw_columns(n, spec.py, spec.latent.y_source, rng);
  const DataMatrixPair base(standardize_columns(x), standardize_columns(y));
  return inject_latent_cross_correlation(base, spec.latent, seed);
}

std::pair<IndexSet, IndexSet> truth_sets(const CovarianceModel& model) {
  IndexSet tu;
  IndexSet tv;
  const Matrix& c = model.sigma_xy();
  for (Index i = 0; i < c.rows(); ++i) {
    if ((c.row(i).array() != 0.0).any()) tu.push_back(i);
  }
  for (Index j = 0; j < c.cols(); ++j) {
    if ((c.col(j).array() != 0.0).any()) tv.push_back(j);
  }
  return {tu, tv};
}

Method Method::fixed_lambda(double lambda) {
  Method m;
  m.kind = MethodKind::kFixedLambda;
  m.lambda = lambda;
  return m;
}

Method Method::permutation(int n_perms) {
  Method m;
  m.kind = MethodKind::kPermutation;
  m.n_perms = n_perms;
  return m;
}

Method Method::cross_validation(int k_folds) {
  Method m;
  m.kind = MethodKind::kCrossValidation;
  m.k_folds = k_folds;
  return m;
}

std::string Method::label() const {
  switch (kind) {
    case MethodKind::kFdrCorrected: return "fdr_corrected";
    case MethodKind::kFixedLambda: return "fixed_lambda(" + format_lambda(lambda) + ")";
    case MethodKind::kPermutation: return "permutation";
    case MethodKind::kCrossValidation: return "cv";
  }
  return "unknown";
}

Method Method::parse(const std::string& text) {
  if (text == "fdr_corrected" || text == "fdr") return fdr_corrected();
  if (text == "permutation") return permutation();
  if (text == "cv") return cross_validation();
  auto parse_lambda = [&](const std::string& number) {
    std::istringstream is(number);
    is.imbue(std::locale::classic());
    double value = 0.0;
    if (!(is >> value) || !is.eof()) throw InvalidArgument("unknown method '" + text + "'");
    // Validates the range.
    (void)PenaltyParams(value, value, 1, 1);
    return fixed_lambda(value);
  };
  for (const std::string prefix : {"fixed_lambda:", "lambda="}) {
    if (text.rfind(prefix, 0) == 0) return parse_lambda(text.substr(prefix.size()));
  }
  if (text.rfind("fixed_lambda(", 0) == 0 && text.back() == ')') {
    return parse_lambda(text.substr(13, text.size() - 14));
  }
  throw InvalidArgument("unknown method '" + text + "'");
}

void ExperimentSpec::validate() const {
  if (reps < 1) throw InvalidArgument("reps must be at least 1");
  if (n < 9) throw TooFewRows("experiments need n >= 9");
  if (method.kind == MethodKind::kFdrCorrected && q_levels.empty()) {
    throw InvalidArgument("the FDR-corrected method needs at least one q level");
  }
  for (double q : q_levels) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("q levels must lie in (0, 1)");
  }
  solver.validate();
  std::visit([](const auto& m) {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, BlockModelSpec>) {
      m.validate();
    } else {
      m.latent.validate();
    }
  }, model);
}

namespace {

struct RepData {
  DataMatrixPair data;
  IndexSet truth_u;
  IndexSet truth_v;
};

class DataSource {
 public:
  explicit DataSource(const std::variant<BlockModelSpec, LatentModelSpec>& model) : spec_(model) {
    if (const auto* block = std::get_if<BlockModelSpec>(&model)) {
      const CovarianceModel cov = build_block_model(*block);
      auto [tu, tv] = truth_sets(cov);
      truth_u_ = std::move(tu);
      truth_v_ = std::move(tv);
      sampler_.emplace(cov);
    }
  }

  RepData draw(Index n, std::uint64_t rep_seed) const {
    if (sampler_) {
      return {standardize(sampler_->sample(n, stream_seed(rep_seed, Stream::kData))), truth_u_,
              truth_v_};
    }
    const auto& latent = std::get<LatentModelSpec>(spec_);
    InjectedData injected = generate_latent_data(latent, n, rep_seed);
    return {standardize(injected.data), std::move(injected.truth_u), std::move(injected.truth_v)};
  }

 private:
  std::variant<BlockModelSpec, LatentModelSpec> spec_;
  std::optional<GaussianSampler> sampler_;
  IndexSet truth_u_;
  IndexSet truth_v_;
};

RepOutcome run_rep(const ExperimentSpec& spec, const DataSource& source, Index rep) {
  RepOutcome out;
  out.rep = rep;
  out.seed = child_seed(spec.master_seed, static_cast<std::uint64_t>(rep));
  try {
    const RepData rd = source.draw(spec.n, out.seed);
    SolverConfig solver = spec.solver;
    solver.rng_seed = out.seed;
    const Method& method = spec.method;
    if (method.kind == MethodKind::kFdrCorrected) {
      PipelineConfig cfg;
      cfg.split_seed = out.seed;
      cfg.target_nnz = spec.target_nnz;
      cfg.solver = solver;
      const PreparedTests tests = prepare_tests(rd.data, cfg);
      for (double q : spec.q_levels) {
        out.metrics.push_back(
            fdp_tpp(apply_fdr_correction(rd.data, tests, q, q), rd.truth_u, rd.truth_v));
      }
    } else {
      double lambda = method.lambda;
      if (method.kind == MethodKind::kPermutation) {
        lambda = permutation_select_lambda(rd.data, method.grid, method.n_perms, solver).lambda_u();
      } else if (method.kind == MethodKind::kCrossValidation) {
        lambda = cv_select_lambda(rd.data, method.grid, method.k_folds, solver).lambda_u();
      }
      SolveTrace trace;
      const CanonicalPair pair = SparseCcaSolver(rd.data, solver)
                                     .solve(PenaltyParams(lambda, lambda, rd.data.px(), rd.data.py()),
                                            trace);
      out.metrics.push_back(fdp_tpp(pair.support_u, pair.support_v, rd.truth_u, rd.truth_v));
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = std::string(e.name());
    out.metrics.clear();
  }
  return out;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const DataSource source(spec.model);
  std::vector<RepOutcome> reps(static_cast<std::size_t>(spec.reps));
  parallel_for(reps.size(), spec.threads, [&](std::size_t r) {
    reps[r] = run_rep(spec, source, static_cast<Index>(r));
  });
  return summarize(spec, std::move(reps));
}

ExperimentSummary summarize(const ExperimentSpec& spec, std::vector<RepOutcome> reps) {
  std::sort(reps.begin(), reps.end(),
            [](const RepOutcome& a, const RepOutcome& b) { return a.rep < b.rep; });
  ExperimentSummary summary;
  summary.method = spec.method.label();
  const bool leveled = spec.method.kind == MethodKind::kFdrCorrected;
  const std::size_t n_levels = leveled ? spec.q_levels.size() : 1;
  for (std::size_t l = 0; l < n_levels; ++l) {
    LevelSummary level;
    if (leveled) level.q = spec.q_levels[l];
    std::vector<double> fdp_u, fdp_v;
    for (const RepOutcome& rep : reps) {
      if (!rep.ok) {
        ++level.excluded;
        continue;
      }
      const FdpTpp& m = rep.metrics[l];
      fdp_u.push_back(m.fdp_u);
      fdp_v.push_back(m.fdp_v);
      level.tpp_u.push_back(m.tpp_u);
      level.tpp_v.push_back(m.tpp_v);
      ++level.rejections_hist_u[m.rejections_u];
      ++level.rejections_hist_v[m.rejections_v];
    }
    level.reps_ok = static_cast<Index>(fdp_u.size());
    level.fdr_u = estimate(fdp_u);
    level.fdr_v = estimate(fdp_v);
    level.tpr_u = estimate(level.tpp_u);
    level.tpr_v = estimate(level.tpp_v);
    summary.levels.push_back(std::move(level));
  }
  summary.reps = std::move(reps);
  return summary;
}

TppHistogram tpp_distribution(const std::vector<double>& tpp, Index k_blocks) {
  if (k_blocks < 1) throw InvalidArgument("k_blocks must be at least 1");
  constexpr double kWindow = 0.05;
  TppHistogram h;
  h.k = k_blocks;
  for (Index j = 0; j <= k_blocks; ++j) {
    h.centers.push_back(static_cast<double>(j) / static_cast<double>(k_blocks));
  }
  h.mass.assign(h.centers.size(), 0.0);
  if (tpp.empty()) return h;
  const double weight = 1.0 / static_cast<double>(tpp.size());
  std::set<double> distinct;
  for (double t : tpp) {
    distinct.insert(t);
    const double scaled = t * static_cast<double>(k_blocks);
    const auto j = static_cast<std::size_t>(
        std::clamp<double>(std::round(scaled), 0.0, static_cast<double>(k_blocks)));
    if (std::abs(t - h.centers[j]) <= kWindow + 1e-12) h.mass[j] += weight;
  }
  for (double m : h.mass) h.mass_near_multiples += m;
  h.distinct_values = static_cast<Index>(distinct.size());
  return h;
}

TppHistogram tpp_distribution(const LevelSummary& level, Index k_blocks) {
  return tpp_distribution(level.tpp_v, k_blocks);
}

}  // namespace fdrscca
