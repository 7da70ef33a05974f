#include "fdrscca/scca.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fdrscca/random.hpp"

namespace fdrscca {

namespace {

constexpr int kPowerIterations = 500;
constexpr double kPowerTolerance = 1e-12;

void check_lambda(double lambda, const char* which) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw InfeasiblePenalty(std::string(which) + " must lie in (0, 1], got " +
                            std::to_string(lambda));
  }
}

// Leading right singular vector of `cross` by power iteration on cross'cross,
// started from the column norms so the start is deterministic and generically
// not orthogonal to the target.
Vector leading_right_singular_vector(const Matrix& cross) {
  Vector v = cross.colwise().norm().transpose();
  double norm = v.norm();
  if (norm == 0.0) return Vector::Zero(cross.cols());
  v /= norm;
  for (int it = 0; it < kPowerIterations; ++it) {
    Vector next = cross.transpose() * (cross * v);
    norm = next.norm();
    if (norm == 0.0) break;
    next /= norm;
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (change < kPowerTolerance) break;
  }
  return v;
}

void orient(Vector& u, Vector& v) {
  if (u.size() == 0) return;
  Index k = 0;
  u.cwiseAbs().maxCoeff(&k);
  if (u[k] < 0.0) {
    u = -u;
    v = -v;
  }
}

Matrix centered(const Matrix& m) { return m.rowwise() - m.colwise().mean(); }

// Cholesky factor of a sample covariance; SingularCovariance when not PD or
// badly conditioned.
Eigen::LLT<Matrix> covariance_factor(const Matrix& cov, const char* which) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw SingularCovariance(std::string(which) + "'" + which + " is singular");
  }
  const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
  if (diag.minCoeff() <= 1e-10 * diag.maxCoeff()) {
    throw SingularCovariance(std::string(which) + "'" + which + " is numerically singular");
  }
  return llt;
}

}  // namespace

PenaltyParams::PenaltyParams(double lambda_u, double lambda_v, Index px, Index py) {
  check_lambda(lambda_u, "lambda_u");
  check_lambda(lambda_v, "lambda_v");
  if (px < 1 || py < 1) throw DimensionMismatch("penalty dimensions must be positive");
  lambda_u_ = lambda_u;
  lambda_v_ = lambda_v;
  c1_ = lambda_u * std::sqrt(static_cast<double>(px));
  c2_ = lambda_v * std::sqrt(static_cast<double>(py));
}

PenaltyParams PenaltyParams::from_bounds(double c1, double c2, Index px, Index py) {
  return PenaltyParams(c1 / std::sqrt(static_cast<double>(px)),
                       c2 / std::sqrt(static_cast<double>(py)), px, py);
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
}

DidNotConverge::DidNotConverge(CanonicalPair last, int iterations)
    : Error("DidNotConverge",
            "penalized CCA did not converge in " + std::to_string(iterations) + " iterations"),
      last_(std::move(last)),
      iterations_(iterations) {}

TargetUnreachable::TargetUnreachable(const std::string& what, CanonicalPair fallback,
                                     PenaltyParams penalty)
    : Error("TargetUnreachable", what), fallback_(std::move(fallback)), penalty_(penalty) {}

Vector soft_threshold(const Vector& w, double delta) {
  if (!(delta >= 0.0)) throw InvalidArgument("soft_threshold needs delta >= 0");
  Vector out(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    const double mag = std::abs(w[i]) - delta;
    out[i] = mag > 0.0 ? std::copysign(mag, w[i]) : 0.0;
  }
  return out;
}

Vector l1_l2_maximizer(const Vector& a, double bound) {
  const Index p = a.size();
  Vector out = Vector::Zero(p);
  if (p == 0) return out;
  const double a_norm = a.norm();
  if (a_norm == 0.0) return out;

  if (bound < 1.0) {
    Index k = 0;
    a.cwiseAbs().maxCoeff(&k);
    out[k] = std::copysign(bound, a[k]);
    return out;
  }
  if (a.lpNorm<1>() <= bound * a_norm) return a / a_norm;

  // Magnitudes in decreasing order, with prefix sums of |a| and |a|^2.
  std::vector<double> mags(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) mags[static_cast<std::size_t>(i)] = std::abs(a[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  std::vector<double> s1(mags.size() + 1, 0.0);
  std::vector<double> s2(mags.size() + 1, 0.0);
  for (std::size_t k = 0; k < mags.size(); ++k) {
    s1[k + 1] = s1[k] + mags[k];
    s2[k + 1] = s2[k] + mags[k] * mags[k];
  }
  // l1/l2 ratio of S(a, delta) at delta = mags[m], where exactly the m largest
  // entries survive. Nondecreasing in m.
  auto ratio_at = [&](std::size_t m) {
    if (m == 0) return 1.0;
    const double d = mags[m];
    const double l1 = s1[m] - static_cast<double>(m) * d;
    const double l2sq = s2[m] - 2.0 * d * s1[m] + static_cast<double>(m) * d * d;
    return l2sq > 0.0 ? l1 / std::sqrt(l2sq) : 1.0;
  };
  // Bisect for the smallest m in [1, p] with ratio_at(m) >= bound; m = p stands
  // for delta = 0, where the slack test above guarantees the ratio exceeds the bound.
  std::size_t lo = 1;
  std::size_t hi = mags.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (mid < mags.size() && ratio_at(mid) < bound) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  // The binding delta lies on [mags[m], mags[m-1]] (mags[p] read as 0), where
  // exactly the m largest entries survive. There
  //   (s1 - m d)^2 = bound^2 (s2 - 2 d s1 + m d^2)
  // has the root below s1/m given next.
  const std::size_t m = lo;
  const double floor_mag = m < mags.size() ? mags[m] : 0.0;
  const auto k = static_cast<double>(m);
  const double c2 = bound * bound;
  double delta = floor_mag;
  if (k > c2) {
    const double disc = std::max(0.0, (k * s2[m] - s1[m] * s1[m]) / (k - c2));
    delta = (s1[m] - bound * std::sqrt(disc)) / k;
    delta = std::clamp(delta, floor_mag, mags[m - 1]);
  }
  out = soft_threshold(a, delta);
  const double norm = out.norm();
  if (norm == 0.0) return out;
  out /= norm;
  // Roundoff can leave ||out||_1 a few ulps above the bound.
  const double l1 = out.lpNorm<1>();
  if (l1 > bound) out *= bound / l1;
  return out;
}

CanonicalPair classical_cca(const DataMatrixPair& data) {
  const Index n = data.n();
  if (n <= std::max(data.px(), data.py())) {
    throw DimensionTooHigh("classical CCA is degenerate when n <= max(pX, pY)");
  }
  const Matrix xc = centered(data.x());
  const Matrix yc = centered(data.y());
  const double denom = static_cast<double>(n - 1);
  const Matrix sxx = (xc.transpose() * xc) / denom;
  const Matrix syy = (yc.transpose() * yc) / denom;
  const Matrix sxy = (xc.transpose() * yc) / denom;
  const auto lx = covariance_factor(sxx, "X");
  const auto ly = covariance_factor(syy, "Y");

  // K = Lx^{-1} Sxy Ly^{-T}; its singular values are the canonical correlations.
  const Matrix left = lx.matrixL().solve(sxy);
  const Matrix k = ly.matrixL().solve(left.transpose()).transpose();
  Eigen::JacobiSVD<Matrix> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector u = lx.matrixU().solve(Vector(svd.matrixU().col(0)));
  Vector v = ly.matrixU().solve(Vector(svd.matrixV().col(0)));
  orient(u, v);
  return CanonicalPair::from_vectors(std::move(u), std::move(v), svd.singularValues()[0]);
}

SparseCcaSolver::SparseCcaSolver(const DataMatrixPair& data, SolverConfig cfg)
    : SparseCcaSolver(Matrix(data.x().transpose() * data.y() / static_cast<double>(data.n())),
                      cfg) {}

SparseCcaSolver::SparseCcaSolver(Matrix cross, SolverConfig cfg)
    : cross_(std::move(cross)), cfg_(cfg) {
  cfg_.validate();
  v_init_ = leading_right_singular_vector(cross_);
}

CanonicalPair SparseCcaSolver::solve(const PenaltyParams& penalty) const {
  SolveTrace trace;
  CanonicalPair pair = solve(penalty, trace);
  if (!trace.converged) throw DidNotConverge(std::move(pair), trace.iterations);
  return pair;
}

CanonicalPair SparseCcaSolver::solve(const PenaltyParams& penalty, SolveTrace& trace) const {
  trace = SolveTrace{};
  Vector v = v_init_;
  Vector u = Vector::Zero(px());
  double objective = 0.0;
  for (int it = 1; it <= cfg_.max_iters; ++it) {
    Vector u_next = l1_l2_maximizer(cross_ * v, penalty.c1());
    Vector v_next = l1_l2_maximizer(cross_.transpose() * u_next, penalty.c2());
    const double change = std::max((u_next - u).cwiseAbs().maxCoeff(),
                                   (v_next - v).cwiseAbs().maxCoeff());
    u = std::move(u_next);
    v = std::move(v_next);
    objective = u.dot(cross_ * v);
    trace.objective.push_back(objective);
    trace.iterations = it;
    if (change < cfg_.tol) {
      trace.converged = true;
      break;
    }
  }
  orient(u, v);
  return CanonicalPair::from_vectors(std::move(u), std::move(v), objective);
}

CanonicalPair l1_penalized_cca(const DataMatrixPair& data, const PenaltyParams& penalty,
                               const SolverConfig& cfg) {
  return SparseCcaSolver(data, cfg).solve(penalty);
}

namespace {

struct Candidate {
  CanonicalPair pair;
  double lambda_u;
  double lambda_v;
};

class SupportTuner {
 public:
  SupportTuner(const SparseCcaSolver& solver, Index target_u, Index target_v, Index cap_u,
               Index cap_v)
      : solver_(solver), target_u_(target_u), target_v_(target_v), cap_u_(cap_u), cap_v_(cap_v) {}

  Candidate evaluate(double lambda_u, double lambda_v) {
    SolveTrace trace;
    const PenaltyParams penalty(lambda_u, lambda_v, solver_.px(), solver_.py());
    Candidate cand{solver_.solve(penalty, trace), lambda_u, lambda_v};
    remember(cand);
    return cand;
  }

  bool in_band_u(const CanonicalPair& p) const { return in_band(p.support_u.size(), target_u_, cap_u_); }
  bool in_band_v(const CanonicalPair& p) const { return in_band(p.support_v.size(), target_v_, cap_v_); }

  // Bisection on one lambda with the other held fixed. Returns the lambda
  // whose support is in band, or the sparser bracket end when the band is
  // jumped over.
  double bisect(bool tune_u, double fixed_other) {
    const Index target = tune_u ? target_u_ : target_v_;
    const Index cap = tune_u ? cap_u_ : cap_v_;
    auto eval = [&](double lambda) {
      const Candidate c = tune_u ? evaluate(lambda, fixed_other) : evaluate(fixed_other, lambda);
      return static_cast<Index>(tune_u ? c.pair.support_u.size() : c.pair.support_v.size());
    };
    auto band_lo = [&] { return static_cast<double>(target) * 0.8; };

    double lo = kLambdaFloor;
    double hi = 1.0;
    const Index at_hi = eval(hi);
    if (in_band(static_cast<std::size_t>(at_hi), target, cap)) return hi;
    if (static_cast<double>(at_hi) < band_lo()) return hi;  // densest reachable
    const Index at_lo = eval(lo);
    if (in_band(static_cast<std::size_t>(at_lo), target, cap)) return lo;
    if (static_cast<double>(at_lo) > static_cast<double>(cap)) return lo;
    for (int step = 0; step < kBisectionSteps && hi - lo > kBracketWidth; ++step) {
      const double mid = 0.5 * (lo + hi);
      const Index count = eval(mid);
      if (in_band(static_cast<std::size_t>(count), target, cap)) return mid;
      if (static_cast<double>(count) < band_lo()) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

  const std::optional<Candidate>& best() const { return best_; }

 private:
  static constexpr double kLambdaFloor = 1e-6;
  static constexpr int kBisectionSteps = 60;
  static constexpr double kBracketWidth = 1e-9;

  static bool in_band(std::size_t count, Index target, Index cap) {
    const auto c = static_cast<double>(count);
    return c >= 0.8 * static_cast<double>(target) && c <= 1.2 * static_cast<double>(target) &&
           static_cast<Index>(count) <= cap;
  }

  // Closest-to-target solution among those within both caps; ties go sparser.
  void remember(const Candidate& cand) {
    const auto su = static_cast<Index>(cand.pair.support_u.size());
    const auto sv = static_cast<Index>(cand.pair.support_v.size());
    if (su > cap_u_ || sv > cap_v_ || su == 0 || sv == 0) return;
    const double miss = std::max(std::abs(static_cast<double>(su - target_u_)) / static_cast<double>(target_u_),
                                 std::abs(static_cast<double>(sv - target_v_)) / static_cast<double>(target_v_));
    if (!best_ || miss < best_miss_ ||
        (miss == best_miss_ && su + sv < static_cast<Index>(best_->pair.support_u.size() +
                                                            best_->pair.support_v.size()))) {
      best_ = cand;
      best_miss_ = miss;
    }
  }

  const SparseCcaSolver& solver_;
  Index target_u_;
  Index target_v_;
  Index cap_u_;
  Index cap_v_;
  std::optional<Candidate> best_;
  double best_miss_ = std::numeric_limits<double>::infinity();
};

}  // namespace

TunedFit tune_to_target_support(const DataMatrixPair& data, Index target_nnz_u,
                                Index target_nnz_v, const SolverConfig& cfg,
                                std::optional<Index> max_support) {
  if (target_nnz_u < 1 || target_nnz_u > data.px() || target_nnz_v < 1 ||
      target_nnz_v > data.py()) {
    throw InvalidArgument("support targets must lie in [1, p]");
  }
  auto cap_for = [&](Index target) {
    auto cap = static_cast<Index>(std::floor(1.2 * static_cast<double>(target)));
    if (max_support) cap = std::min(cap, *max_support);
    return std::max<Index>(cap, 1);
  };
  const SparseCcaSolver solver(data, cfg);
  SupportTuner tuner(solver, target_nnz_u, target_nnz_v, cap_for(target_nnz_u),
                     cap_for(target_nnz_v));

  constexpr int kRounds = 4;
  double lambda_u = 1.0;
  double lambda_v = 1.0;
  for (int round = 0; round < kRounds; ++round) {
    lambda_u = tuner.bisect(true, lambda_v);
    lambda_v = tuner.bisect(false, lambda_u);
    const Candidate cand = tuner.evaluate(lambda_u, lambda_v);
    if (tuner.in_band_u(cand.pair) && tuner.in_band_v(cand.pair)) {
      return {cand.pair, PenaltyParams(lambda_u, lambda_v, data.px(), data.py())};
    }
  }
  const auto& best = tuner.best();
  if (!best) {
    throw TargetUnreachable("no penalty produced nonempty supports within the cap",
                            tuner.evaluate(lambda_u, lambda_v).pair,
                            PenaltyParams(lambda_u, lambda_v, data.px(), data.py()));
  }
  if (tuner.in_band_u(best->pair) && tuner.in_band_v(best->pair)) {
    return {best->pair, PenaltyParams(best->lambda_u, best->lambda_v, data.px(), data.py())};
  }
  throw TargetUnreachable(
      "support tuning did not reach the target band (u: " +
          std::to_string(best->pair.support_u.size()) + "/" + std::to_string(target_nnz_u) +
          ", v: " + std::to_string(best->pair.support_v.size()) + "/" +
          std::to_string(target_nnz_v) + ")",
      best->pair, PenaltyParams(best->lambda_u, best->lambda_v, data.px(), data.py()));
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(10);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = 0.1 + 0.6 * static_cast<double>(i) / 9.0;
  }
  return grid;
}

double sample_correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double denom = ac.norm() * bc.norm();
  if (!(denom > 0.0)) return 0.0;
  return std::clamp(ac.dot(bc) / denom, -1.0, 1.0);
}

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw EmptyGrid("lambda grid is empty");
}

CanonicalPair solve_lenient(const SparseCcaSolver& solver, double lambda) {
  SolveTrace trace;
  return solver.solve(PenaltyParams(lambda, lambda, solver.px(), solver.py()), trace);
}

double fisher_z(double r) {
  constexpr double kClamp = 1.0 - 1e-12;
  return std::atanh(std::clamp(r, -kClamp, kClamp));
}

std::size_t argmax_first(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

PermutationSelection permutation_select_lambda_detailed(const DataMatrixPair& data,
                                                        const std::vector<double>& grid,
                                                        int n_perms, const SolverConfig& cfg) {
  check_grid(grid);
  if (n_perms < 1) throw InvalidArgument("n_perms must be at least 1");
  const std::size_t g = grid.size();

  PermutationSelection out{PenaltyParams(grid.front(), grid.front(), data.px(), data.py()), {}, {}};
  const SparseCcaSolver solver(data, cfg);
  for (double lambda : grid) {
    const CanonicalPair pair = solve_lenient(solver, lambda);
    out.correlations.push_back(sample_correlation(data.x() * pair.u, data.y() * pair.v));
  }

  std::vector<std::vector<double>> perm_z(g);
  Rng rng(stream_seed(cfg.rng_seed, Stream::kPermutation));
  const double n = static_cast<double>(data.n());
  for (int b = 0; b < n_perms; ++b) {
    const IndexSet perm = random_permutation(data.n(), rng);
    const Matrix y_perm = data.y()(perm, Eigen::all);
    const SparseCcaSolver perm_solver(Matrix(data.x().transpose() * y_perm / n), cfg);
    for (std::size_t i = 0; i < g; ++i) {
      const CanonicalPair pair = solve_lenient(perm_solver, grid[i]);
      perm_z[i].push_back(fisher_z(sample_correlation(data.x() * pair.u, y_perm * pair.v)));
    }
  }

  for (std::size_t i = 0; i < g; ++i) {
    const auto& zs = perm_z[i];
    const double mean = std::accumulate(zs.begin(), zs.end(), 0.0) / static_cast<double>(zs.size());
    double ss = 0.0;
    for (double z : zs) ss += (z - mean) * (z - mean);
    const double sd = zs.size() > 1 ? std::sqrt(ss / static_cast<double>(zs.size() - 1)) : 0.0;
    const double gap = fisher_z(out.correlations[i]) - mean;
    // A single permutation has no spread; fall back to the raw gap.
    out.z_statistics.push_back(sd > 0.0 ? gap / sd : gap);
  }
  const double best = grid[argmax_first(out.z_statistics)];
  out.penalty = PenaltyParams(best, best, data.px(), data.py());
  return out;
}

PenaltyParams permutation_select_lambda(const DataMatrixPair& data, const std::vector<double>& grid,
                                        int n_perms, const SolverConfig& cfg) {
  return permutation_select_lambda_detailed(data, grid, n_perms, cfg).penalty;
}

CvSelection cv_select_lambda_detailed(const DataMatrixPair& data, const std::vector<double>& grid,
                                      int k_folds, const SolverConfig& cfg) {
  check_grid(grid);
  if (k_folds < 2) throw InvalidArgument("k_folds must be at least 2");
  const Index n = data.n();
  if (n / k_folds < 3) {
    throw FoldTooSmall("with n = " + std::to_string(n) + " and " + std::to_string(k_folds) +
                       " folds some fold has fewer than 3 rows");
  }
  Rng rng(stream_seed(cfg.rng_seed, Stream::kFolds));
  const IndexSet order = random_permutation(n, rng);

  CvSelection out{PenaltyParams(grid.front(), grid.front(), data.px(), data.py()),
                  std::vector<double>(grid.size(), 0.0)};
  for (int f = 0; f < k_folds; ++f) {
    // Contiguous blocks of the shuffled order; the first n % k folds get one extra row.
    const Index base = n / k_folds;
    const Index extra = n % k_folds;
    const Index begin = f * base + std::min<Index>(f, extra);
    const Index size = base + (f < extra ? 1 : 0);
    IndexSet test(order.begin() + begin, order.begin() + begin + size);
    IndexSet train;
    train.reserve(static_cast<std::size_t>(n - size));
    train.insert(train.end(), order.begin(), order.begin() + begin);
    train.insert(train.end(), order.begin() + begin + size, order.end());

    const DataMatrixPair train_data = data.rows(train);
    const DataMatrixPair test_data = data.rows(test);
    const SparseCcaSolver solver(train_data, cfg);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const CanonicalPair pair = solve_lenient(solver, grid[i]);
      out.mean_heldout_correlation[i] +=
          sample_correlation(test_data.x() * pair.u, test_data.y() * pair.v) /
          static_cast<double>(k_folds);
    }
  }
  const double best = grid[argmax_first(out.mean_heldout_correlation)];
  out.penalty = PenaltyParams(best, best, data.px(), data.py());
  return out;
}

PenaltyParams cv_select_lambda(const DataMatrixPair& data, const std::vector<double>& grid,
                               int k_folds, const SolverConfig& cfg) {
  return cv_select_lambda_detailed(data, grid, k_folds, cfg).penalty;
}

}  // namespace fdrscca
