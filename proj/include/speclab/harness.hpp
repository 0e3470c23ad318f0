#pragma once

// Repeated-trial rate experiments: data generation, tuning, fitting, risk
// evaluation and log-log slope fits. Trials are independent tasks seeded from
// (master_seed, d, trial) and gathered in (d, trial) order, so results do not
// depend on the number of worker threads.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "speclab/error.hpp"
#include "speclab/filters.hpp"
#include "speclab/kernels.hpp"
#include "speclab/rates.hpp"
#include "speclab/regression.hpp"
#include "speclab/sphere.hpp"
#include "speclab/stats.hpp"
#include "speclab/targets.hpp"

namespace speclab {

// ---------------------------------------------------------------------------
// Seeds and threads

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for one stream of one (d, trial) cell.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t d, std::uint64_t trial, std::uint64_t stream = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ d);
  h = splitmix64(h ^ trial);
  return splitmix64(h ^ stream);
}

inline int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) on `threads` workers. fn must not throw.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Configuration

enum class TuningRule { fixed, best_on_test, holdout, cross_validation };

inline std::string to_string(TuningRule r) {
  switch (r) {
    case TuningRule::fixed: return "fixed";
    case TuningRule::best_on_test: return "best_on_test";
    case TuningRule::holdout: return "holdout";
    case TuningRule::cross_validation: return "cv";
  }
  return "fixed";
}

inline TuningRule tuning_rule_from_name(const std::string& name) {
  if (name == "fixed") return TuningRule::fixed;
  if (name == "best_on_test") return TuningRule::best_on_test;
  if (name == "holdout") return TuningRule::holdout;
  if (name == "cv") return TuningRule::cross_validation;
  throw Error(ErrorCode::config, "unknown tuning rule '" + name + "' (fixed, best_on_test, holdout, cv)");
}

inline std::vector<double> default_c1_grid() { return {0.001, 0.01, 0.1, 1, 10, 100, 1000}; }
inline std::vector<double> default_c2_grid() { return {0.001, 0.005, 0.01, 0.1, 0.5, 1, 2, 5, 10, 40, 100, 300, 1000}; }
inline std::vector<double> default_c3_grid() {
  std::vector<double> out;
  for (int i = 1; i <= 15; ++i) out.push_back(i / 10.0);
  return out;
}

/// How the regularization of one algorithm is chosen in each trial.
/// fixed: lambda = c d^{-theta}. Grids: ridge families use lambda = c2 n^{-c3},
/// flow families use t = c1 n^{time_exponent}.
struct TuningSpec {
  TuningRule rule = TuningRule::best_on_test;
  double c = 0.05;
  double theta = 0.5;
  std::vector<double> c1 = default_c1_grid();
  double time_exponent = 0.5;
  std::vector<double> c2 = default_c2_grid();
  std::vector<double> c3 = default_c3_grid();
  int folds = 5;
  double holdout_fraction = 0.2;
};

struct AlgorithmSpec {
  FilterKind kind;
  TuningSpec tuning;

  std::string label() const { return kind.label(); }
  bool is_flow() const {
    return kind.family == FilterFamily::gradient_flow || kind.family == FilterFamily::gradient_descent;
  }
};

struct TargetSpec {
  enum class Type { kernel_sections, gegenbauer, zero };
  Type type = Type::kernel_sections;
  int anchors = 3;
  int degree = 2;
  double s = 1.9;
  GegenbauerConvention convention = GegenbauerConvention::ambient;

  /// Source exponent of the target: kernel sections lie in H itself.
  double source_s() const { return type == Type::gegenbauer ? s : 1.0; }
};

enum class ExperimentKind { rate, saturation };

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::rate;
  std::string kernel = "ntk";
  std::vector<double> kernel_coeffs;
  std::vector<AlgorithmSpec> algorithms;
  double gamma = 1.0;
  std::vector<int> d_list;
  double n_scale = 1.0;
  long long n_max = 4000;
  double sigma = 1.0;
  int repeats = 50;
  int test_size = 1000;
  std::uint64_t master_seed = 0;
  TargetSpec target;
  double saturation_margin = 0.2;
  std::string output;

  Eigen::Index sample_size(int d) const {
    return static_cast<Eigen::Index>(std::llround(n_scale * std::pow(static_cast<double>(d), gamma)));
  }

  void validate() const {
    require(!algorithms.empty(), ErrorCode::config, "at least one algorithm is required");
    require(!d_list.empty(), ErrorCode::config, "d_list must not be empty");
    require(std::is_sorted(d_list.begin(), d_list.end()) &&
                std::adjacent_find(d_list.begin(), d_list.end()) == d_list.end(),
            ErrorCode::config, "d_list must be strictly ascending");
    require(d_list.front() >= 1, ErrorCode::config, "dimensions must be >= 1");
    require(repeats >= 1, ErrorCode::config, "repeats must be >= 1");
    require(test_size >= 1, ErrorCode::config, "test_size must be >= 1");
    require(gamma > 0.0 && std::isfinite(gamma), ErrorCode::config, "gamma must be positive");
    require(n_scale > 0.0, ErrorCode::config, "n_scale must be positive");
    require(sigma >= 0.0, ErrorCode::config, "sigma must be >= 0");
    require(n_max >= 1, ErrorCode::config, "n_max must be >= 1");
    if (target.type == TargetSpec::Type::kernel_sections)
      require(target.anchors >= 1, ErrorCode::config, "kernel-section target needs anchors >= 1");
    if (target.type == TargetSpec::Type::gegenbauer) {
      require(target.degree >= 0, ErrorCode::config, "target degree must be >= 0");
      require(target.s > 0.0, ErrorCode::config, "target s must be positive");
    }
    for (int d : d_list) {
      const Eigen::Index n = sample_size(d);
      require(n >= 1, ErrorCode::config, "n = round(n_scale d^gamma) is 0 at d=" + std::to_string(d));
      require(n <= n_max, ErrorCode::config,
              "n = " + std::to_string(n) + " at d=" + std::to_string(d) + " exceeds n_max = " + std::to_string(n_max));
      for (const auto& a : algorithms) {
        if (a.tuning.rule == TuningRule::cross_validation)
          require(n >= 10 && n >= a.tuning.folds, ErrorCode::config,
                  "cross-validation needs n >= 10 (n = " + std::to_string(n) + " at d=" + std::to_string(d) + ")");
        if (a.tuning.rule == TuningRule::holdout)
          require(n >= 2, ErrorCode::config, "holdout needs n >= 2 (d=" + std::to_string(d) + ")");
      }
    }
    for (const auto& a : algorithms) {
      const auto& t = a.tuning;
      if (t.rule == TuningRule::fixed) {
        require(t.c > 0.0, ErrorCode::config, "fixed tuning needs c > 0");
        continue;
      }
      if (a.is_flow()) {
        require(!t.c1.empty(), ErrorCode::config, "c1 grid must not be empty");
      } else {
        require(!t.c2.empty() && !t.c3.empty(), ErrorCode::config, "c2/c3 grids must not be empty");
      }
      if (t.rule == TuningRule::cross_validation) require(t.folds >= 2, ErrorCode::config, "folds must be >= 2");
      if (t.rule == TuningRule::holdout)
        require(t.holdout_fraction > 0.0 && t.holdout_fraction < 1.0, ErrorCode::config,
                "holdout_fraction must lie in (0, 1)");
    }
  }
};

// ---------------------------------------------------------------------------
// Candidates and selection

/// One tuning candidate: the filter plus its natural parameter (lambda for
/// ridge families, the time t for flow families).
struct Candidate {
  FilterSpec filter;
  double param = 0.0;
};

inline Candidate flow_candidate(const FilterKind& kind, double t) {
  if (kind.family == FilterFamily::gradient_descent) {
    if (t == 0.0) return {FilterSpec(kind, kInfinity), 0.0};
    return {FilterSpec(kind, 1.0 / (kind.eta * t)), t};
  }
  return {FilterSpec::gradient_flow_time(t), t};
}

inline Candidate ridge_candidate(const FilterKind& kind, double lambda) { return {FilterSpec(kind, lambda), lambda}; }

inline Candidate candidate_for_lambda(const FilterKind& kind, double lambda) {
  const FilterSpec f(kind, lambda);
  if (kind.family == FilterFamily::gradient_flow || kind.family == FilterFamily::gradient_descent)
    return {f, f.time()};
  return {f, lambda};
}

inline std::vector<Candidate> tuning_candidates(const AlgorithmSpec& alg, double n, int d) {
  const auto& t = alg.tuning;
  std::vector<Candidate> out;
  if (t.rule == TuningRule::fixed) {
    out.push_back(candidate_for_lambda(alg.kind, t.c * std::pow(static_cast<double>(d), -t.theta)));
    return out;
  }
  if (alg.is_flow()) {
    for (double c1 : t.c1) out.push_back(flow_candidate(alg.kind, c1 * std::pow(n, t.time_exponent)));
  } else {
    for (double c2 : t.c2)
      for (double c3 : t.c3) out.push_back(ridge_candidate(alg.kind, c2 * std::pow(n, -c3)));
  }
  return out;
}

/// Index of the smallest score; scores equal to relative 1e-15 go to the
/// candidate with the larger lambda.
inline std::size_t argmin_prefer_larger_lambda(const std::vector<double>& scores, const std::vector<Candidate>& cands) {
  require(!scores.empty() && scores.size() == cands.size(), ErrorCode::precondition, "empty candidate grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const double a = scores[i], b = scores[best];
    const double tol = 1e-15 * std::max(std::abs(a), std::abs(b));
    if (a < b - tol) {
      best = i;
    } else if (std::abs(a - b) <= tol && cands[i].filter.lambda() > cands[best].filter.lambda()) {
      best = i;
    }
  }
  return best;
}

/// Predictions of every filter on one basis at fixed evaluation points,
/// through the projection K(eval, X) U and U^T y.
class BasisProjector {
 public:
  BasisProjector(const SpectralBasis& basis, const PointCloud& eval, const Eigen::VectorXd& y)
      : basis_(&basis),
        projected_(cross_kernel(basis.kernel(), eval, basis.x()) * basis.eigenvectors()),
        uty_(basis.eigenvectors().transpose() * y) {}

  Eigen::VectorXd predict(const FilterSpec& filter) const {
    const Eigen::VectorXd f = basis_->filtered_eigenvalues(filter);
    return projected_ * f.cwiseProduct(uty_) / static_cast<double>(basis_->n());
  }

 private:
  const SpectralBasis* basis_;
  Eigen::MatrixXd projected_;
  Eigen::VectorXd uty_;
};

inline double mean_squared(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == 0 ? 0.0 : (a - b).squaredNorm() / static_cast<double>(a.size());
}

inline std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 engine(seed);
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(engine)]);
  }
  return idx;
}

inline Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

/// Mean validation squared error of every candidate over contiguous folds of a
/// seeded shuffle.
inline std::vector<double> cross_validation_scores(const Dataset& data, const InnerProductKernel& kernel,
                                                   const std::vector<Candidate>& cands, int folds,
                                                   std::uint64_t seed) {
  const Eigen::Index n = data.size();
  require(n >= 10, ErrorCode::precondition, "cross-validation needs n >= 10");
  require(folds >= 2 && folds <= n, ErrorCode::precondition, "need 2 <= folds <= n");
  const auto order = shuffled_indices(n, seed);
  std::vector<double> scores(cands.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index lo = n * f / folds, hi = n * (f + 1) / folds;
    std::vector<Eigen::Index> train, valid;
    for (Eigen::Index i = 0; i < n; ++i) (i >= lo && i < hi ? valid : train).push_back(order[static_cast<std::size_t>(i)]);
    const SpectralBasis basis(kernel, data.x.select(train));
    const Eigen::VectorXd y_train = take(data.y, train);
    const Eigen::VectorXd y_valid = take(data.y, valid);
    const BasisProjector proj(basis, data.x.select(valid), y_train);
    for (std::size_t c = 0; c < cands.size(); ++c) scores[c] += mean_squared(proj.predict(cands[c].filter), y_valid);
  }
  for (auto& s : scores) s /= folds;
  return scores;
}

/// Validation error of every candidate on a seeded split (fraction held out).
inline std::vector<double> holdout_scores(const Dataset& data, const InnerProductKernel& kernel,
                                          const std::vector<Candidate>& cands, double fraction, std::uint64_t seed) {
  const Eigen::Index n = data.size();
  require(n >= 2, ErrorCode::precondition, "holdout needs n >= 2");
  const auto order = shuffled_indices(n, seed);
  const Eigen::Index n_valid =
      std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<Eigen::Index> train(order.begin() + n_valid, order.end());
  std::vector<Eigen::Index> valid(order.begin(), order.begin() + n_valid);
  const SpectralBasis basis(kernel, data.x.select(train));
  const BasisProjector proj(basis, data.x.select(valid), take(data.y, train));
  const Eigen::VectorXd y_valid = take(data.y, valid);
  std::vector<double> scores;
  scores.reserve(cands.size());
  for (const auto& c : cands) scores.push_back(mean_squared(proj.predict(c.filter), y_valid));
  return scores;
}

/// Five-fold (by default) cross-validated KRR regularization.
inline double cross_validate_krr(const Dataset& data, const InnerProductKernel& kernel,
                                 const std::vector<double>& lambda_grid, std::uint64_t seed, int folds = 5) {
  require(!lambda_grid.empty(), ErrorCode::precondition, "lambda grid must not be empty");
  std::vector<Candidate> cands;
  for (double l : lambda_grid) cands.push_back(ridge_candidate(FilterKind::krr(), l));
  if (cands.size() == 1) return lambda_grid.front();
  return cands[argmin_prefer_larger_lambda(cross_validation_scores(data, kernel, cands, folds, seed), cands)].param;
}

struct OracleTest {
  const PointCloud* test = nullptr;
  const TargetFunction* f_star = nullptr;
};

/// Gradient-flow stopping time from a grid. best_on_test needs `oracle`.
inline double select_gf_time(const Dataset& data, const InnerProductKernel& kernel, const std::vector<double>& time_grid,
                             TuningRule rule, std::uint64_t seed, OracleTest oracle = {}, double fraction = 0.2) {
  require(!time_grid.empty(), ErrorCode::precondition, "time grid must not be empty");
  std::vector<Candidate> cands;
  for (double t : time_grid) cands.push_back(flow_candidate(FilterKind::gradient_flow(), t));
  if (cands.size() == 1) return time_grid.front();
  std::vector<double> scores;
  if (rule == TuningRule::holdout) {
    scores = holdout_scores(data, kernel, cands, fraction, seed);
  } else if (rule == TuningRule::best_on_test) {
    require(oracle.test && oracle.f_star, ErrorCode::precondition, "best_on_test needs the test set and target");
    const SpectralBasis basis(kernel, data.x);
    const BasisProjector proj(basis, *oracle.test, data.y);
    const Eigen::VectorXd truth = (*oracle.f_star)(*oracle.test);
    for (const auto& c : cands) scores.push_back(mean_squared(proj.predict(c.filter), truth));
  } else {
    throw Error(ErrorCode::precondition, "select_gf_time supports holdout and best_on_test");
  }
  return cands[argmin_prefer_larger_lambda(scores, cands)].param;
}

// ---------------------------------------------------------------------------
// Results

struct TrialRow {
  int d = 0;
  Eigen::Index n = 0;
  int trial = 0;
  std::string algorithm;
  std::string tuning_rule;
  double tuned_param = 0.0;
  double test_risk = 0.0;
  double mc_stderr = 0.0;
};

struct TrialFailure {
  int d = 0;
  int trial = 0;
  std::string error_code;
  std::string message;
};

struct DimensionSummary {
  int d = 0;
  Eigen::Index n = 0;
  double mean_risk = 0.0;
  double stderr_risk = 0.0;
  int trials = 0;
};

struct AlgorithmSummary {
  std::string algorithm;
  std::string tuning_rule;
  double qualification = 1.0;
  std::vector<DimensionSummary> per_d;
  std::optional<LogLogFit> slope_n;
  std::optional<LogLogFit> slope_d;
  std::optional<double> theory_exponent;  // risk ~ d^{-r}
  std::vector<std::string> warnings;
};

struct ExperimentResult {
  std::string name;
  ExperimentKind kind = ExperimentKind::rate;
  std::vector<TrialRow> rows;
  std::vector<TrialFailure> failures;
  std::vector<AlgorithmSummary> summaries;
  std::optional<bool> saturation_observed;
  std::optional<double> saturation_slope_gap;  // slope_d(GF) - slope_d(KRR)
  std::vector<std::string> warnings;
  int total_trials = 0;
  bool aborted = false;  // more than 10% of trials failed
};

// ---------------------------------------------------------------------------
// Running

namespace detail {

enum : std::uint64_t { stream_trial = 1, stream_anchor = 2, stream_xi = 3, stream_tuning = 4 };

struct DimensionContext {
  int d = 0;
  Eigen::Index n = 0;
  std::optional<TargetFunction> target;
};

inline TargetFunction build_target(const ExperimentConfig& cfg, const InnerProductKernel& kernel, int d) {
  const SphereDim dim(d);
  switch (cfg.target.type) {
    case TargetSpec::Type::zero: return TargetFunction::zero(dim);
    case TargetSpec::Type::kernel_sections:
      return TargetFunction::kernel_sections(
          kernel, sample_uniform(dim, cfg.target.anchors,
                                 derive_seed(cfg.master_seed, static_cast<std::uint64_t>(d), 0, stream_anchor)));
    case TargetSpec::Type::gegenbauer: {
      const auto xi = sample_uniform(dim, 1, derive_seed(cfg.master_seed, static_cast<std::uint64_t>(d), 0, stream_xi));
      const double mu = funk_hecke_spectrum(kernel, dim, cfg.target.degree).eigenvalue(cfg.target.degree);
      return TargetFunction::gegenbauer_degree(dim, cfg.target.degree, xi.row(0).transpose(), cfg.target.s, mu,
                                               cfg.target.convention);
    }
  }
  throw Error(ErrorCode::config, "unknown target type");
}

inline std::vector<TrialRow> run_trial(const ExperimentConfig& cfg, const InnerProductKernel& kernel,
                                       const DimensionContext& ctx, int trial) {
  const SphereDim dim(ctx.d);
  const std::uint64_t seed =
      derive_seed(cfg.master_seed, static_cast<std::uint64_t>(ctx.d), static_cast<std::uint64_t>(trial), stream_trial);
  std::mt19937_64 engine(seed);
  const PointCloud x = sample_uniform_with(dim, ctx.n, engine, seed);
  const PointCloud test = sample_uniform_with(dim, cfg.test_size, engine, seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const TargetFunction& f = *ctx.target;
  Eigen::VectorXd y = f(x);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += cfg.sigma * noise(engine);
  const Dataset data(x, y, cfg.sigma);
  const Eigen::VectorXd truth = f(test);

  const SpectralBasis basis(kernel, x);
  const BasisProjector proj(basis, test, y);
  std::vector<TrialRow> rows;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    const AlgorithmSpec& alg = cfg.algorithms[a];
    const auto cands = tuning_candidates(alg, static_cast<double>(ctx.n), ctx.d);
    const std::uint64_t tune_seed = derive_seed(seed, a, 0, stream_tuning);
    std::size_t pick = 0;
    if (cands.size() > 1) {
      std::vector<double> scores;
      switch (alg.tuning.rule) {
        case TuningRule::fixed: break;
        case TuningRule::best_on_test:
          for (const auto& c : cands) scores.push_back(mean_squared(proj.predict(c.filter), truth));
          break;
        case TuningRule::holdout:
          scores = holdout_scores(data, kernel, cands, alg.tuning.holdout_fraction, tune_seed);
          break;
        case TuningRule::cross_validation:
          scores = cross_validation_scores(data, kernel, cands, alg.tuning.folds, tune_seed);
          break;
      }
      if (!scores.empty()) pick = argmin_prefer_larger_lambda(scores, cands);
    }
    const RiskReport risk = excess_risk_mc(proj.predict(cands[pick].filter), truth);
    require(std::isfinite(risk.excess_risk), ErrorCode::divergence, "non-finite test risk");
    rows.push_back({ctx.d, ctx.n, trial, alg.label(), to_string(alg.tuning.rule), cands[pick].param,
                    risk.excess_risk, risk.mc_std_error});
  }
  return rows;
}

inline AlgorithmSummary summarize(const ExperimentConfig& cfg, std::size_t a, const std::vector<TrialRow>& rows) {
  const AlgorithmSpec& alg = cfg.algorithms[a];
  AlgorithmSummary out;
  out.algorithm = alg.label();
  out.tuning_rule = to_string(alg.tuning.rule);
  out.qualification = alg.kind.qualification();
  for (int d : cfg.d_list) {
    DimensionSummary ds;
    ds.d = d;
    ds.n = cfg.sample_size(d);
    std::vector<double> risks;
    for (const auto& r : rows)
      if (r.d == d && r.algorithm == out.algorithm && r.tuning_rule == out.tuning_rule) risks.push_back(r.test_risk);
    ds.trials = static_cast<int>(risks.size());
    if (!risks.empty()) {
      const Eigen::Map<const Eigen::VectorXd> v(risks.data(), static_cast<Eigen::Index>(risks.size()));
      const auto [mean, se] = mean_and_stderr(v);
      ds.mean_risk = mean;
      ds.stderr_risk = se;
    }
    out.per_d.push_back(ds);
  }
  std::vector<std::pair<double, double>> by_n, by_d;
  for (const auto& ds : out.per_d) {
    if (ds.trials == 0) continue;
    by_n.emplace_back(static_cast<double>(ds.n), ds.mean_risk);
    by_d.emplace_back(static_cast<double>(ds.d), ds.mean_risk);
  }
  if (by_d.size() >= 3) {
    try {
      out.slope_d = fit_rate_loglog(by_d);
      out.slope_n = fit_rate_loglog(by_n);
      for (const auto& w : out.slope_d->warnings) out.warnings.push_back(w);
    } catch (const Error& e) {
      out.warnings.push_back(std::string("slope fit skipped: ") + e.what());
    }
  } else {
    out.warnings.push_back("slope fit skipped: fewer than 3 dimensions with results");
  }
  if (cfg.target.type != TargetSpec::Type::zero)
    out.theory_exponent =
        spectral_rate_exponent(RateQuery(cfg.target.source_s(), out.qualification, cfg.gamma)).exponent;
  if (alg.tuning.rule == TuningRule::fixed && cfg.target.type != TargetSpec::Type::zero) {
    const double ell = balanced_lambda_exponent(cfg.target.source_s(), out.qualification, cfg.gamma).ell;
    if (std::abs(alg.tuning.theta - ell) > 0.05)
      out.warnings.push_back("tuning deviates from the balanced exponent: theta=" + std::to_string(alg.tuning.theta) +
                             ", balanced ell=" + std::to_string(ell));
  }
  if (alg.tuning.rule == TuningRule::best_on_test) out.warnings.push_back("oracle tuning (selected on the test set)");
  return out;
}

}  // namespace detail

/// Runs every (d, trial) cell; failed trials are recorded and skipped.
inline ExperimentResult run_rate_experiment(const ExperimentConfig& cfg, int threads = 1) {
  cfg.validate();
  const InnerProductKernel kernel = kernel_from_name(cfg.kernel, cfg.kernel_coeffs);

  std::vector<detail::DimensionContext> dims;
  for (int d : cfg.d_list) {
    detail::DimensionContext ctx;
    ctx.d = d;
    ctx.n = cfg.sample_size(d);
    ctx.target = detail::build_target(cfg, kernel, d);
    dims.push_back(std::move(ctx));
  }

  const std::size_t tasks = dims.size() * static_cast<std::size_t>(cfg.repeats);
  std::vector<std::vector<TrialRow>> out_rows(tasks);
  std::vector<std::optional<TrialFailure>> out_fail(tasks);
  parallel_for(tasks, threads, [&](std::size_t i) {
    const auto& ctx = dims[i / static_cast<std::size_t>(cfg.repeats)];
    const int trial = static_cast<int>(i % static_cast<std::size_t>(cfg.repeats));
    try {
      out_rows[i] = detail::run_trial(cfg, kernel, ctx, trial);
    } catch (const Error& e) {
      out_fail[i] = TrialFailure{ctx.d, trial, std::string(to_string(e.code())), e.what()};
    } catch (const std::exception& e) {
      out_fail[i] = TrialFailure{ctx.d, trial, "solver", e.what()};
    }
  });

  ExperimentResult result;
  result.name = cfg.name;
  result.kind = cfg.kind;
  result.total_trials = static_cast<int>(tasks);
  for (std::size_t i = 0; i < tasks; ++i) {
    for (auto& r : out_rows[i]) result.rows.push_back(std::move(r));
    if (out_fail[i]) result.failures.push_back(std::move(*out_fail[i]));
  }
  result.aborted = static_cast<double>(result.failures.size()) > 0.1 * static_cast<double>(tasks);
  if (result.aborted) result.warnings.push_back("more than 10% of trials failed");
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
    result.summaries.push_back(detail::summarize(cfg, a, result.rows));
  return result;
}

/// Rate experiment plus the saturation verdict: the finite-qualification
/// algorithm's d-slope is shallower than the infinite-qualification one's by
/// more than the margin.
inline ExperimentResult run_saturation_experiment(const ExperimentConfig& cfg, int threads = 1) {
  ExperimentResult result = run_rate_experiment(cfg, threads);
  result.kind = ExperimentKind::saturation;
  const AlgorithmSummary* finite = nullptr;
  const AlgorithmSummary* infinite = nullptr;
  for (const auto& s : result.summaries) {
    if (!s.slope_d) continue;
    if (std::isinf(s.qualification)) {
      if (!infinite) infinite = &s;
    } else if (!finite) {
      finite = &s;
    }
  }
  for (const auto& s : result.summaries)
    for (const auto& w : s.warnings)
      if (w.rfind("tuning deviates", 0) == 0) result.warnings.push_back(s.algorithm + ": " + w);
  if (!finite || !infinite) {
    result.warnings.push_back("saturation needs one finite- and one infinite-qualification algorithm with slopes");
    return result;
  }
  const double gap = infinite->slope_d->slope - finite->slope_d->slope;
  result.saturation_slope_gap = gap;
  result.saturation_observed = std::abs(finite->slope_d->slope) < std::abs(infinite->slope_d->slope) - cfg.saturation_margin;
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1) {
  return cfg.kind == ExperimentKind::saturation ? run_saturation_experiment(cfg, threads)
                                                : run_rate_experiment(cfg, threads);
}

}  // namespace speclab
