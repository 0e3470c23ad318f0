#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>

#include "speclab/config.hpp"
#include "speclab/csv.hpp"
#include "speclab/harness.hpp"
#include "test_support.hpp"

using namespace speclab;

namespace {

ExperimentConfig small_rate_config() {
  ExperimentConfig cfg;
  cfg.kernel = "ntk";
  cfg.gamma = 1.0;
  cfg.d_list = {6, 9, 14};
  cfg.repeats = 6;
  cfg.test_size = 300;
  cfg.master_seed = 77;
  cfg.target.type = TargetSpec::Type::kernel_sections;
  AlgorithmSpec gf{FilterKind::gradient_flow(), {}};
  gf.tuning.rule = TuningRule::best_on_test;
  AlgorithmSpec krr{FilterKind::krr(), {}};
  krr.tuning.rule = TuningRule::holdout;
  cfg.algorithms = {gf, krr};
  return cfg;
}

std::string results_csv(const ExperimentResult& r) {
  std::ostringstream os;
  write_results_csv(os, r);
  return os.str();
}

Dataset noisy_data(const InnerProductKernel& k, int d, Eigen::Index n, double sigma, std::uint64_t seed,
                   TargetFunction* f_out = nullptr) {
  const auto anchors = sample_uniform(SphereDim(d), 3, seed + 1000);
  const auto f = TargetFunction::kernel_sections(k, anchors);
  const auto x = sample_uniform(SphereDim(d), n, seed);
  std::mt19937_64 rng(seed + 7);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd y = f(x);
  for (Eigen::Index i = 0; i < n; ++i) y(i) += sigma * g(rng);
  if (f_out) *f_out = f;
  return Dataset(x, y, sigma);
}

Json parse(const char* text) { return Json::parse(text); }

}  // namespace

TEST(Seeds, SplitMixReference) {
  // first outputs of the reference splitmix64 generator seeded with 0
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(splitmix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
}

TEST(Seeds, DeriveSeedSeparatesEverything) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m : {0ull, 1ull, 42ull})
    for (std::uint64_t d = 1; d <= 10; ++d)
      for (std::uint64_t t = 0; t < 10; ++t)
        for (std::uint64_t s = 0; s < 5; ++s) seen.insert(derive_seed(m, d, t, s));
  EXPECT_EQ(seen.size(), 3u * 10u * 10u * 5u);
  EXPECT_EQ(derive_seed(5, 6, 7, 1), derive_seed(5, 6, 7, 1));
  EXPECT_NE(derive_seed(5, 6, 7), derive_seed(5, 7, 6));
}

TEST(ParallelFor, VisitsEachIndexOnce) {
  for (int threads : {1, 3, 8, 64}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  int calls = 0;
  parallel_for(0, 4, [&](std::size_t) { ++calls; });
  EXPECT_EQ(calls, 0);
}

TEST(EvalTarget, Examples) {
  const auto rbf = InnerProductKernel::rbf();
  const auto u = sample_uniform(SphereDim(4), 1, 3);
  EXPECT_NEAR(eval_target(TargetFunction::kernel_sections(rbf, u), u)(0), 1.0, 1e-15);

  const SphereDim dim(5);
  const auto sp = funk_hecke_spectrum(rbf, dim, 2);
  const auto xi_cloud = sample_uniform(dim, 1, 4);
  const Eigen::VectorXd xi = xi_cloud.row(0).transpose();
  const auto g = TargetFunction::gegenbauer_degree(dim, 2, xi, 1.9, sp.eigenvalue(2));
  EXPECT_NEAR(g(xi_cloud)(0), std::sqrt(std::pow(sp.eigenvalue(2), 1.9) * harmonic_count(dim, 2).value), 1e-14);

  const auto zero = TargetFunction::zero(dim);
  EXPECT_TRUE(zero(sample_uniform(dim, 10, 1)).isZero(0.0));
  EXPECT_TRUE(throws_code([&] { zero(sample_uniform(SphereDim(3), 2, 1)); }, ErrorCode::dimension_mismatch));
}

TEST(EvalTarget, GegenbauerNormIdentity) {
  for (int d : {3, 8}) {
    const SphereDim dim(d);
    const auto sp = funk_hecke_spectrum(InnerProductKernel::ntk(), dim, 2);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(d + 1);
    xi(1) = 1.0;
    const auto f = TargetFunction::gegenbauer_degree(dim, 2, xi, 1.9, sp.eigenvalue(2));
    const auto [mean, se] = mean_and_stderr(f(sample_uniform(dim, 100000, 11)).array().square().matrix());
    EXPECT_NEAR(mean, std::pow(sp.eigenvalue(2), 1.9), 3.0 * se) << d;
  }
}

TEST(EvalTarget, KernelSectionsSourceNorm) {
  // <f, f>_H for f = sum_i K(u_i, .) is the summed anchor Gram; checked against
  // the spectral series sum_k e_k / mu_k
  const auto rbf = InnerProductKernel::rbf();
  const SphereDim dim(3);
  const auto anchors = sample_uniform(dim, 3, 21);
  const double gram_sum = gram_matrix(rbf, anchors).values.sum();
  const auto sp = funk_hecke_spectrum(rbf, dim, 20);
  const auto t = target_energies(TargetFunction::kernel_sections(rbf, anchors), sp, 1.0);
  double series = 0.0;
  // higher degrees sit at the quadrature noise floor
  for (int k = 0; k <= 12; ++k) series += t.energies[static_cast<std::size_t>(k)] / sp.eigenvalue(k);
  EXPECT_NEAR(series, gram_sum, 1e-8 * gram_sum);
}

TEST(Tuning, CandidateGrids) {
  AlgorithmSpec krr{FilterKind::krr(), {}};
  krr.tuning.rule = TuningRule::cross_validation;
  const auto ridge = tuning_candidates(krr, 100.0, 10);
  ASSERT_EQ(ridge.size(), 13u * 15u);
  EXPECT_DOUBLE_EQ(ridge.front().param, 0.001 * std::pow(100.0, -0.1));
  EXPECT_DOUBLE_EQ(ridge.back().param, 1000.0 * std::pow(100.0, -1.5));

  AlgorithmSpec gf{FilterKind::gradient_flow(), {}};
  const auto flow = tuning_candidates(gf, 400.0, 10);
  ASSERT_EQ(flow.size(), 7u);
  EXPECT_DOUBLE_EQ(flow[3].param, 20.0);
  EXPECT_DOUBLE_EQ(flow[3].filter.lambda(), 1.0 / 20.0);

  AlgorithmSpec fixed{FilterKind::krr(), {}};
  fixed.tuning.rule = TuningRule::fixed;
  fixed.tuning.c = 0.05;
  fixed.tuning.theta = 0.7;
  const auto one = tuning_candidates(fixed, 100.0, 16);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0].param, 0.05 * std::pow(16.0, -0.7));

  AlgorithmSpec gd{FilterKind::gradient_descent(0.5), {}};
  EXPECT_DOUBLE_EQ(tuning_candidates(gd, 100.0, 4)[2].filter.lambda(), 1.0 / (0.5 * 0.1 * 10.0));
}

TEST(Tuning, TiesGoToLargerLambda) {
  const std::vector<Candidate> cands{ridge_candidate(FilterKind::krr(), 0.1), ridge_candidate(FilterKind::krr(), 1.0),
                                     ridge_candidate(FilterKind::krr(), 0.01)};
  EXPECT_EQ(argmin_prefer_larger_lambda({2.0, 2.0 * (1 + 5e-16), 2.0}, cands), 1u);
  EXPECT_EQ(argmin_prefer_larger_lambda({2.0, 2.0 + 1e-12, 2.0}, cands), 0u);
  EXPECT_EQ(argmin_prefer_larger_lambda({3.0, 2.0, 1.0}, cands), 2u);
  // for flows larger lambda is the shorter time
  const std::vector<Candidate> times{flow_candidate(FilterKind::gradient_flow(), 10.0),
                                     flow_candidate(FilterKind::gradient_flow(), 1.0)};
  EXPECT_EQ(argmin_prefer_larger_lambda({1.0, 1.0}, times), 1u);
}

TEST(CrossValidateKrr, SinglePointAndTie) {
  const auto ntk = InnerProductKernel::ntk();
  const Dataset data = noisy_data(ntk, 4, 40, 0.5, 3);
  EXPECT_EQ(cross_validate_krr(data, ntk, {0.37}, 1), 0.37);
  // zero responses: every lambda predicts 0 and scores tie exactly
  const Dataset zeros(data.x, Eigen::VectorXd::Zero(40), 0.0);
  EXPECT_EQ(cross_validate_krr(zeros, ntk, {0.01, 0.5, 0.001}, 1), 0.5);
  EXPECT_TRUE(throws_code([&] { cross_validate_krr(Dataset(data.x.select({0, 1, 2, 3, 4}), Eigen::VectorXd::Ones(5), 0.0), ntk, {0.1, 0.2}, 1); },
                          ErrorCode::precondition));
}

TEST(CrossValidateKrr, NoiselessPrefersSmallLambda) {
  const auto ntk = InnerProductKernel::ntk();
  const Dataset data = noisy_data(ntk, 5, 120, 0.0, 8);
  const std::vector<double> grid = log_space(1e-6, 1.0, 13);
  EXPECT_LE(cross_validate_krr(data, ntk, grid, 2), grid[6]);
}

TEST(CrossValidateKrr, DeterministicInSeed) {
  const auto ntk = InnerProductKernel::ntk();
  const Dataset data = noisy_data(ntk, 5, 80, 1.0, 4);
  const std::vector<double> grid = log_space(1e-4, 1.0, 9);
  EXPECT_EQ(cross_validate_krr(data, ntk, grid, 17), cross_validate_krr(data, ntk, grid, 17));
}

TEST(CrossValidation, ScoresMatchDirectRefits) {
  const auto ntk = InnerProductKernel::ntk();
  const Dataset data = noisy_data(ntk, 4, 30, 0.3, 6);
  const std::vector<Candidate> cands{ridge_candidate(FilterKind::krr(), 0.05),
                                     flow_candidate(FilterKind::gradient_flow(), 7.0)};
  const auto scores = cross_validation_scores(data, ntk, cands, 5, 99);
  const auto order = shuffled_indices(30, 99);
  for (std::size_t c = 0; c < cands.size(); ++c) {
    double total = 0.0;
    for (int f = 0; f < 5; ++f) {
      std::vector<Eigen::Index> train, valid;
      for (Eigen::Index i = 0; i < 30; ++i) (i >= 6 * f && i < 6 * (f + 1) ? valid : train).push_back(order[static_cast<std::size_t>(i)]);
      const Dataset part(data.x.select(train), take(data.y, train), 0.3);
      const auto est = fit_spectral(ntk, cands[c].filter, part);
      total += mean_squared(predict(est, data.x.select(valid)), take(data.y, valid));
    }
    EXPECT_NEAR(scores[c], total / 5.0, 1e-10 * total);
  }
}

TEST(SelectGfTime, Examples) {
  const auto ntk = InnerProductKernel::ntk();
  TargetFunction f = TargetFunction::zero(SphereDim(5));
  const Dataset data = noisy_data(ntk, 5, 100, 0.5, 12, &f);
  EXPECT_EQ(select_gf_time(data, ntk, {3.0}, TuningRule::holdout, 1), 3.0);

  // t = 0 is the zero function; not chosen when a positive time validates better
  const std::vector<double> grid{0.0, 0.1, 1.0, 10.0, 100.0};
  const double t = select_gf_time(data, ntk, grid, TuningRule::holdout, 5);
  EXPECT_GT(t, 0.0);

  const PointCloud test = sample_uniform(SphereDim(5), 500, 13);
  const double t_oracle = select_gf_time(data, ntk, grid, TuningRule::best_on_test, 5, {&test, &f});
  auto risk = [&](double time) {
    const auto est = fit_spectral(ntk, FilterSpec::gradient_flow_time(time), data);
    return excess_risk_mc(predict(est, test), f(test)).excess_risk;
  };
  EXPECT_LE(risk(t_oracle), risk(t) * (1.0 + 1e-12));
  EXPECT_TRUE(throws_code([&] { select_gf_time(data, ntk, grid, TuningRule::best_on_test, 5); }, ErrorCode::precondition));
}

TEST(RunRateExperiment, ThreadCountDoesNotChangeOutput) {
  const ExperimentConfig cfg = small_rate_config();
  const std::string one = results_csv(run_rate_experiment(cfg, 1));
  EXPECT_EQ(one, results_csv(run_rate_experiment(cfg, 8)));
  EXPECT_EQ(one, results_csv(run_rate_experiment(cfg, 3)));
}

TEST(RunRateExperiment, SubsetsRerunIdentically) {
  ExperimentConfig cfg = small_rate_config();
  const ExperimentResult full = run_rate_experiment(cfg, 4);
  cfg.d_list = {9};
  cfg.repeats = 3;
  const ExperimentResult part = run_rate_experiment(cfg, 1);
  ASSERT_EQ(part.rows.size(), 6u);
  for (const auto& r : part.rows) {
    bool found = false;
    for (const auto& q : full.rows)
      if (q.d == r.d && q.trial == r.trial && q.algorithm == r.algorithm) {
        found = true;
        EXPECT_EQ(q.test_risk, r.test_risk);
        EXPECT_EQ(q.tuned_param, r.tuned_param);
      }
    EXPECT_TRUE(found);
  }
}

TEST(RunRateExperiment, TableAndSummaries) {
  const ExperimentConfig cfg = small_rate_config();
  const ExperimentResult r = run_rate_experiment(cfg, 4);
  EXPECT_EQ(r.rows.size(), 3u * 6u * 2u);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_FALSE(r.aborted);
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    EXPECT_LE(std::make_pair(r.rows[i - 1].d, r.rows[i - 1].trial), std::make_pair(r.rows[i].d, r.rows[i].trial));
  for (const auto& row : r.rows) {
    EXPECT_GE(row.test_risk, 0.0);
    EXPECT_EQ(row.n, cfg.sample_size(row.d));
  }
  ASSERT_EQ(r.summaries.size(), 2u);
  EXPECT_EQ(r.summaries[0].tuning_rule, "best_on_test");
  EXPECT_EQ(r.summaries[1].tuning_rule, "holdout");
  ASSERT_TRUE(r.summaries[0].slope_d.has_value());
  EXPECT_NEAR(*r.summaries[0].theory_exponent, 1.0, 1e-15);
  EXPECT_NE(std::find(r.summaries[0].warnings.begin(), r.summaries[0].warnings.end(),
                      "oracle tuning (selected on the test set)"),
            r.summaries[0].warnings.end());
  const Json j = summary_json(cfg, r);
  EXPECT_EQ(j.at("total_trials"), 18);
  EXPECT_EQ(j.at("algorithms").size(), 2u);
  EXPECT_TRUE(j.at("algorithms")[0].contains("slope_vs_n"));
}

TEST(RunRateExperiment, NoiselessLongFlowBeatsZero) {
  ExperimentConfig cfg = small_rate_config();
  cfg.sigma = 0.0;
  AlgorithmSpec longest{FilterKind::gradient_flow(), {}};
  longest.tuning.rule = TuningRule::best_on_test;
  longest.tuning.c1 = {1e6};
  AlgorithmSpec grid_max{FilterKind::gradient_flow(), {}};
  grid_max.tuning.rule = TuningRule::best_on_test;
  grid_max.tuning.c1 = {1000};
  AlgorithmSpec zero{FilterKind::gradient_flow(), {}};
  zero.tuning.rule = TuningRule::best_on_test;
  zero.tuning.c1 = {0.0};
  cfg.algorithms = {longest, grid_max, zero};
  const ExperimentResult r = run_rate_experiment(cfg, 4);
  for (std::size_t i = 0; i < r.rows.size(); i += 3) {
    EXPECT_LE(r.rows[i].test_risk, r.rows[i + 1].test_risk * (1.0 + 1e-9));
    EXPECT_LT(r.rows[i].test_risk, r.rows[i + 2].test_risk);
  }
}

TEST(RunRateExperiment, NeverWorseThanZeroEstimatorWhenGridHasIt) {
  ExperimentConfig cfg = small_rate_config();
  AlgorithmSpec tuned{FilterKind::gradient_flow(), {}};
  tuned.tuning.rule = TuningRule::best_on_test;
  tuned.tuning.c1 = {0.0, 0.001, 0.01, 0.1, 1, 10, 100, 1000};
  AlgorithmSpec zero = tuned;
  zero.tuning.c1 = {0.0};
  cfg.algorithms = {tuned, zero};
  const ExperimentResult r = run_rate_experiment(cfg, 4);
  for (std::size_t i = 0; i < r.rows.size(); i += 2) EXPECT_LE(r.rows[i].test_risk, r.rows[i + 1].test_risk);
}

TEST(RunRateExperiment, FailedTrialsAreRecordedAndAbort) {
  ExperimentConfig cfg = small_rate_config();
  cfg.kernel = "power_series";
  cfg.kernel_coeffs = {1.0};
  AlgorithmSpec gd{FilterKind::gradient_descent(5.0), {}};
  gd.tuning.rule = TuningRule::fixed;
  gd.tuning.c = 0.1;
  gd.tuning.theta = 0.0;
  cfg.algorithms = {gd};
  const ExperimentResult r = run_rate_experiment(cfg, 2);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.failures.size(), 18u);
  EXPECT_EQ(r.failures.front().error_code, "step_size");
  EXPECT_TRUE(r.aborted);
  EXPECT_EQ(r.summaries[0].per_d[0].trials, 0);
  EXPECT_FALSE(r.summaries[0].slope_d.has_value());
}

TEST(RunSaturationExperiment, SwappedThetaWarns) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::saturation;
  cfg.kernel = "rbf";
  cfg.gamma = 1.8;
  cfg.d_list = {6, 8, 10};
  cfg.repeats = 3;
  cfg.test_size = 200;
  cfg.master_seed = 3;
  cfg.target.type = TargetSpec::Type::gegenbauer;
  cfg.target.s = 1.9;
  AlgorithmSpec krr{FilterKind::krr(), {}};
  krr.tuning.rule = TuningRule::fixed;
  krr.tuning.theta = 0.5;
  AlgorithmSpec gf{FilterKind::gradient_flow(), {}};
  gf.tuning.rule = TuningRule::fixed;
  gf.tuning.theta = 0.7;
  cfg.algorithms = {krr, gf};
  const ExperimentResult r = run_saturation_experiment(cfg, 4);
  EXPECT_EQ(r.kind, ExperimentKind::saturation);
  EXPECT_TRUE(r.saturation_observed.has_value());
  ASSERT_GE(r.warnings.size(), 2u);
  EXPECT_NE(r.warnings[0].find("tuning deviates"), std::string::npos);
}

TEST(RunSaturationExperiment, NoGapWithoutSaturation) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::saturation;
  cfg.kernel = "rbf";
  cfg.gamma = 1.8;
  cfg.d_list = {8, 11, 16};
  cfg.repeats = 8;
  cfg.test_size = 500;
  cfg.master_seed = 11;
  cfg.target.type = TargetSpec::Type::gegenbauer;
  cfg.target.s = 1.0;
  AlgorithmSpec krr{FilterKind::krr(), {}};
  krr.tuning.rule = TuningRule::fixed;
  krr.tuning.theta = balanced_lambda_exponent(1.0, 1.0, 1.8).ell;
  AlgorithmSpec gf{FilterKind::gradient_flow(), {}};
  gf.tuning.rule = TuningRule::fixed;
  gf.tuning.theta = balanced_lambda_exponent(1.0, kInfinity, 1.8).ell;
  cfg.algorithms = {krr, gf};
  const ExperimentResult r = run_saturation_experiment(cfg, 4);
  ASSERT_TRUE(r.saturation_observed.has_value());
  EXPECT_FALSE(*r.saturation_observed) << "gap " << *r.saturation_slope_gap;
  EXPECT_DOUBLE_EQ(saturation_gap(1.0, 1.0, 1.8), 0.0);
}

TEST(ConfigParsing, FullDocument) {
  const ExperimentConfig cfg = parse_experiment_config(parse(R"({
    "name": "x", "kind": "saturation", "kernel": "rbf", "gamma": 1.8, "d_list": [4, 6],
    "sigma": 0.5, "repeats": 3, "test_size": 50, "master_seed": 9,
    "target": {"type": "gegenbauer", "degree": 2, "s": 1.9},
    "algorithms": [
      {"filter": "krr", "tuning": {"rule": "fixed", "c": 0.05, "theta": 0.7}},
      {"filter": "iterated_ridge", "q": 3, "tuning": {"rule": "cv", "c2": [1], "c3": [0.5]}},
      {"filter": "gradient_descent", "eta": 0.5, "tuning": {"rule": "holdout", "c1": [1, 10]}}
    ]})"));
  EXPECT_EQ(cfg.kind, ExperimentKind::saturation);
  EXPECT_EQ(cfg.algorithms.size(), 3u);
  EXPECT_EQ(cfg.algorithms[1].kind.q, 3);
  EXPECT_EQ(cfg.algorithms[1].tuning.rule, TuningRule::cross_validation);
  EXPECT_EQ(cfg.algorithms[2].kind.eta, 0.5);
  EXPECT_EQ(cfg.target.type, TargetSpec::Type::gegenbauer);
  EXPECT_EQ(cfg.master_seed, 9u);
  EXPECT_EQ(cfg.sample_size(6), std::llround(std::pow(6.0, 1.8)));
}

TEST(ConfigParsing, Rejections) {
  const char* bad[] = {
      R"({"gamma": 1, "d_list": [4], "algorithms": [{"filter": "krr"}], "extra": 1})",
      R"({"d_list": [4], "algorithms": [{"filter": "krr"}]})",
      R"({"gamma": 1, "d_list": [6, 4], "algorithms": [{"filter": "krr"}]})",
      R"({"gamma": 1, "d_list": [4], "algorithms": []})",
      R"({"gamma": 1, "d_list": [4], "algorithms": [{"filter": "landweber"}]})",
      R"({"gamma": 1, "d_list": [4], "algorithms": [{"filter": "krr", "tuning": {"rule": "fixed"}}]})",
      R"({"gamma": 1, "d_list": [4], "algorithms": [{"filter": "krr", "tuning": {"rule": "lucky"}}]})",
      R"({"gamma": 1, "d_list": [4], "algorithms": [{"filter": "krr", "tuning": {"c2": []}}]})",
      R"({"gamma": 1, "d_list": [4], "algorithms": [{"filter": "iterated_ridge"}]})",
      R"({"gamma": 2, "d_list": [100], "algorithms": [{"filter": "krr"}]})",
      R"({"gamma": 1, "d_list": [4], "repeats": 0, "algorithms": [{"filter": "krr"}]})",
      R"({"gamma": 1, "d_list": [4], "kernel": "laplace", "algorithms": [{"filter": "krr"}]})",
      R"({"gamma": 1, "d_list": [4], "target": {"type": "step"}, "algorithms": [{"filter": "krr"}]})",
      R"({"gamma": 1, "d_list": [4], "algorithms": [{"filter": "krr", "tuning": {"rule": "cv"}}]})",
  };
  for (const char* text : bad)
    EXPECT_TRUE(throws_code([&] { parse_experiment_config(parse(text)); }, ErrorCode::config)) << text;
}

TEST(ConfigParsing, SeedPresence) {
  bool has = true;
  parse_experiment_config(parse(R"({"gamma": 1, "d_list": [4], "algorithms": [{"filter": "krr"}]})"), &has);
  EXPECT_FALSE(has);
  parse_experiment_config(parse(R"({"gamma": 1, "d_list": [4], "master_seed": 1, "algorithms": [{"filter": "krr"}]})"),
                          &has);
  EXPECT_TRUE(has);
}

TEST(ConfigParsing, OracleDocument) {
  const OracleConfig cfg = parse_oracle_config(parse(R"({"s": 1.9, "gamma": 1.8, "d_list": [16, 32], "filter": "krr"})"));
  EXPECT_EQ(cfg.kind.family, FilterFamily::krr);
  const auto pts = run_oracle(cfg);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].ell, 0.7, 1e-15);
  EXPECT_TRUE(throws_code([] { parse_oracle_config(parse(R"({"s": 1, "gamma": 1})")); }, ErrorCode::config));
  EXPECT_TRUE(throws_code([] { parse_oracle_config(parse(R"({"s": 1, "gamma": 1, "d_list": [4], "tau": 2})")); },
                          ErrorCode::config));
}
