#pragma once

// Command-line front end. Subcommands: rates, curve, plateau, spectrum,
// oracle, experiment, validate-filters.
// Exit codes: 0 success, 1 usage or input error, 2 experiment with more than
// 10% failed trials, 3 filter-axiom check failed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "speclab/config.hpp"
#include "speclab/csv.hpp"
#include "speclab/error.hpp"
#include "speclab/filters.hpp"
#include "speclab/harness.hpp"
#include "speclab/kernels.hpp"
#include "speclab/oracle.hpp"
#include "speclab/rates.hpp"
#include "speclab/sphere.hpp"

namespace speclab::cli {

enum ExitCode : int { ok = 0, usage = 1, partial_failure = 2, validation_failure = 3 };

struct Options {
  // rates / curve / plateau
  double s = 1.0;
  std::string tau = "inf";
  double gamma = 1.0;
  double gmin = 0.0;
  double gmax = 6.0;
  int steps = 601;
  int pmax = 3;
  // spectrum
  std::string kernel = "ntk";
  std::vector<double> coeffs;
  int d = 2;
  int max_degree = 10;
  int quad_order = 0;
  // oracle / experiment
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = default_thread_count();
  // validate-filters
  std::string family = "krr";
  int q = 1;
  double eta = 0.1;
  double kappa_sq = 1.0;
  // shared
  std::string output;
};

/// The application with every subcommand and flag registered; parsing fills `opt`.
inline std::unique_ptr<CLI::App> make_app(Options& opt) {
  auto app = std::make_unique<CLI::App>("Spectral regularization laboratory for inner-product kernels on spheres.",
                                        "speclab");
  app->require_subcommand(1, 1);
  app->set_help_all_flag("--help-all", "Print help for every subcommand");

  auto* rates = app->add_subcommand("rates", "Rate exponents, regime and saturation gap for one (s, tau, gamma)");
  rates->add_option("--s", opt.s, "Source condition s > 0")->required();
  rates->add_option("--tau", opt.tau, "Qualification tau >= 1, or inf")->required();
  rates->add_option("--gamma", opt.gamma, "Scaling exponent, n ~ d^gamma")->required();

  auto* curve = app->add_subcommand("curve", "CSV of rate exponents over an even gamma grid");
  curve->add_option("--s", opt.s, "Source condition s > 0")->required();
  curve->add_option("--tau", opt.tau, "Qualification tau >= 1, or inf")->required();
  curve->add_option("--gmin", opt.gmin, "Smallest gamma (default 0)");
  curve->add_option("--gmax", opt.gmax, "Largest gamma (default 6)");
  curve->add_option("--steps", opt.steps, "Number of grid points (default 601)");
  curve->add_option("-o,--output", opt.output, "Output CSV path (stdout when omitted)");

  auto* plateau = app->add_subcommand("plateau", "Gamma intervals on which the spectral rate is flat");
  plateau->add_option("--s", opt.s, "Source condition s > 0")->required();
  plateau->add_option("--tau", opt.tau, "Qualification tau >= 1, or inf")->required();
  plateau->add_option("--pmax", opt.pmax, "Largest phase index p (default 3)");
  plateau->add_option("-o,--output", opt.output, "Output CSV path (stdout when omitted)");

  auto* spectrum = app->add_subcommand("spectrum", "Funk-Hecke eigenvalues mu_k and multiplicities N(d,k)");
  spectrum->add_option("--kernel", opt.kernel, "Kernel: rbf, ntk or power_series")->required();
  spectrum->add_option("--coeffs", opt.coeffs, "Power-series coefficients a_0 a_1 ... (power_series only)");
  spectrum->add_option("--d", opt.d, "Sphere dimension d >= 1 (S^d in R^{d+1})")->required();
  spectrum->add_option("--K", opt.max_degree, "Largest degree K")->required();
  spectrum->add_option("--quad-order", opt.quad_order, "Gauss-Legendre order (default max(64, 4K))");
  spectrum->add_option("-o,--output", opt.output, "Output CSV path (stdout when omitted)");

  auto* oracle = app->add_subcommand("oracle", "Spectral quantities M2, N1, N2 and risk on the idealized spectrum");
  oracle->add_option("--config", opt.config, "Oracle JSON config")->required();
  oracle->add_option("-o,--output", opt.output, "Output CSV path (stdout when omitted)");

  auto* experiment = app->add_subcommand("experiment", "Run a rate or saturation experiment from a JSON config");
  experiment->add_option("--config", opt.config, "Experiment JSON config")->required();
  experiment->add_option("-o,--output", opt.output, "Output directory for results.csv and summary.json");
  experiment->add_option("--threads", opt.threads, "Worker threads (default: available parallelism)");
  experiment->add_option("--seed", opt.seed, "Master seed; overrides the config and SKL_SEED");

  auto* validate = app->add_subcommand("validate-filters", "Check the filter axioms on the default grid");
  validate->add_option("--family", opt.family, "krr, iterated_ridge, gradient_flow or gradient_descent")->required();
  validate->add_option("--q", opt.q, "Iterations q for iterated_ridge");
  validate->add_option("--eta", opt.eta, "Step size for gradient_descent (default 0.1)");
  validate->add_option("--kappa-sq", opt.kappa_sq, "Upper end kappa^2 of the z grid (default 1)");
  return app;
}

namespace detail {

/// Writes via `fn` to the file at `path`, or to `fallback` when empty.
inline void with_output(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  fn(out);
  if (!out) throw Error(ErrorCode::io, "write failed for '" + path + "'");
}

inline std::string quote(const std::string& s) { return "\"" + s + "\""; }

inline int cmd_rates(const Options& o, std::ostream& out, std::ostream& err) {
  const double tau = parse_double(o.tau);
  const RateResult r = spectral_rate_exponent(RateQuery(o.s, tau, o.gamma));
  const RateResult mm = minimax_exponent(o.s, o.gamma);
  const BalancedLambda ell = balanced_lambda_exponent(o.s, tau, o.gamma);
  out << "p=" << r.p << " exponent=" << format_short(r.exponent) << " regime=" << quote(r.regime)
      << " minimax=" << format_short(mm.exponent) << " gap=" << format_short(saturation_gap(o.s, tau, o.gamma))
      << " s_tilde=" << (r.s_tilde ? format_short(*r.s_tilde) : std::string("none"))
      << " krr=" << format_short(krr_rate_exponent(o.s, o.gamma).exponent) << " ell=" << format_short(ell.ell)
      << " log_factor=" << quote(r.log_factor_note) << '\n';
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  return ok;
}

inline int cmd_curve(const Options& o, std::ostream& out) {
  const double tau = parse_double(o.tau);
  const auto rows = rate_curve(o.s, tau, linear_grid(o.gmin, o.gmax, o.steps));
  with_output(o.output, out, [&](std::ostream& os) { write_curve_csv(os, rows); });
  return ok;
}

inline int cmd_plateau(const Options& o, std::ostream& out, std::ostream& err) {
  const PlateauList list = plateau_intervals(o.s, parse_double(o.tau), o.pmax);
  if (!list.note.empty()) err << "note: " << list.note << '\n';
  with_output(o.output, out, [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"p", "gamma_lo", "gamma_hi", "exponent"});
    for (const auto& iv : list.intervals) w.row(iv.p, iv.lo, iv.hi, iv.exponent);
  });
  return ok;
}

inline int cmd_spectrum(const Options& o, std::ostream& out, std::ostream& err) {
  const InnerProductKernel kernel = kernel_from_name(o.kernel, o.coeffs);
  FunkHeckeOptions fh;
  fh.quad_order = o.quad_order;
  const SpectrumModel sp = funk_hecke_spectrum(kernel, SphereDim(o.d), o.max_degree, fh);
  if (sp.tail_mass) err << "tail_mass: " << format_double(*sp.tail_mass) << '\n';
  with_output(o.output, out, [&](std::ostream& os) { write_spectrum_csv(os, sp); });
  return ok;
}

inline int cmd_oracle(const Options& o, std::ostream& out) {
  const auto points = run_oracle(parse_oracle_config(read_json_file(o.config)));
  with_output(o.output, out, [&](std::ostream& os) { write_oracle_csv(os, points); });
  return ok;
}

inline std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("SKL_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used == std::string(v).size()) return static_cast<std::uint64_t>(s);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::config, std::string("SKL_SEED is not an unsigned integer: '") + v + "'");
}

inline int cmd_experiment(const Options& o, std::ostream& out, std::ostream& err) {
  bool has_seed = false;
  ExperimentConfig cfg = parse_experiment_config(read_json_file(o.config), &has_seed);
  if (o.seed) {
    cfg.master_seed = *o.seed;
  } else if (!has_seed) {
    if (const auto s = env_seed()) cfg.master_seed = *s;
  }
  const std::string dir = o.output.empty() ? cfg.output : o.output;
  require(!dir.empty(), ErrorCode::config, "no output directory: pass -o or set \"output\" in the config");
  require(o.threads >= 1, ErrorCode::config, "--threads must be >= 1");
  std::filesystem::create_directories(dir);

  const ExperimentResult result = run_experiment(cfg, o.threads);
  const std::filesystem::path base(dir);
  with_output((base / "results.csv").string(), out, [&](std::ostream& os) { write_results_csv(os, result); });
  with_output((base / "summary.json").string(), out,
              [&](std::ostream& os) { os << summary_json(cfg, result).dump(2) << '\n'; });

  for (const auto& s : result.summaries) {
    out << s.algorithm << " [" << s.tuning_rule << "]";
    if (s.slope_n) out << " slope_n=" << format_double(s.slope_n->slope);
    if (s.slope_d) out << " slope_d=" << format_double(s.slope_d->slope);
    if (s.theory_exponent) out << " theory_slope_d=" << format_double(-*s.theory_exponent);
    out << '\n';
  }
  if (result.saturation_observed)
    out << "saturation_observed=" << (*result.saturation_observed ? "true" : "false") << '\n';
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  if (!result.failures.empty())
    err << "warning: " << result.failures.size() << " of " << result.total_trials << " trials failed\n";
  if (result.aborted) {
    err << "error_code: divergence: more than 10% of trials failed\n";
    return partial_failure;
  }
  return ok;
}

inline FilterKind kind_from_options(const Options& o) {
  switch (filter_family_from_name(o.family)) {
    case FilterFamily::krr: return FilterKind::krr();
    case FilterFamily::iterated_ridge:
      require(o.q >= 1, ErrorCode::config, "--q must be >= 1");
      return FilterKind::iterated_ridge(o.q);
    case FilterFamily::gradient_flow: return FilterKind::gradient_flow();
    case FilterFamily::gradient_descent:
      require(o.eta > 0.0, ErrorCode::config, "--eta must be positive");
      require(o.eta * o.kappa_sq <= 1.0, ErrorCode::step_size, "--eta must satisfy eta * kappa^2 <= 1");
      return FilterKind::gradient_descent(o.eta);
  }
  return FilterKind::krr();
}

inline void print_report(std::ostream& out, const FilterAxiomReport& r) {
  auto verdict = [](bool b) { return b ? "pass" : "FAIL"; };
  out << "family: " << r.family << '\n';
  out << "item 1 (range and monotonicity): " << verdict(r.monotonicity_ok) << '\n';
  out << "item 2 (qualification bounds): " << verdict(r.qualification_ok) << '\n';
  out << "item 3 (finite qualification): "
      << (r.finite_case_applicable ? verdict(r.finite_case_ok) : r.finite_case_note.c_str()) << '\n';
  for (int i = 1; i <= 8; ++i)
    out << "c" << i << ": " << (std::isnan(r.constants[static_cast<std::size_t>(i)]) ? std::string("n/a")
                                                                                       : format_double(r.constants[static_cast<std::size_t>(i)]))
        << '\n';
  out << "violations: " << r.violations.size() << '\n';
  for (const auto& v : r.violations)
    out << "  " << v.axiom << " lambda=" << format_double(v.lambda) << " z=" << format_double(v.z)
        << " value=" << format_double(v.value) << '\n';
  out << "result: " << (r.passed() ? "pass" : "FAIL") << '\n';
}

inline int cmd_validate(const Options& o, std::ostream& out) {
  const FilterAxiomReport report = check_filter_axioms(kind_from_options(o), default_axiom_grid(o.kappa_sq));
  print_report(out, report);
  return report.passed() ? ok : validation_failure;
}

}  // namespace detail

/// Parses and runs one invocation; errors go to `err` as "error_code: <code>: message".
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options opt;
  auto app = make_app(opt);
  try {
    app->parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app->get_subcommands();
    out << (subs.empty() ? app->help() : subs.front()->help());
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app->help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error_code: usage: " << e.what() << '\n';
    return usage;
  }
  try {
    if (app->got_subcommand("rates")) return detail::cmd_rates(opt, out, err);
    if (app->got_subcommand("curve")) return detail::cmd_curve(opt, out);
    if (app->got_subcommand("plateau")) return detail::cmd_plateau(opt, out, err);
    if (app->got_subcommand("spectrum")) return detail::cmd_spectrum(opt, out, err);
    if (app->got_subcommand("oracle")) return detail::cmd_oracle(opt, out);
    if (app->got_subcommand("experiment")) return detail::cmd_experiment(opt, out, err);
    if (app->got_subcommand("validate-filters")) return detail::cmd_validate(opt, out);
  } catch (const Error& e) {
    err << "error_code: " << to_string(e.code()) << ": " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error_code: io: " << e.what() << '\n';
    return usage;
  }
  err << "error_code: usage: no subcommand\n";
  return usage;
}

}  // namespace speclab::cli
