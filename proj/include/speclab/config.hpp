#pragma once

// JSON experiment and oracle configurations (unknown keys are rejected) and
// the JSON summary written next to the result CSV.

#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "speclab/error.hpp"
#include "speclab/filters.hpp"
#include "speclab/harness.hpp"
#include "speclab/oracle.hpp"

namespace speclab {

using Json = nlohmann::json;

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  require(obj.is_object(), ErrorCode::config, where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw Error(ErrorCode::config, "unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get_or(const Json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::config, std::string("bad value for '") + key + "': " + e.what());
  }
}

inline double get_number(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return kInfinity;
    throw Error(ErrorCode::config, std::string("'") + key + "' must be a number or \"inf\"");
  }
  require(v.is_number(), ErrorCode::config, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

inline FilterKind parse_filter_kind(const Json& obj, const std::string& name) {
  switch (filter_family_from_name(name)) {
    case FilterFamily::krr: return FilterKind::krr();
    case FilterFamily::iterated_ridge: {
      const int q = get_or<int>(obj, "q", 0);
      require(q >= 1, ErrorCode::config, "iterated_ridge needs \"q\" >= 1");
      return FilterKind::iterated_ridge(q);
    }
    case FilterFamily::gradient_flow: return FilterKind::gradient_flow();
    case FilterFamily::gradient_descent: {
      const double eta = get_number(obj, "eta", 0.0);
      require(eta > 0.0, ErrorCode::config, "gradient_descent needs \"eta\" > 0");
      return FilterKind::gradient_descent(eta);
    }
  }
  throw Error(ErrorCode::config, "unknown filter '" + name + "'");
}

inline TuningSpec parse_tuning(const Json& obj) {
  check_keys(obj, {"rule", "c", "theta", "c1", "time_exponent", "c2", "c3", "folds", "holdout_fraction"}, "tuning");
  TuningSpec t;
  t.rule = tuning_rule_from_name(get_or<std::string>(obj, "rule", "best_on_test"));
  t.c = get_number(obj, "c", t.c);
  t.theta = get_number(obj, "theta", t.theta);
  t.c1 = get_or<std::vector<double>>(obj, "c1", t.c1);
  t.time_exponent = get_number(obj, "time_exponent", t.time_exponent);
  t.c2 = get_or<std::vector<double>>(obj, "c2", t.c2);
  t.c3 = get_or<std::vector<double>>(obj, "c3", t.c3);
  t.folds = get_or<int>(obj, "folds", t.folds);
  t.holdout_fraction = get_number(obj, "holdout_fraction", t.holdout_fraction);
  if (t.rule == TuningRule::fixed)
    require(obj.contains("theta"), ErrorCode::config, "fixed tuning needs \"theta\" (lambda = c d^-theta)");
  return t;
}

inline TargetSpec parse_target(const Json& obj) {
  check_keys(obj, {"type", "anchors", "degree", "s", "convention"}, "target");
  TargetSpec t;
  const std::string type = get_or<std::string>(obj, "type", "kernel_sections");
  if (type == "kernel_sections") {
    t.type = TargetSpec::Type::kernel_sections;
  } else if (type == "gegenbauer") {
    t.type = TargetSpec::Type::gegenbauer;
  } else if (type == "zero") {
    t.type = TargetSpec::Type::zero;
  } else {
    throw Error(ErrorCode::config, "unknown target type '" + type + "' (kernel_sections, gegenbauer, zero)");
  }
  t.anchors = get_or<int>(obj, "anchors", t.anchors);
  t.degree = get_or<int>(obj, "degree", t.degree);
  t.s = get_number(obj, "s", t.s);
  const std::string conv = get_or<std::string>(obj, "convention", "ambient");
  if (conv == "ambient") {
    t.convention = GegenbauerConvention::ambient;
  } else if (conv == "intrinsic") {
    t.convention = GegenbauerConvention::intrinsic;
  } else {
    throw Error(ErrorCode::config, "unknown convention '" + conv + "' (ambient, intrinsic)");
  }
  return t;
}

}  // namespace detail

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::config, "invalid JSON in '" + path + "': " + e.what());
  }
}

/// Parses an experiment document. master_seed may be omitted and supplied
/// later (command-line flag or SKL_SEED).
inline ExperimentConfig parse_experiment_config(const Json& doc, bool* has_seed = nullptr) {
  using detail::get_or;
  detail::check_keys(doc,
                     {"name", "kind", "kernel", "coeffs", "algorithms", "gamma", "d_list", "n_scale", "n_max", "sigma",
                      "repeats", "test_size", "master_seed", "target", "saturation_margin", "output"},
                     "experiment config");
  ExperimentConfig cfg;
  cfg.name = get_or<std::string>(doc, "name", cfg.name);
  const std::string kind = get_or<std::string>(doc, "kind", "rate");
  if (kind == "rate") {
    cfg.kind = ExperimentKind::rate;
  } else if (kind == "saturation") {
    cfg.kind = ExperimentKind::saturation;
  } else {
    throw Error(ErrorCode::config, "unknown experiment kind '" + kind + "' (rate, saturation)");
  }
  cfg.kernel = get_or<std::string>(doc, "kernel", cfg.kernel);
  cfg.kernel_coeffs = get_or<std::vector<double>>(doc, "coeffs", {});
  kernel_from_name(cfg.kernel, cfg.kernel_coeffs);  // validates the name early
  require(doc.contains("algorithms") && doc.at("algorithms").is_array(), ErrorCode::config,
          "\"algorithms\" must be a list");
  for (const auto& a : doc.at("algorithms")) {
    detail::check_keys(a, {"filter", "q", "eta", "tuning"}, "algorithm");
    require(a.contains("filter"), ErrorCode::config, "algorithm needs \"filter\"");
    AlgorithmSpec spec{detail::parse_filter_kind(a, get_or<std::string>(a, "filter", "")), {}};
    if (a.contains("tuning")) spec.tuning = detail::parse_tuning(a.at("tuning"));
    cfg.algorithms.push_back(spec);
  }
  require(doc.contains("gamma"), ErrorCode::config, "\"gamma\" is required");
  cfg.gamma = detail::get_number(doc, "gamma", cfg.gamma);
  require(doc.contains("d_list"), ErrorCode::config, "\"d_list\" is required");
  cfg.d_list = get_or<std::vector<int>>(doc, "d_list", {});
  cfg.n_scale = detail::get_number(doc, "n_scale", cfg.n_scale);
  cfg.n_max = get_or<long long>(doc, "n_max", cfg.n_max);
  cfg.sigma = detail::get_number(doc, "sigma", cfg.sigma);
  cfg.repeats = get_or<int>(doc, "repeats", cfg.repeats);
  cfg.test_size = get_or<int>(doc, "test_size", cfg.test_size);
  if (has_seed) *has_seed = doc.contains("master_seed");
  cfg.master_seed = get_or<std::uint64_t>(doc, "master_seed", 0);
  if (doc.contains("target")) cfg.target = detail::parse_target(doc.at("target"));
  cfg.saturation_margin = detail::get_number(doc, "saturation_margin", cfg.saturation_margin);
  cfg.output = get_or<std::string>(doc, "output", "");
  cfg.validate();
  return cfg;
}

struct OracleConfig {
  double s = 1.0;
  double gamma = 1.0;
  std::vector<double> d_list;
  FilterKind kind = FilterKind::gradient_flow();
  double sigma = 1.0;
  std::optional<double> ell;  // balanced exponent when absent
};

inline OracleConfig parse_oracle_config(const Json& doc) {
  using detail::get_or;
  detail::check_keys(doc, {"s", "gamma", "d_list", "filter", "q", "eta", "sigma", "ell"}, "oracle config");
  OracleConfig cfg;
  require(doc.contains("s") && doc.contains("gamma") && doc.contains("d_list"), ErrorCode::config,
          "oracle config needs \"s\", \"gamma\" and \"d_list\"");
  cfg.s = detail::get_number(doc, "s", cfg.s);
  cfg.gamma = detail::get_number(doc, "gamma", cfg.gamma);
  cfg.d_list = get_or<std::vector<double>>(doc, "d_list", {});
  require(!cfg.d_list.empty(), ErrorCode::config, "d_list must not be empty");
  cfg.kind = detail::parse_filter_kind(doc, get_or<std::string>(doc, "filter", "gradient_flow"));
  cfg.sigma = detail::get_number(doc, "sigma", cfg.sigma);
  if (doc.contains("ell")) cfg.ell = detail::get_number(doc, "ell", 0.0);
  RateQuery(cfg.s, cfg.kind.qualification(), cfg.gamma).validate();
  return cfg;
}

inline std::vector<OraclePoint> run_oracle(const OracleConfig& cfg) {
  const double ell = cfg.ell ? *cfg.ell : balanced_lambda_exponent(cfg.s, cfg.kind.qualification(), cfg.gamma).ell;
  std::vector<OraclePoint> out;
  for (double d : cfg.d_list) out.push_back(oracle_point(cfg.s, cfg.gamma, d, cfg.kind, ell, cfg.sigma));
  return out;
}

// ---------------------------------------------------------------------------

namespace detail {

inline Json fit_json(const std::optional<LogLogFit>& fit) {
  if (!fit) return nullptr;
  return Json{{"slope", fit->slope}, {"intercept", fit->intercept}, {"stderr", fit->stderr_slope}, {"points", fit->used}};
}

inline Json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace detail

inline Json summary_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
  Json algs = Json::array();
  for (const auto& s : r.summaries) {
    Json per_d = Json::array();
    for (const auto& ds : s.per_d)
      per_d.push_back({{"d", ds.d}, {"n", ds.n}, {"mean_risk", ds.mean_risk}, {"stderr", ds.stderr_risk},
                       {"trials", ds.trials}});
    Json a{{"algorithm", s.algorithm},
           {"tuning_rule", s.tuning_rule},
           {"qualification", detail::number_or_inf(s.qualification)},
           {"per_d", per_d},
           {"slope_vs_n", detail::fit_json(s.slope_n)},
           {"slope_vs_d", detail::fit_json(s.slope_d)},
           {"warnings", s.warnings}};
    if (s.theory_exponent) {
      a["theory_exponent_d"] = *s.theory_exponent;
      a["theory_slope_d"] = -*s.theory_exponent;
      a["theory_slope_n"] = -*s.theory_exponent / cfg.gamma;
    }
    algs.push_back(a);
  }
  Json failures = Json::array();
  for (const auto& f : r.failures)
    failures.push_back({{"d", f.d}, {"trial", f.trial}, {"error_code", f.error_code}, {"message", f.message}});
  Json out{{"name", r.name},
           {"kind", r.kind == ExperimentKind::saturation ? "saturation" : "rate"},
           {"kernel", cfg.kernel},
           {"gamma", cfg.gamma},
           {"master_seed", cfg.master_seed},
           {"repeats", cfg.repeats},
           {"total_trials", r.total_trials},
           {"failed_trials", r.failures.size()},
           {"aborted", r.aborted},
           {"algorithms", algs},
           {"failures", failures},
           {"warnings", r.warnings}};
  if (r.saturation_observed) out["saturation_observed"] = *r.saturation_observed;
  if (r.saturation_slope_gap) out["slope_gap_d"] = *r.saturation_slope_gap;
  return out;
}

}  // namespace speclab
