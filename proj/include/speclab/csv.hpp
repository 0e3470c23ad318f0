#pragma once

// CSV output: header row, LF line endings, doubles with 17 significant
// digits, infinity spelled `inf`.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "speclab/harness.hpp"
#include "speclab/oracle.hpp"
#include "speclab/rates.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest text that reads back to the same double.
inline std::string format_short(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Accepts `inf` / `infinity` (any case) besides ordinary numbers.
inline double parse_double(const std::string& text) {
  std::string low;
  for (char c : text) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (low == "inf" || low == "+inf" || low == "infinity") return kInfinity;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::config, "not a number: '" + text + "'");
  }
  require(used == text.size(), ErrorCode::config, "not a number: '" + text + "'");
  return v;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  CsvWriter& header(const std::vector<std::string>& cols) {
    row_strings(cols);
    return *this;
  }

  template <class... Ts>
  CsvWriter& row(const Ts&... values) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(values), first = false), ...);
    os_ << '\n';
    return *this;
  }

 private:
  void row_strings(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) os_ << (i ? "," : "") << cols[i];
    os_ << '\n';
  }

  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  template <class T>
  static std::string cell(const T& v) {
    return std::to_string(v);
  }

  std::ostream& os_;
};

inline void write_curve_csv(std::ostream& os, const std::vector<RateCurveRow>& rows) {
  CsvWriter w(os);
  w.header({"gamma", "p", "r_spectral", "r_minimax", "r_krr", "regime", "plateau"});
  for (const auto& r : rows) w.row(r.gamma, r.p, r.r_spectral, r.r_minimax, r.r_krr, r.regime, r.plateau);
}

inline void write_spectrum_csv(std::ostream& os, const SpectrumModel& spectrum) {
  CsvWriter w(os);
  w.header({"k", "mu_k", "multiplicity", "mu_k_times_mult_cumsum"});
  double cum = 0.0;
  for (const auto& g : spectrum.groups) {
    cum += g.eigenvalue * g.multiplicity;
    w.row(g.degree, g.eigenvalue, g.multiplicity, cum);
  }
}

inline void write_oracle_csv(std::ostream& os, const std::vector<OraclePoint>& points) {
  CsvWriter w(os);
  w.header({"d", "n", "lambda", "ell", "M2", "N1", "N2", "risk"});
  for (const auto& p : points) w.row(p.d, p.n, p.lambda, p.ell, p.m2, p.n1, p.n2, p.risk);
}

inline void write_results_csv(std::ostream& os, const ExperimentResult& result) {
  CsvWriter w(os);
  w.header({"d", "n", "trial", "algorithm", "tuning_rule", "tuned_param", "test_risk", "mc_stderr"});
  for (const auto& r : result.rows)
    w.row(r.d, static_cast<long long>(r.n), r.trial, r.algorithm, r.tuning_rule, r.tuned_param, r.test_risk,
          r.mc_stderr);
}

}  // namespace speclab
