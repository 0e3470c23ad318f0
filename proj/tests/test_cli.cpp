#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "speclab/cli.hpp"
#include "speclab/config.hpp"
#include "speclab/csv.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace speclab;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("speclab_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the installed binary through the shell; `env` is prefixed verbatim.
CliRun run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path dir = scratch("run" + std::to_string(counter++));
  const std::string cmd = env + " " + SPECLAB_CLI_PATH + " " + args + " > " + (dir / "out").string() + " 2> " +
                          (dir / "err").string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(dir / "out");
  r.err = slurp(dir / "err");
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double field(const std::string& line, const std::string& key) {
  const auto pos = line.find(key + "=");
  EXPECT_NE(pos, std::string::npos) << key;
  return std::stod(line.substr(pos + key.size() + 1));
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << body;
  return p;
}

const char* kSmallExperiment = R"({
  "name": "cli_small", "kernel": "ntk", "gamma": 1.0, "d_list": [10, 14, 20],
  "repeats": 4, "test_size": 200, "target": {"type": "kernel_sections", "anchors": 3},
  "algorithms": [{"filter": "gradient_flow", "tuning": {"rule": "best_on_test"}},
                 {"filter": "krr", "tuning": {"rule": "cv", "c2": [0.01, 1], "c3": [0.5, 1.0]}}]
})";

}  // namespace

TEST(CliHelp, EveryFlagIsDocumented) {
  cli::Options opt;
  auto app = cli::make_app(opt);
  const auto subs = app->get_subcommands([](CLI::App*) { return true; });
  ASSERT_EQ(subs.size(), 7u);
  for (CLI::App* sub : subs) {
    const CliRun r = run_cli(sub->get_name() + " --help");
    EXPECT_EQ(r.code, 0) << sub->get_name();
    for (const CLI::Option* o : sub->get_options()) {
      EXPECT_FALSE(o->get_description().empty()) << sub->get_name() << " " << o->get_name();
      for (const auto& l : o->get_lnames())
        EXPECT_NE(r.out.find("--" + l), std::string::npos) << sub->get_name() << " --" << l;
      for (const auto& s : o->get_snames())
        EXPECT_NE(r.out.find("-" + s + ","), std::string::npos) << sub->get_name() << " -" << s;
      EXPECT_NE(r.out.find(o->get_description()), std::string::npos) << sub->get_name() << " " << o->get_name();
    }
  }
  const CliRun all = run_cli("--help-all");
  EXPECT_EQ(all.code, 0);
  for (CLI::App* sub : subs) EXPECT_NE(all.out.find(sub->get_name()), std::string::npos);
}

TEST(CliRates, Example) {
  const CliRun r = run_cli("rates --s 1.9 --tau 1 --gamma 1.8");
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(lines(r.out).size(), 1u);
  EXPECT_EQ(field(r.out, "p"), 0.0);
  EXPECT_NEAR(field(r.out, "exponent"), 1.4, 1e-12);
  EXPECT_NE(r.out.find("regime=\"middle branch\""), std::string::npos);
  EXPECT_NEAR(field(r.out, "minimax"), 1.8, 1e-12);
  EXPECT_NEAR(field(r.out, "gap"), 0.4, 1e-12);
  EXPECT_EQ(run_cli("rates --s 1 --tau inf --gamma 1.5").code, 0);
}

TEST(CliCurve, PlateausForFigureOneB) {
  const fs::path dir = scratch("curve");
  const CliRun r = run_cli("curve --s 1 --tau 2 --gmin 0 --gmax 6 --steps 601 -o " + (dir / "c.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir / "c.csv"));
  ASSERT_EQ(rows.size(), 602u);
  EXPECT_EQ(rows[0], "gamma,p,r_spectral,r_minimax,r_krr,regime,plateau");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = split(rows[i], ',');
    ASSERT_EQ(cells.size(), 7u);
    const double gamma = std::stod(cells[0]), r_spec = std::stod(cells[2]);
    EXPECT_EQ(gamma, std::stod(format_double(gamma)));
    for (int p = 0; p <= 2; ++p)
      if (gamma >= 2 * p + 1 && gamma < 2 * p + 2) EXPECT_NEAR(r_spec, p + 1.0, 1e-12) << gamma;
  }
  EXPECT_EQ(rows[1].find("\r"), std::string::npos);
}

TEST(CliPlateauAndSpectrum, Csv) {
  const CliRun p = run_cli("plateau --s 1 --tau inf --pmax 2");
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(lines(p.out)[0], "p,gamma_lo,gamma_hi,exponent");
  EXPECT_EQ(lines(p.out).size(), 4u);

  const CliRun s = run_cli("spectrum --kernel rbf --d 3 --K 4");
  ASSERT_EQ(s.code, 0) << s.err;
  const auto rows = lines(s.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "k,mu_k,multiplicity,mu_k_times_mult_cumsum");
  EXPECT_EQ(split(rows[2], ',')[2], "4");
  EXPECT_NE(s.err.find("tail_mass"), std::string::npos);

  const CliRun ps = run_cli("spectrum --kernel power_series --coeffs 0.5 0.5 --d 2 --K 3");
  ASSERT_EQ(ps.code, 0) << ps.err;
  EXPECT_EQ(run_cli("spectrum --kernel power_series --coeffs -1 --d 2 --K 3").code, 1);
}

TEST(CliOracle, DemoConfig) {
  const CliRun r = run_cli(std::string("oracle --config ") + SPECLAB_DEMO_CONFIGS + "/oracle_gf.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "d,n,lambda,ell,M2,N1,N2,risk");
}

TEST(CliValidateFilters, Reports) {
  const CliRun krr = run_cli("validate-filters --family krr");
  EXPECT_EQ(krr.code, 0);
  EXPECT_NE(krr.out.find("result: pass"), std::string::npos);
  EXPECT_NE(krr.out.find("violations: 0"), std::string::npos);
  EXPECT_EQ(run_cli("validate-filters --family iterated_ridge --q 3").code, 0);
  const CliRun gd = run_cli("validate-filters --family gradient_descent --eta 0.1");
  EXPECT_EQ(gd.code, 0);
  EXPECT_NE(gd.out.find("not applicable, tau=inf"), std::string::npos);
  const CliRun bad_eta = run_cli("validate-filters --family gradient_descent --eta 2");
  EXPECT_EQ(bad_eta.code, 1);
  EXPECT_EQ(bad_eta.err.rfind("error_code: step_size", 0), 0u) << bad_eta.err;
}

TEST(CliErrors, UsageExitCodes) {
  for (const std::string args : {"", "bogus", "rates --s 1 --tau 1", "rates --s 1 --tau 1 --gamma 1 --zzz",
                                 "rates --s x --tau 1 --gamma 1", "rates curve"}) {
    const CliRun r = run_cli(args);
    EXPECT_EQ(r.code, 1) << args;
    EXPECT_EQ(r.err.rfind("error_code: ", 0), 0u) << args << ": " << r.err;
  }
  const CliRun dom = run_cli("rates --s -1 --tau 1 --gamma 1");
  EXPECT_EQ(dom.code, 1);
  EXPECT_EQ(dom.err.rfind("error_code: domain", 0), 0u) << dom.err;
  const CliRun missing = run_cli("oracle --config /nonexistent/x.json");
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(missing.err.rfind("error_code: io", 0), 0u) << missing.err;
  const fs::path dir = scratch("badcfg");
  const CliRun bad = run_cli("experiment --config " + write_config(dir, R"({"gamma": 1, "oops": 2})").string() + " -o " +
                          (dir / "out").string());
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.err.rfind("error_code: config", 0), 0u) << bad.err;
}

TEST(CliExperiment, ByteIdenticalAcrossRunsAndThreads) {
  const fs::path dir = scratch("ident");
  const fs::path cfg = write_config(dir, kSmallExperiment);
  const CliRun a = run_cli("experiment --config " + cfg.string() + " --seed 5 --threads 1 -o " + (dir / "a").string());
  const CliRun b = run_cli("experiment --config " + cfg.string() + " --seed 5 --threads 8 -o " + (dir / "b").string());
  const CliRun c = run_cli("experiment --config " + cfg.string() + " --seed 5 --threads 8 -o " + (dir / "c").string());
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string csv = slurp(dir / "a" / "results.csv");
  EXPECT_EQ(csv, slurp(dir / "b" / "results.csv"));
  EXPECT_EQ(csv, slurp(dir / "c" / "results.csv"));
  EXPECT_EQ(slurp(dir / "a" / "summary.json"), slurp(dir / "b" / "summary.json"));
  EXPECT_EQ(a.out, b.out);
  const auto rows = lines(csv);
  ASSERT_EQ(rows.size(), 1u + 3u * 4u * 2u);
  EXPECT_EQ(rows[0], "d,n,trial,algorithm,tuning_rule,tuned_param,test_risk,mc_stderr");
  const Json summary = Json::parse(slurp(dir / "a" / "summary.json"));
  EXPECT_EQ(summary.at("master_seed"), 5);
  EXPECT_EQ(summary.at("aborted"), false);
}

TEST(CliExperiment, SeedFallbackOrder) {
  const fs::path dir = scratch("seed");
  const fs::path cfg = write_config(dir, kSmallExperiment);
  const std::string base = "experiment --threads 2 --config " + cfg.string() + " -o ";
  ASSERT_EQ(run_cli(base + (dir / "flag").string() + " --seed 5").code, 0);
  ASSERT_EQ(run_cli(base + (dir / "env").string(), "SKL_SEED=5").code, 0);
  ASSERT_EQ(run_cli(base + (dir / "other").string(), "SKL_SEED=6").code, 0);
  ASSERT_EQ(run_cli(base + (dir / "both").string() + " --seed 5", "SKL_SEED=6").code, 0);
  const std::string ref = slurp(dir / "flag" / "results.csv");
  EXPECT_EQ(ref, slurp(dir / "env" / "results.csv"));
  EXPECT_EQ(ref, slurp(dir / "both" / "results.csv"));
  EXPECT_NE(ref, slurp(dir / "other" / "results.csv"));

  // a seed in the config wins over the environment
  std::string with_seed = kSmallExperiment;
  with_seed.replace(with_seed.find("\"name\""), 0, "\"master_seed\": 5, ");
  const fs::path cfg2 = dir / "seeded.json";
  std::ofstream(cfg2) << with_seed;
  ASSERT_EQ(run_cli("experiment --threads 2 --config " + cfg2.string() + " -o " + (dir / "cfg").string(), "SKL_SEED=6")
                .code,
            0);
  EXPECT_EQ(ref, slurp(dir / "cfg" / "results.csv"));

  const CliRun bad = run_cli(base + (dir / "bad").string(), "SKL_SEED=abc");
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.err.rfind("error_code: config", 0), 0u) << bad.err;
}

TEST(CliExperiment, MostTrialsFailingExitsTwo) {
  const fs::path dir = scratch("fail");
  const fs::path cfg = write_config(dir, R"({
    "kernel": "power_series", "coeffs": [1.0], "gamma": 1.0, "d_list": [5, 8, 12], "repeats": 3,
    "test_size": 50, "master_seed": 1,
    "algorithms": [{"filter": "gradient_descent", "eta": 5, "tuning": {"rule": "fixed", "c": 0.1, "theta": 0}}]
  })");
  const CliRun r = run_cli("experiment --config " + cfg.string() + " -o " + (dir / "out").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error_code: divergence"), std::string::npos) << r.err;
  const Json summary = Json::parse(slurp(dir / "out" / "summary.json"));
  EXPECT_EQ(summary.at("failed_trials"), 9);
  EXPECT_EQ(summary.at("failures")[0].at("error_code"), "step_size");
}

TEST(CliExperiment, DemoConfigsParse) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(SPECLAB_DEMO_CONFIGS)) {
    const Json doc = read_json_file(entry.path().string());
    if (entry.path().filename().string().rfind("oracle", 0) == 0) {
      EXPECT_NO_THROW(parse_oracle_config(doc)) << entry.path();
    } else {
      EXPECT_NO_THROW(parse_experiment_config(doc)) << entry.path();
    }
    ++count;
  }
  EXPECT_GE(count, 5);
}
