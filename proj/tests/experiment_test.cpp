#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "nlo/experiment.hpp"
#include "nlo/oracle_experiment.hpp"

using namespace nlo;
using namespace nlo::experiment;

namespace {

json base(const std::string& problem) {
  return {{"problem", problem},
          {"grid", {{"shape", "interval"}, {"bounds", {-1, 1}}, {"n", 16}}},
          {"kernel", {{"family", "fractional"}, {"alpha", 0.5}}},
          {"young", {{"family", "power"}, {"p", 2}}},
          {"seed", 3},
          {"output_dir", "unused"}};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nlo_experiment_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) { return experiment::detail::read_text(p); }

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, RejectsUnknownKeysWithTheirPath) {
  auto j = base("eigen");
  j["grid"]["colour"] = 1;
  EXPECT_EQ(error_of(j), "/grid/colour: unknown key");
  j = base("eigen");
  j["verbose"] = true;
  EXPECT_EQ(error_of(j), "/verbose: unknown key");
  j = base("battery");
  j["battery"] = {{"trials", 10}, {"seed", 2}};
  EXPECT_EQ(error_of(j), "/battery/seed: unknown key");
  j = base("eigen");
  j["kernel"]["beta"] = 1;
  EXPECT_EQ(error_of(j), "/kernel/beta: not a parameter of family \"fractional\"");
}

TEST(Config, RejectsBadValuesAndMissingKeys) {
  auto j = base("eigen");
  j.erase("young");
  EXPECT_EQ(error_of(j), "/young: missing required key");
  j = base("eigen");
  j["grid"]["n"] = 2.5;
  EXPECT_EQ(error_of(j), "/grid/n: expected an integer");
  j = base("eigen");
  j["kernel"]["alpha"] = -0.5;
  EXPECT_NE(error_of(j).find("/kernel: "), std::string::npos);
  j = base("sublinear");
  EXPECT_EQ(error_of(j), "/reaction: missing required key for problem \"sublinear\"");
  j = base("eigen");
  j["spec_version"] = "0.1";
  EXPECT_EQ(error_of(j), "/spec_version: unsupported version");
  j = base("eigen");
  j["problem"] = "heat";
  EXPECT_NE(error_of(j).find("/problem: expected"), std::string::npos);
  j = base("eigen");
  j["seed"] = -1;
  EXPECT_EQ(error_of(j), "/seed: expected a nonnegative integer");
  EXPECT_TRUE(error_of(base("eigen")).empty());
}

TEST(Config, DigestCoversNumbersButNotOutputDir) {
  auto a = parse_config(base("eigen"));
  auto j = base("eigen");
  j["output_dir"] = "elsewhere";
  EXPECT_EQ(a.digest(), parse_config(j).digest());
  j["kernel"]["alpha"] = 0.75;
  EXPECT_NE(a.digest(), parse_config(j).digest());
}

TEST(Config, LoadReportsParseErrors) {
  const fs::path dir = scratch("parse");
  fs::create_directories(dir);
  std::ofstream(dir / "broken.json") << "{\"problem\": ";
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Run, EigenReportMatchesDenseOracle) {
  auto j = base("eigen");
  j["grid"] = {{"shape", "box"}, {"bounds", {0, 1, 0, 1}}, {"n", 16}};
  j["solver"] = {{"tol", 1e-9}};
  const auto c = parse_config(j);
  const fs::path dir = scratch("eigen");
  EXPECT_EQ(run(c, dir).exit_code, 0);
  run_oracle(c, dir);
  const double solved = load(dir / "report.json")["extras"]["lambda1"];
  const double dense = load(dir / "oracle.json")["lambda1"];
  EXPECT_NEAR(solved / dense, 1.0, 1e-6);
  EXPECT_EQ(load(dir / "report.json")["spec_version"], kSpecVersion);
  EXPECT_LT(load(dir / "oracle.json")["quadrature"]["relative_difference"].get<double>(), 1e-8);
}

TEST(Run, DirichletSolutionCsvMatchesOracleCsv) {
  auto j = base("dirichlet");
  j["forcing"] = {{"kind", "random"}, {"amplitude", 1.0}};
  j["solver"] = {{"tol", 1e-11}};
  const auto c = parse_config(j);
  const fs::path dir = scratch("dirichlet");
  run(c, dir);
  run_oracle(c, dir);
  std::ifstream a(dir / "solution.csv"), b(dir / "oracle_solution.csv");
  std::string la, lb;
  std::getline(a, la);
  std::getline(b, lb);
  EXPECT_EQ(la, "x,value");
  EXPECT_EQ(la, lb);
  int rows = 0;
  while (std::getline(a, la) && std::getline(b, lb)) {
    const double ua = std::stod(la.substr(la.find(',') + 1));
    const double ub = std::stod(lb.substr(lb.find(',') + 1));
    EXPECT_NEAR(ua, ub, 1e-8);
    ++rows;
  }
  EXPECT_EQ(rows, 16);
}

TEST(Run, OracleRefusesNonQuadraticPsi) {
  auto j = base("eigen");
  j["young"]["p"] = 3;
  const fs::path dir = scratch("oracle_refuse");
  EXPECT_THROW(run_oracle(parse_config(j), dir), ConfigError);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Run, NonConvergenceExitsThreeUnlessWarnOnly) {
  auto j = base("dirichlet");
  j["solver"] = {{"max_iter", 2}};
  const fs::path dir = scratch("nonconv");
  auto o = run(parse_config(j), dir);
  EXPECT_EQ(o.exit_code, 3);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_FALSE(load(dir / "report.json")["converged"].get<bool>());
  j["solver"]["on_nonconvergence"] = "warn";
  o = run(parse_config(j), dir);
  EXPECT_EQ(o.exit_code, 0);
  ASSERT_EQ(o.warnings.size(), 1u);
}

TEST(Run, BatteryFilesAreByteIdenticalAcrossThreadCounts) {
  auto j = base("battery");
  j["grid"] = {{"shape", "box"}, {"bounds", {0, 1, 0, 1}}, {"n", 12}};
  j["battery"] = {{"trials", 12}, {"pair_samples", 500}};
  const auto c = parse_config(j);
  const fs::path a = scratch("battery_a"), b = scratch("battery_b");
  ::setenv("NLO_THREADS", "1", 1);
  run(c, a);
  ::setenv("NLO_THREADS", "3", 1);
  run(c, b);
  ::unsetenv("NLO_THREADS");
  EXPECT_EQ(slurp(a / "battery.csv"), slurp(b / "battery.csv"));
  EXPECT_EQ(slurp(a / "battery.json"), slurp(b / "battery.json"));
  EXPECT_EQ(load(a / "battery.json")["results"].size(), property_names().size());
}

TEST(Run, ReactionReportCarriesPohozaevRatio) {
  auto j = base("sublinear");
  j["reaction"] = {{"m", 1.5}};
  const fs::path dir = scratch("reaction");
  run(parse_config(j), dir);
  const auto r = load(dir / "report.json");
  // m (N - delta) / (N p) with N = 1, delta = alpha = 0.5, p = 2.
  EXPECT_NEAR(r["pohozaev"]["analytic_ratio"].get<double>(), 1.5 * 0.5 / 2.0, 1e-5);
  EXPECT_TRUE(r["conditions"]["sub1"].get<bool>());
}

TEST(Sweep, EmptyGridIsAValidationError) {
  auto j = base("sweep");
  j["sweep"] = {{"problem", "eigen"}, {"parameters", json::object()}};
  EXPECT_EQ(error_of(j), "/sweep/parameters: empty parameter grid");
  j["sweep"]["parameters"] = {{"alpha", json::array()}};
  EXPECT_EQ(error_of(j), "/sweep/parameters/alpha: empty parameter grid");
  j["sweep"]["parameters"] = {{"gamma", {1}}};
  EXPECT_EQ(error_of(j), "/sweep/parameters/gamma: unknown sweep parameter");
}

TEST(Sweep, PointsEnumerateWithLastParameterFastest) {
  auto j = base("sweep");
  j["sweep"] = {{"problem", "reaction"}, {"parameters", {{"alpha", {0.5, 0.75}}, {"m", {1.5, 3}}}}};
  const auto pts = expand_sweep(parse_config(j));
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts[1].params[0].second, 0.5);
  EXPECT_EQ(pts[1].params[1].second, 3.0);
  EXPECT_EQ(pts[2].params[0].second, 0.75);
  EXPECT_EQ(pts[2].config.kernel.alpha, 0.75);
  EXPECT_EQ(*pts[2].config.m, 1.5);
  j["kernel"] = {{"family", "log"}, {"beta", 1.0}};
  EXPECT_THROW(expand_sweep(parse_config(j)), ConfigError);
}

TEST(Sweep, ResumesByDigestAndRecordsFailuresInRow) {
  auto j = base("sweep");
  j["sweep"] = {{"problem", "reaction"}, {"parameters", {{"m", {1.5, 2.0, 3.0}}}}};
  const auto c = parse_config(j);
  const fs::path dir = scratch("sweep");
  auto first = run_sweep(c, dir);
  EXPECT_NE(first.summary.find("computed=3 skipped=0 failed=1"), std::string::npos) << first.summary;
  const std::string table = slurp(dir / "sweep.csv");
  EXPECT_NE(table.find(",error,"), std::string::npos);
  EXPECT_NE(table.find("m equals p"), std::string::npos);

  auto again = run_sweep(c, dir);
  EXPECT_NE(again.summary.find("computed=0 skipped=3"), std::string::npos) << again.summary;
  EXPECT_EQ(slurp(dir / "sweep.csv"), table);

  // Drop the last row: only that point is recomputed and the table is restored.
  std::string truncated = table.substr(0, table.rfind('\n', table.size() - 2) + 1);
  experiment::detail::write_text(dir / "sweep.csv", truncated);
  auto resumed = run_sweep(c, dir);
  EXPECT_NE(resumed.summary.find("computed=1 skipped=2"), std::string::npos) << resumed.summary;
  EXPECT_EQ(slurp(dir / "sweep.csv"), table);
}

TEST(Schema, AcceptsCurrentOutputsAndRejectsOthers) {
  auto j = base("sweep");
  j["sweep"] = {{"problem", "eigen"}, {"parameters", {{"n", {8, 12}}}}};
  const fs::path dir = scratch("schema");
  run_sweep(parse_config(j), dir / "sweep");
  auto b = base("battery");
  b["battery"] = {{"trials", 4}, {"pair_samples", 100}};
  run(parse_config(b), dir / "battery");
  auto rep = schema_check(dir);
  EXPECT_GT(rep.checked, 5);
  EXPECT_TRUE(rep.issues.empty()) << rep.issues.front().file << ": " << rep.issues.front().message;

  auto old = load(dir / "battery" / "battery.json");
  old["spec_version"] = "0.9";
  experiment::detail::write_text(dir / "old.json", old.dump());
  old.erase("spec_version");
  experiment::detail::write_text(dir / "unversioned.json", old.dump());
  experiment::detail::write_text(dir / "table.csv", "a,b\n1,2\n");
  rep = schema_check(dir);
  ASSERT_EQ(rep.issues.size(), 3u);
  EXPECT_EQ(rep.issues[0].message, "unsupported spec_version 0.9");
  EXPECT_EQ(rep.issues[1].message, "unrecognized CSV header \"a,b\"");
  EXPECT_EQ(rep.issues[2].message, "missing spec_version");
  EXPECT_THROW(schema_check(dir / "nope"), ConfigError);
}
