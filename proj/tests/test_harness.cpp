#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "codim2/experiments.hpp"
#include "codim2/torus_fields.hpp"

using namespace c2;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string dump(const std::vector<SuiteResult>& rs) {
  std::string s;
  for (const auto& r : rs) s += r.report.to_json().dump(2);
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing and validation") {
  auto c = config_from_json(json::parse(R"({
    "experiment": "deta", "grid": {"m": 2, "n": 64}, "eps": 0.04, "seed": 7,
    "tolerances": {"deta-loop": 1e-3}, "workers": 2, "out": "o"
  })"));
  CHECK(c.experiment == "deta");
  CHECK(c.n == 64);
  CHECK(c.eps == 0.04);
  CHECK(c.seed == 7);
  CHECK(c.tolerances.at("deta-loop") == 1e-3);
  CHECK(c.workers == 2);
  CHECK_NOTHROW(validate(c));
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"bogus": 1})")), Error);
  CHECK_THROWS_AS(config_from_json(json::parse("[1, 2]")), Error);

  ExperimentConfig z;
  z.tol = 0.0;
  CHECK_THROWS_AS(validate(z), Error);
  ExperimentConfig t;
  t.tolerances["x"] = -1.0;
  CHECK_THROWS_AS(validate(t), Error);
  ExperimentConfig g;
  g.n = 4;
  CHECK_THROWS_AS(validate(g), Error);
  ExperimentConfig f;
  f.curve_file = "/nonexistent/curve.json";
  CHECK_THROWS_AS(validate(f), Error);
  ExperimentConfig w;
  w.workers = 0;
  CHECK_THROWS_AS(validate(w), Error);
}

TEST_CASE("config files load") {
  auto p = fs::temp_directory_path() / "codim2_cfg.json";
  {
    std::ofstream os(p);
    os << R"({"experiment": "zform", "tol": 0.5})";
  }
  auto c = load_config(p.string());
  CHECK(c.experiment == "zform");
  REQUIRE(c.tol.has_value());
  CHECK(*c.tol == 0.5);
  fs::remove(p);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), Error);
}

TEST_CASE("unknown experiment is an error") {
  ExperimentConfig c;
  c.experiment = "nope";
  CHECK_THROWS_AS(run_experiment(c), Error);
  CHECK_THROWS_AS(runtime_budget("nope"), Error);
  CHECK_THROWS_AS(run_all(c, {"deta", "nope"}), Error);
}

TEST_CASE("registry lists nine suites with budgets") {
  auto names = experiment_names();
  CHECK(names.size() == 9);
  for (const auto& n : names) CHECK(runtime_budget(n) > 0);
}

TEST_CASE("check records") {
  auto r = check_relative("a", "x", 1.01, 1.0, 0.02);
  CHECK(r.pass);
  CHECK(r.residual == doctest::Approx(0.01));
  CHECK_FALSE(check_relative("a", "x", 1.05, 1.0, 0.02).pass);
  CHECK(check_relative("a", "x", 1e-9, 0.0, 1e-6, 1.0).pass);
  CHECK(check_absolute("b", "x", 0.5, 0.4, 0.2).pass);
  auto f = failed_record("c", "x", "boom");
  CHECK_FALSE(f.pass);
  CHECK(f.note == "boom");
  Report rep;
  CHECK_FALSE(rep.all_pass());
  rep.add(r);
  CHECK(rep.all_pass());
  rep.add(f);
  CHECK_FALSE(rep.all_pass());
  auto j = rep.to_json();
  CHECK(j["checks"].size() == 2);
}

TEST_CASE("fitted order on synthetic data") {
  std::vector<double> h{0.1, 0.05, 0.025, 0.0125}, e;
  for (double x : h) e.push_back(3.0 * x * x);
  auto fit = fit_order(h, e);
  CHECK(fit.order == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::exp(fit.log_constant) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK_THROWS_AS(fit_order({0.1}, {1.0}), Error);
  CHECK_THROWS_AS(fit_order({0.1, 0.05, 0.2}, {1, 2, 3}), Error);
}

TEST_CASE("csv tables") {
  Table t{{"h", "residual"}, {{0.5, 1e-3}, {0.25, 2.5e-4}}};
  auto s = csv_string(t);
  CHECK(s.rfind("h,residual\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}

TEST_CASE("convergence studies") {
  ExperimentConfig c;
  ConvergenceFit fit;
  auto t = convergence(c, "deta", {1e-2, 5e-3, 2.5e-3}, &fit);
  CHECK(t.rows.size() == 3);
  CHECK(fit.order >= 1.8);
  CHECK_THROWS_AS(convergence(c, "deta", {1e-2}), Error);
  CHECK_THROWS_AS(convergence(c, "deta", {1e-2, 2.5e-3, 5e-3}), Error);
  CHECK_THROWS_AS(convergence(c, "nope", {1e-2, 5e-3, 2.5e-3}), Error);
}

TEST_CASE("reports are deterministic across runs and worker counts") {
  ExperimentConfig c;
  std::vector<std::string> subset{"vertical", "deta", "zform", "flux"};
  c.workers = 1;
  auto a = run_all(c, subset);
  c.workers = 4;
  auto b = run_all(c, subset);
  auto again = run_all(c, subset);
  CHECK(dump(a) == dump(b));
  CHECK(dump(b) == dump(again));
  REQUIRE(a.size() == subset.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].report.name == subset[i]);
    for (const auto& r : a[i].report.checks) CHECK_FALSE(r.anchor.empty());
  }
}

TEST_CASE("outputs are written per suite") {
  ExperimentConfig c;
  c.experiment = "deta";
  auto r = run_experiment(c);
  CHECK(r.report.all_pass());
  auto dir = fs::temp_directory_path() / "codim2_out";
  fs::remove_all(dir);
  write_outputs(dir.string(), r);
  CHECK(fs::exists(dir / "deta.json"));
  auto j = json::parse(slurp(dir / "deta.json"));
  CHECK(j["name"] == "deta");
  for (const auto& a : r.artifacts) CHECK(slurp(dir / a.file) == a.content);
  fs::remove_all(dir);
}
