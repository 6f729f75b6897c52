// Experiment configuration and the acceptance suites. Each suite returns a
// Report plus tables and geometry for export.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "codim2/report.hpp"

namespace c2 {

struct ExperimentConfig {
  std::string experiment = "verify-all";
  // grid overrides; 0 / empty keep each suite's default
  int m = 0;
  int n = 0;
  std::vector<double> L;
  // shape overrides for the single-shape commands
  std::vector<std::array<double, 3>> points;  // {x, y, sign}
  std::string curve_file;
  double eps = 0.0;
  // schedule for `preq lift`: uniform u plus vertical a = i c
  std::vector<double> velocity;
  double vertical = 0.0;
  double dt = 0.0;
  int steps = 0;
  std::map<std::string, double> tolerances;  // by check id
  std::optional<double> tol;                 // overrides every tolerance
  std::string out_dir;
  std::uint64_t seed = 20240917;
  std::vector<double> resolutions;
  int workers = 1;
};

// JSON file with the keys above ("grid": {"m", "n", "L"}, "schedule": {"velocity", "a", "dt", "steps"})
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& j);
// throws Error on invalid values (tolerance <= 0, missing files, bad grid)
void validate(const ExperimentConfig& c);

struct Artifact {
  std::string file;  // relative to the output directory
  std::string content;
};

struct SuiteResult {
  Report report;
  std::vector<Artifact> artifacts;
  double seconds = 0.0;  // wall time; kept out of the report for determinism
};

std::vector<std::string> experiment_names();
double runtime_budget(const std::string& experiment);  // seconds

// one suite; module errors become failed records
SuiteResult run_experiment(const ExperimentConfig& c);
// all suites through a worker pool; order follows experiment_names()
std::vector<SuiteResult> run_all(const ExperimentConfig& c);
std::vector<SuiteResult> run_all(const ExperimentConfig& c, const std::vector<std::string>& names);
// writes <out>/<name>.json and the artifacts
void write_outputs(const std::string& out_dir, const SuiteResult& r);

// convergence studies: "boundary" (grid sizes), "dtheta" and "deta" (loop sizes)
Table convergence(const ExperimentConfig& c, const std::string& study, const std::vector<double>& resolutions,
                  ConvergenceFit* fit = nullptr);

nlohmann::json environment_metadata();

}  // namespace c2
