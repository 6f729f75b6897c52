// Runs every acceptance suite once and prints one PASS/FAIL line per criterion.
// A criterion passes when all of its checks pass within the suite's time budget.
// usage: acceptance [out_dir]
#include <cstdio>
#include <map>
#include <string>

#include "codim2/experiments.hpp"

int main(int argc, char** argv) {
  using namespace c2;
  static const std::map<std::string, const char*> title = {
      {"vertical", "vertical reproducibility of theta"},
      {"boundary", "boundary identity of the circle differential"},
      {"dtheta", "curvature of theta equals the MW form"},
      {"deta", "d eta equals omega for space curves"},
      {"holonomy", "holonomy equals swept volume"},
      {"flux", "coarea and level-set flux consistency"},
      {"binormal", "binormal flow, explicit and implicit"},
      {"zform", "zero-set presymplectic formula"},
      {"equivariance", "equivariance and invariance of theta and eta"},
  };
  try {
    ExperimentConfig cfg;
    auto results = run_all(cfg);
    int failed = 0;
    for (const auto& r : results) {
      const auto& name = r.report.name;
      int bad = 0;
      for (const auto& c : r.report.checks)
        if (!c.pass) {
          ++bad;
          std::printf("  fail %s: computed %.6g reference %.6g residual %.3g tol %.3g %s\n", c.id.c_str(), c.computed,
                      c.reference, c.residual, c.tolerance, c.note.c_str());
        }
      double budget = runtime_budget(name);
      bool in_time = r.seconds <= budget;
      bool ok = r.report.all_pass() && in_time;
      if (!ok) ++failed;
      auto it = title.find(name);
      std::printf("%s  %-13s %-48s %3zu checks, %zu failed, %7.1f s of %5.0f s%s\n", ok ? "PASS" : "FAIL",
                  name.c_str(), it == title.end() ? "" : it->second, r.report.checks.size(), std::size_t(bad),
                  r.seconds, budget, in_time ? "" : "  (over budget)");
      std::fflush(stdout);
      if (argc > 1) write_outputs(argv[1], r);
    }
    std::printf("%d of %zu criteria passed\n", int(results.size()) - failed, results.size());
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
}
