// codim2: verification suites, convergence studies and shape/field utilities.
// Exit codes: 0 pass, 1 check failure or module error, 2 usage/config error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "codim2/experiments.hpp"
#include "codim2/prequantum.hpp"

using namespace c2;

namespace {

struct ConfigError : Error {
  using Error::Error;
};

struct Flags {
  std::string config, grid, out, in, dot, curve, points, velocity, res;
  double eps = 0, dt = 0, tol = 0, vertical = 0;
  std::uint64_t seed = 0;
  int steps = 0, workers = 0;
  bool seed_set = false, tol_set = false, verbose = false;
};

std::vector<double> parse_list(const std::string& s, char sep = ',') {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("not a number: " + tok);
    }
  }
  return out;
}

// config file first, flags win
ExperimentConfig make_config(const Flags& f) {
  ExperimentConfig c;
  try {
    if (!f.config.empty()) c = load_config(f.config);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!f.grid.empty()) {
    auto n = parse_list(f.grid, 'x');
    if (n.empty() || n.size() > 3) throw ConfigError("--grid takes n, or n x n [x n]");
    c.n = int(n[0]);
    if (n.size() > 1) c.m = int(n.size());
  }
  if (f.eps > 0) c.eps = f.eps;
  if (f.dt > 0) c.dt = f.dt;
  if (f.steps > 0) c.steps = f.steps;
  if (f.seed_set) c.seed = f.seed;
  if (f.workers > 0) c.workers = f.workers;
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.curve.empty()) c.curve_file = f.curve;
  if (!f.velocity.empty()) c.velocity = parse_list(f.velocity);
  if (f.vertical != 0) c.vertical = f.vertical;
  if (!f.points.empty()) {
    c.points.clear();
    std::stringstream ss(f.points);
    std::string p;
    while (std::getline(ss, p, ';')) {
      auto v = parse_list(p);
      if (v.size() != 3) throw ConfigError("--points takes x,y,sign;x,y,sign;...");
      c.points.push_back({v[0], v[1], v[2]});
    }
  }
  if (!f.res.empty()) c.resolutions = parse_list(f.res);
  if (f.tol_set) c.tol = f.tol;
  try {
    validate(c);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void print_report(const SuiteResult& r, bool verbose) {
  int fails = 0;
  for (auto& k : r.report.checks) {
    if (k.pass) continue;
    ++fails;
  }
  for (auto& k : r.report.checks)
    if (!k.pass || verbose)
      std::printf("  %s %-44s computed %.9g reference %.9g residual %.3g tol %.3g%s%s\n", k.pass ? "ok  " : "FAIL",
                  k.id.c_str(), k.computed, k.reference, k.residual, k.tolerance, k.note.empty() ? "" : "  ",
                  k.note.c_str());
  double budget = runtime_budget(r.report.name);
  std::printf("%s %-13s %zu/%zu checks  %.1f s (budget %.0f s)\n", r.report.all_pass() ? "PASS" : "FAIL",
              r.report.name.c_str(), r.report.checks.size() - fails, r.report.checks.size(), r.seconds, budget);
}

int run_suites(const ExperimentConfig& c, const std::vector<std::string>& names, bool verbose) {
  std::vector<SuiteResult> results;
  if (names.empty() || (names.size() == 1 && (names[0] == "all" || names[0] == "verify-all"))) {
    results = run_all(c);
  } else {
    for (auto& n : names) {
      ExperimentConfig ci = c;
      ci.experiment = n;
      try {
        runtime_budget(n);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      results.push_back(run_experiment(ci));
    }
  }
  bool ok = true;
  for (auto& r : results) {
    print_report(r, verbose);
    if (!c.out_dir.empty()) write_outputs(c.out_dir, r);
    ok = ok && r.report.all_pass();
  }
  return ok ? 0 : 1;
}

PsiField load_psi(const Flags& f, const ExperimentConfig& c) {
  if (f.in.empty()) throw ConfigError("--in <field> is required");
  return PsiField{load_complex(f.in), c.eps > 0 ? c.eps : 0.05};
}

GridSpec grid_for(const ExperimentConfig& c, int m, int def) {
  int n = c.n > 0 ? c.n : def;
  std::vector<int> ns(m, n);
  return make_grid(m, ns, c.L);
}

void save_field(const std::string& path, const ComplexField& f) {
  if (path.empty()) throw ConfigError("--out <file> is required");
  if (std::filesystem::path(path).extension() == ".bin")
    save_field_binary(path, f);
  else
    save_field_json(path, f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"codim2: implicit codimension-2 shapes, prequantum connection and verification suites"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", f.config, "JSON config file (flags override it)");
    s->add_option("--grid", f.grid, "grid size n, or n x n [x n]");
    s->add_option("--eps", f.eps, "tube width eps");
    s->add_option("--dt", f.dt, "time step");
    s->add_option("--out", f.out, "output directory or file");
    s->add_option("--seed", f.seed, "seed for randomized test forms")->each([&](const std::string&) { f.seed_set = true; });
    s->add_option("--tol", f.tol, "override every tolerance")->each([&](const std::string&) { f.tol_set = true; });
    s->add_option("--in", f.in, "input field or curve file");
    s->add_option("--workers", f.workers, "worker threads for suites");
    s->add_flag("-v,--verbose", f.verbose, "print every check");
  };

  std::vector<std::string> names;
  auto* verify = app.add_subcommand("verify", "run acceptance suites (all by default)");
  common(verify);
  verify->add_option("suites", names, "suite names");

  std::string experiment;
  auto* run = app.add_subcommand("run", "run one experiment and write its report, tables and geometry");
  common(run);
  run->add_option("experiment", experiment, "experiment name (verify-all runs every suite)");

  std::string study;
  auto* conv = app.add_subcommand("convergence", "residual vs resolution table and fitted order");
  common(conv);
  conv->add_option("study", study, "boundary | dtheta | deta")->required();
  conv->add_option("--res", f.res, "comma-separated resolutions (grid sizes or loop sizes)");

  auto* exp = app.add_subcommand("export", "write the zero set of a field, or a curve file, as OBJ");
  common(exp);

  auto* psi = app.add_subcommand("psi", "implicit representations");
  psi->require_subcommand(1);
  auto* b2 = psi->add_subcommand("build-2d", "psi for signed points on T^2");
  common(b2);
  b2->add_option("--points", f.points, "x,y,sign;x,y,sign;...");
  auto* b3 = psi->add_subcommand("build-3d", "psi for closed curves on T^3");
  common(b3);
  b3->add_option("--curve", f.curve, "curve file (JSON or OBJ)");
  auto* zs = psi->add_subcommand("zero-set", "oriented zero set as OBJ");
  common(zs);
  auto* th = psi->add_subcommand("theta", "Theta of a raw velocity field, or of the vertical velocity i c psi");
  common(th);
  th->add_option("--dot", f.dot, "raw velocity field psi_dot");
  th->add_option("--vertical", f.vertical, "c for psi_dot = i c psi");

  auto* preq = app.add_subcommand("preq", "prequantum connection");
  preq->require_subcommand(1);
  auto* lift = preq->add_subcommand("lift", "horizontal lift under a uniform velocity u and vertical a = i c");
  common(lift);
  lift->add_option("--velocity", f.velocity, "ux,uy[,uz]");
  lift->add_option("--vertical", f.vertical, "c in a = i c");
  lift->add_option("--steps", f.steps, "number of steps");
  auto* hol = preq->add_subcommand("holonomy", "holonomy loops (dipole rectangles, ring)");
  common(hol);
  std::string check;
  auto* pv = preq->add_subcommand("verify", "one identity suite");
  common(pv);
  pv->add_option("check", check, "dtheta | deta | boundary | flux | z-form")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) {
      auto c = make_config(f);
      return run_suites(c, names, f.verbose);
    }
    if (*run) {
      auto c = make_config(f);
      if (!experiment.empty()) c.experiment = experiment;
      if (c.out_dir.empty()) c.out_dir = "out";
      return run_suites(c, {c.experiment}, f.verbose);
    }
    if (*conv) {
      auto c = make_config(f);
      std::vector<double> res = c.resolutions;
      if (res.empty())
        res = study == "boundary" ? std::vector<double>{64, 128, 256} : std::vector<double>{1e-2, 5e-3, 2.5e-3};
      ConvergenceFit fit;
      Table t;
      try {
        t = convergence(c, study, res, &fit);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      std::cout << csv_string(t);
      std::printf("fitted order %.4f\n", fit.order);
      if (!c.out_dir.empty()) {
        std::filesystem::create_directories(c.out_dir);
        write_csv((std::filesystem::path(c.out_dir) / (study + "_convergence.csv")).string(), t);
      }
      return 0;
    }
    if (*exp) {
      auto c = make_config(f);
      if (f.in.empty() || f.out.empty()) throw ConfigError("export needs --in and --out");
      std::ifstream probe(f.in);
      nlohmann::json j;
      bool is_field = false;
      if (std::filesystem::path(f.in).extension() == ".bin") {
        is_field = true;
      } else if (std::filesystem::path(f.in).extension() == ".json") {
        try {
          j = nlohmann::json::parse(probe);
          is_field = j.contains("dtype");
        } catch (const nlohmann::json::exception&) {
          throw ConfigError("cannot parse " + f.in);
        }
      }
      if (is_field) {
        write_obj(f.out, zero_set(load_psi(f, c)));
      } else if (j.contains("signs")) {
        auto p = load_points(f.in);
        write_obj(f.out, OrientedPoints{p.amb, p.pos, p.sign});
      } else {
        auto cv = load_curve(f.in);
        write_obj(f.out, to_polycurve(cv));
      }
      return 0;
    }
    if (*b2) {
      auto c = make_config(f);
      Points2D p;
      for (auto& q : c.points) {
        p.pos.push_back(Vec3(q[0], q[1], 0));
        p.sign.push_back(int(q[2]));
      }
      if (p.pos.empty()) throw ConfigError("no points given");
      auto ps = build_psi_2d(grid_for(c, 2, 128), p, c.eps > 0 ? c.eps : 0.05);
      save_field(f.out, ps.field);
      std::printf("built %dx%d field, %zu zeros\n", ps.grid().n[0], ps.grid().n[1], p.pos.size());
      return 0;
    }
    if (*b3) {
      auto c = make_config(f);
      if (c.curve_file.empty()) throw ConfigError("--curve is required");
      auto cv = load_curve(c.curve_file);
      auto ps = build_psi_3d(grid_for(c, 3, 64), {cv}, c.eps > 0 ? c.eps : 0.06);
      save_field(f.out, ps.field);
      std::printf("built %d^3 field from %zu vertices\n", ps.grid().n[0], cv.size());
      return 0;
    }
    if (*zs) {
      auto c = make_config(f);
      auto z = zero_set(load_psi(f, c));
      if (!f.out.empty()) write_obj(f.out, z);
      if (auto* p = std::get_if<OrientedPoints>(&z))
        std::printf("%zu oriented points\n", p->pos.size());
      else
        std::printf("%zu closed curves, length %.6g\n", std::get<PolyCurve>(z).lines.size(),
                    total_length(std::get<PolyCurve>(z)));
      return 0;
    }
    if (*th) {
      auto c = make_config(f);
      auto ps = load_psi(f, c);
      ComplexField dot;
      if (!f.dot.empty()) {
        dot = load_complex(f.dot);
      } else {
        dot = ps.field;
        for (auto& z : dot.v) z *= cplx(0.0, c.vertical);
      }
      std::printf("%.15g\n", theta(ps, ImplicitVelocity::from_raw(dot)));
      return 0;
    }
    if (*lift) {
      auto c = make_config(f);
      auto ps = load_psi(f, c);
      const auto& g = ps.grid();
      Vec3 u = Vec3::Zero();
      if (c.velocity.size() > 3) throw ConfigError("--velocity takes at most 3 components");
      for (std::size_t a = 0; a < c.velocity.size(); ++a) u[a] = c.velocity[a];
      int steps = c.steps > 0 ? c.steps : 10;
      LiftOptions o;
      o.dt = c.dt > 0 ? c.dt : 0.2 * g.max_h();
      VelocityAt v{make_vector(g, u), make_complex(g, cplx(0.0, c.vertical))};
      auto r = horizontal_lift(ps, [&](double) { return v; }, steps * o.dt, o);
      const auto& end = r.path.items.back();
      std::printf("steps %d  max |Theta| %.3g  phase volume %.9g\n", r.steps, r.max_abs_theta,
                  phase_volume(end.field, ps.field));
      if (!f.out.empty()) save_field(f.out, end.field);
      return 0;
    }
    if (*hol) {
      auto c = make_config(f);
      return run_suites(c, {"holonomy"}, f.verbose);
    }
    if (*pv) {
      auto c = make_config(f);
      std::string name = check == "z-form" ? "zform" : check;
      if (name != "dtheta" && name != "deta" && name != "boundary" && name != "flux" && name != "zform")
        throw ConfigError("unknown check: " + check);
      return run_suites(c, {name}, f.verbose);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
