#include "codim2/prequantum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace c2 {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double bump_edge(double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; }
double bump_edge_d(double x) { return x > 0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

void normal_frame(const Vec3& t, Vec3& e1, Vec3& e2) {
  Vec3 tt = t.normalized();
  Vec3 ref = std::abs(tt.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  e1 = (ref - ref.dot(tt) * tt).normalized();
  e2 = tt.cross(e1);
}

struct ChartState {
  int pierced = 0;
  std::size_t components = 0;
};

ChartState chart_state(const PsiField& psi) {
  ChartState s;
  auto w = face_windings(psi.field);
  for (int x : w) {
    if (std::abs(x) >= 2) throw Error("lift left the chart");
    if (x != 0) ++s.pierced;
  }
  try {
    auto z = zero_set(psi);
    if (auto* pts = std::get_if<OrientedPoints>(&z))
      s.components = pts->pos.size();
    else
      s.components = std::get<PolyCurve>(z).lines.size();
  } catch (const Error&) {
    throw Error("lift left the chart");
  }
  return s;
}

}  // namespace

double cutoff(double r, double r1, double r2) {
  if (r <= r1) return 1.0;
  if (r >= r2) return 0.0;
  double x = (r2 - r) / (r2 - r1);
  double a = bump_edge(x), b = bump_edge(1 - x);
  return a / (a + b);
}

double cutoff_deriv(double r, double r1, double r2) {
  if (r <= r1 || r >= r2) return 0.0;
  double x = (r2 - r) / (r2 - r1);
  double a = bump_edge(x), b = bump_edge(1 - x);
  double da = bump_edge_d(x), db = -bump_edge_d(1 - x);
  double dfdx = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
  return dfdx * (-1.0 / (r2 - r1));
}

ImplicitVelocity horizontal_project(const PsiField& psi, const ImplicitVelocity& v, RawQuadrature q) {
  const auto& g = psi.grid();
  double k = kTwoPi * theta(psi, v, q) / g.vol();
  ImplicitVelocity out = v;
  if (v.kind == ImplicitVelocity::Kind::Generated) {
    for (auto& a : out.a.v) a -= cplx(0.0, k);
  } else {
    for (std::size_t p = 0; p < g.nodes(); ++p) out.raw.v[p] -= cplx(0.0, k) * psi.field.v[p];
  }
  return out;
}

LiftResult horizontal_lift(const PsiField& psi0, const Schedule& sched, double T, const LiftOptions& opt) {
  if (!(opt.dt > 0)) throw Error("time step must be positive");
  if (T < 0) throw Error("lift duration must be non-negative");
  const auto& g = psi0.grid();
  LiftResult res;
  res.path.t = {0.0};
  res.path.s.push_back(0.0);
  res.path.items.push_back(psi0);
  if (T == 0) return res;

  int n = std::max(1, int(std::ceil(T / opt.dt - 1e-9)));
  double h = T / n;
  ChartState start;
  if (opt.check_chart) start = chart_state(psi0);

  auto rate = [&](const PsiField& psi, double t) {
    auto vel = sched(t);
    auto gen = make_velocity(psi, vel.u, vel.a);
    auto hor = horizontal_project(psi, gen);
    res.max_abs_theta = std::max(res.max_abs_theta, std::abs(theta(psi, hor)));
    return realize(psi, hor);
  };

  PsiField psi = psi0;
  for (int step = 0; step < n; ++step) {
    double t = step * h;
    auto k1 = rate(psi, t);
    PsiField mid = psi;
    for (std::size_t p = 0; p < g.nodes(); ++p) mid.field.v[p] += 0.5 * h * k1.v[p];
    auto k2 = rate(mid, t + 0.5 * h);
    for (std::size_t p = 0; p < g.nodes(); ++p) psi.field.v[p] += h * k2.v[p];
    require_finite(psi.field.v, "lifted psi");
    if (opt.check_chart) {
      auto now = chart_state(psi);
      if (now.components != start.components) throw Error("lift left the chart");
      if (g.m == 2 && now.pierced != start.pierced) throw Error("lift left the chart");
    }
    bool last = step + 1 == n;
    if (last || (opt.keep_every > 0 && (step + 1) % opt.keep_every == 0)) {
      res.path.s.push_back((step + 1) * h);
      res.path.items.push_back(psi);
    }
  }
  res.steps = n;
  return res;
}

double phase_volume(const ComplexField& psiT, const ComplexField& psi0) {
  const auto& g = psi0.grid;
  if (!(psiT.grid == g)) throw Error("grid mismatch");
  std::vector<double> terms(g.nodes());
  std::size_t near_cut = 0;
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    double a = std::arg(psiT.v[p] * std::conj(psi0.v[p]));
    if (std::numbers::pi - std::abs(a) < 1e-3) ++near_cut;
    terms[p] = a * g.cell_measure();
  }
  if (near_cut > 0.01 * g.nodes()) throw Error("branch-ambiguous holonomy; subdivide loop");
  return stable_sum(terms) / kTwoPi;
}

HolonomyReport holonomy(const PsiField& psi0, const Schedule& sched, double T, double omega,
                        const LiftOptions& opt) {
  auto lift = horizontal_lift(psi0, sched, T, opt);
  HolonomyReport r;
  r.holonomy = phase_volume(lift.path.items.back().field, psi0.field);
  r.loop_omega = omega;
  r.swept_oracle = -omega;
  r.residual = std::abs(r.holonomy - r.swept_oracle);
  r.relative_residual = r.swept_oracle != 0 ? r.residual / std::abs(r.swept_oracle) : r.residual;
  r.max_abs_theta = lift.max_abs_theta;
  r.steps = lift.steps;
  return r;
}

double loop_omega(const std::function<double(double, double)>& omega_st, double s0, double s1, double t0,
                  double t1, int ns, int nt) {
  if (ns < 1 || nt < 1) throw Error("parameter lattice needs at least one cell");
  double ds = (s1 - s0) / ns, dt = (t1 - t0) / nt;
  std::vector<double> terms;
  terms.reserve(std::size_t(ns) * nt);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) terms.push_back(omega_st(s0 + (i + 0.5) * ds, t0 + (j + 0.5) * dt) * ds * dt);
  return stable_sum(terms);
}

double dform_fd_loop(const FamilyOneForm& alpha, double s0, double t0, double e) {
  if (!(e > 0)) throw Error("non-rectangular family");
  std::vector<double> edges = {
      alpha(s0 + 0.5 * e, t0, 0) * e,
      alpha(s0 + e, t0 + 0.5 * e, 1) * e,
      -alpha(s0 + 0.5 * e, t0 + e, 0) * e,
      -alpha(s0, t0 + 0.5 * e, 1) * e,
  };
  return stable_sum(edges) / (e * e);
}

double theta_translation_pullback(const EdgeOneForm& lam0, const ScalarField& chi, const VectorField& grad_chi,
                                  const Vec3& disp, const Vec3& dir) {
  const auto& g = lam0.grid;
  if (!(chi.grid == g) || !(grad_chi.grid == g)) throw Error("grid mismatch");
  VectorField w = make_vector(g);
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    const Vec3& gc = grad_chi.v[p];
    w.v[p] = chi.v[p] * ((1.0 + gc.dot(disp)) * dir - disp * gc.dot(dir));
  }
  return -lambda_flux(lam0, w) / kTwoPi;
}

double z_density(const cplx n[2], cplx a, cplx b, bool with_i) {
  double det = (n[0] * cplx(0, 1) * std::conj(n[1])).real();
  if (std::abs(det) < 1e-8) throw Error("singular dψ_N");
  double nu = with_i ? (a * cplx(0, 1) * std::conj(b)).real() : (a * std::conj(b)).real();
  // the zero set carries the orientation induced by psi, so the frame is
  // taken positively oriented: divide by |det|
  return nu / std::abs(det);
}

double presymplectic_Z(const PsiField& psi, const ComplexField& psi_dot, const ComplexField& psi_ring,
                       bool with_i) {
  const auto& g = psi.grid();
  if (!(psi_dot.grid == g) || !(psi_ring.grid == g)) throw Error("grid mismatch");
  auto z = zero_set(psi);
  // nodal gradient with the stencil used by realize, then interpolated
  auto G = nodal_gradient(psi.field);
  auto grad_at = [&](const Vec3& x, cplx grad[3]) {
    for (int a = 0; a < 3; ++a) grad[a] = a < g.m ? sample(G[a], x) : cplx(0.0);
  };
  std::vector<double> terms;
  auto add = [&](const Vec3& x, const cplx grad[3], const Vec3& e1, const Vec3& e2, double weight) {
    cplx n[2] = {0.0, 0.0};
    for (int a = 0; a < g.m; ++a) {
      n[0] += grad[a] * e1[a];
      n[1] += grad[a] * e2[a];
    }
    terms.push_back(z_density(n, sample(psi_dot, x), sample(psi_ring, x), with_i) * weight);
  };
  if (auto* pts = std::get_if<OrientedPoints>(&z)) {
    for (const auto& x : pts->pos) {
      cplx grad[3];
      grad_at(x, grad);
      add(x, grad, Vec3::UnitX(), Vec3::UnitY(), 1.0);
    }
  } else {
    // sample at the face punctures (zeros of the face interpolant); the
    // tangent comes from ker(dpsi), the weight is the dual length along it
    const auto& pc = std::get<PolyCurve>(z);
    for (const auto& pl : pc.lines) {
      std::size_t N = pl.v.size();
      for (std::size_t i = 0; i < N; ++i) {
        const Vec3& x = pl.v[i];
        Vec3 dn = pc.amb.delta(x, pl.v[(i + 1) % N]);
        Vec3 dp = pc.amb.delta(pl.v[(i + N - 1) % N], x);
        cplx grad[3];
        grad_at(x, grad);
        Vec3 re(grad[0].real(), grad[1].real(), grad[2].real());
        Vec3 im(grad[0].imag(), grad[1].imag(), grad[2].imag());
        Vec3 t = re.cross(im);
        if (t.norm() < 1e-12) throw Error("singular dψ_N");
        t.normalize();
        Vec3 e1, e2;
        normal_frame(t, e1, e2);
        add(x, grad, e1, e2, 0.5 * (std::abs(dn.dot(t)) + std::abs(dp.dot(t))));
      }
    }
  }
  return stable_sum(terms);
}

double avg_swept_volume_rate(const PsiField& psi, const ComplexField& psi_dot, int n_phases) {
  const auto& g = psi.grid();
  if (!(psi_dot.grid == g)) throw Error("grid mismatch");
  if (n_phases < 8) throw Error("need at least 8 phase samples");
  VecFn u_eff = [&](const Vec3& x) -> Vec3 {
    cplx val, grad[3];
    sample_with_gradient(psi.field, x, val, grad);
    double a2 = std::norm(val);
    if (a2 == 0) return Vec3::Zero();
    double phidot = (sample(psi_dot, x) * std::conj(val)).imag() / a2;
    Vec3 gphi = Vec3::Zero();
    for (int a = 0; a < g.m; ++a) gphi[a] = (grad[a] * std::conj(val)).imag() / a2;
    double n2 = gphi.squaredNorm();
    if (n2 == 0) return Vec3::Zero();
    return -phidot * gphi / n2;
  };
  std::vector<double> fluxes;
  for (int k = 0; k < n_phases; ++k) {
    double s0 = kTwoPi * (k + 0.5) / n_phases;
    bool ok = false;
    for (int attempt = 0; attempt < 5 && !ok; ++attempt) {
      double s = s0 + attempt * 1e-3;
      try {
        auto L = extract_phase_levelset(psi.field, s);
        double f = g.m == 2 ? flux(std::get<PolyCurve>(L), u_eff) : flux(std::get<TriSurface>(L), u_eff);
        fluxes.push_back(f);
        ok = true;
      } catch (const Error& e) {
        if (std::string(e.what()) != "near-critical phase") throw;
      }
    }
  }
  if (int(fluxes.size()) < n_phases) throw Error("fewer regular phase values than requested");
  return -stable_sum(fluxes) / double(fluxes.size());
}

Curve3D extract_zero_curve(const PsiField& psi) {
  const auto& g = psi.grid();
  if (g.m != 3) throw Error("zero curve extraction needs a 3D grid");
  auto z = zero_set(psi);
  const auto& pc = std::get<PolyCurve>(z);
  if (pc.lines.empty()) throw Error("empty zero set");
  const Polyline* best = &pc.lines[0];
  for (const auto& pl : pc.lines)
    if (pl.v.size() > best->v.size()) best = &pl;
  Curve3D raw;
  raw.v = best->v;
  double len = curve_length(raw);
  std::size_t N = std::max<std::size_t>(16, std::size_t(std::lround(len / (2.0 * g.max_h()))));
  Curve3D c = resample_uniform(raw, N);
  // low-pass: keep Fourier modes |k| <= N/8
  const int K = std::max(3, int(N / 8));
  std::vector<Vec3> out(N, Vec3::Zero());
  for (int k = -K; k <= K; ++k) {
    Eigen::Vector3cd ck = Eigen::Vector3cd::Zero();
    for (std::size_t i = 0; i < N; ++i) {
      cplx e = std::polar(1.0, -kTwoPi * k * double(i) / N);
      ck += c.v[i].cast<cplx>() * e;
    }
    ck /= double(N);
    for (std::size_t i = 0; i < N; ++i) {
      cplx e = std::polar(1.0, kTwoPi * k * double(i) / N);
      out[i] += (ck * e).real();
    }
  }
  c.v = out;
  return c;
}

HamiltonianStep hamiltonian_horizontal_step(const PsiField& psi, double dt) {
  const auto& g = psi.grid();
  if (g.m != 3) throw Error("hamiltonian step needs a 3D grid");
  if (dt < 0) throw Error("time step must be non-negative");
  HamiltonianStep out{psi, extract_zero_curve(psi), 0.0, 0};
  if (dt == 0) return out;
  const auto& c = out.extracted;
  auto V = binormal_velocity(c);
  double vmax = 0;
  for (const auto& v : V) vmax = std::max(vmax, v.norm());

  VectorField u = make_vector(g);
  const std::size_t N = c.size();
  // normalized Gaussian average of the vertex velocities: smooth in x, unlike
  // a nearest-segment lookup
  const double sig = std::max(2.0 * g.max_h(), psi.eps);
  std::vector<double> d2(N);
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    Vec3 x = g.position(p);
    double best2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
      d2[i] = g.min_image(c.v[i] - x).squaredNorm();
      best2 = std::min(best2, d2[i]);
    }
    Vec3 vel = Vec3::Zero();
    double wsum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double w = std::exp(-(d2[i] - best2) / (2 * sig * sig));
      vel += w * V[i];
      wsum += w;
    }
    vel /= wsum;
    double best = std::sqrt(best2);
    u.v[p] = 0.5 * (1.0 - std::tanh((best - 4.0 * psi.eps) / psi.eps)) * vel;
  }
  ComplexField a = make_complex(g);
  LiftOptions opt;
  int sub = std::max(1, int(std::ceil(vmax * dt / (0.2 * g.max_h()))));
  opt.dt = dt / sub;
  auto lift = horizontal_lift(psi, [&](double) { return VelocityAt{u, a}; }, dt, opt);
  out.psi = lift.path.items.back();
  out.max_abs_theta = lift.max_abs_theta;
  out.substeps = lift.steps;
  return out;
}

}  // namespace c2
