#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>

#include "codim2/prequantum.hpp"
#include "gen.hpp"

using namespace c2;
static const double pi = std::numbers::pi;

namespace {

PsiField dipole(int n, Vec3 plus = Vec3(0.25, 0.3, 0), Vec3 minus = Vec3(0.7, 0.65, 0)) {
  auto g = make_grid(2, {n, n});
  Points2D p;
  p.amb = Ambient::torus(g);
  p.pos = {plus, minus};
  p.sign = {1, -1};
  return build_psi_2d(g, p, 0.05);
}

VectorField field_of(const GridSpec& g, const std::function<Vec3(const Vec3&)>& f) {
  auto u = make_vector(g);
  for (std::size_t p = 0; p < g.nodes(); ++p) u.v[p] = f(g.position(p));
  return u;
}

double max_abs(const std::vector<cplx>& v) {
  double m = 0;
  for (auto z : v) m = std::max(m, std::abs(z));
  return m;
}

double max_diff(const ComplexField& a, const ComplexField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

}  // namespace

TEST_CASE("cutoff profile") {
  CHECK(cutoff(0.05, 0.1, 0.2) == 1.0);
  CHECK(cutoff(0.1, 0.1, 0.2) == 1.0);
  CHECK(cutoff(0.2, 0.1, 0.2) == 0.0);
  CHECK(cutoff(0.3, 0.1, 0.2) == 0.0);
  double prev = 1.0;
  for (int k = 0; k <= 100; ++k) {
    double r = 0.1 + 0.1 * k / 100.0;
    double c = cutoff(r, 0.1, 0.2);
    CHECK(c <= prev + 1e-15);
    prev = c;
    if (k > 0 && k < 100) {
      double fd = (cutoff(r + 1e-6, 0.1, 0.2) - cutoff(r - 1e-6, 0.1, 0.2)) / 2e-6;
      CHECK(std::abs(fd - cutoff_deriv(r, 0.1, 0.2)) <= 1e-5 * (1 + std::abs(fd)));
    }
  }
}

TEST_CASE("horizontal projection") {
  auto psi = dipole(64);
  auto vert = psi.field;
  for (auto& z : vert.v) z *= cplx(0, 0.9);
  auto h = horizontal_project(psi, ImplicitVelocity::from_raw(vert));
  CHECK(max_abs(h.raw.v) <= 1e-12);
  gen::Rng r(5);
  for (int t = 0; t < 5; ++t) {
    auto dot = gen::random_complex(r, psi.grid());
    auto p1 = horizontal_project(psi, ImplicitVelocity::from_raw(dot));
    CHECK(std::abs(theta(psi, p1)) <= 1e-12);
    auto p2 = horizontal_project(psi, p1);
    CHECK(max_diff(p1.raw, p2.raw) <= 1e-12);
  }
  auto u = field_of(psi.grid(), [](const Vec3& x) -> Vec3 { return Vec3(std::sin(2 * pi * x.y()), 0.4, 0); });
  auto gp = horizontal_project(psi, make_velocity(psi, u, make_complex(psi.grid(), cplx(0, 0.3))));
  CHECK(std::abs(theta(psi, gp)) <= 1e-12);
}

TEST_CASE("zero and vertical schedules give constant lifts") {
  auto psi = dipole(64);
  auto g = psi.grid();
  LiftOptions opt;
  opt.dt = 0.01;
  auto zero = horizontal_lift(psi, [&](double) { return VelocityAt{make_vector(g), make_complex(g)}; }, 0.1, opt);
  CHECK(zero.path.items.back().field.v == psi.field.v);
  auto vert = horizontal_lift(
      psi, [&](double) { return VelocityAt{make_vector(g), make_complex(g, cplx(0, 1.7))}; }, 0.1, opt);
  CHECK(max_diff(vert.path.items.back().field, psi.field) <= 1e-12);
  CHECK(vert.max_abs_theta <= 1e-10 * g.vol());
}

TEST_CASE("translation loop returns the zeros") {
  auto psi = dipole(64);
  auto g = psi.grid();
  double T = 0.1;
  Schedule back_and_forth = [&](double t) {
    Vec3 u = t < T / 2 ? Vec3(1, 0.5, 0) : Vec3(-1, -0.5, 0);
    return VelocityAt{make_vector(g, u), make_complex(g)};
  };
  LiftOptions opt;
  opt.dt = 0.2 * g.h(0);
  auto res = horizontal_lift(psi, back_and_forth, T, opt);
  CHECK(res.max_abs_theta <= 1e-10 * g.vol());
  auto z0 = std::get<OrientedPoints>(zero_set(psi));
  auto z1 = std::get<OrientedPoints>(zero_set(res.path.items.back()));
  REQUIRE(z0.pos.size() == z1.pos.size());
  for (std::size_t i = 0; i < z0.pos.size(); ++i) {
    CHECK(z0.sign[i] == z1.sign[i]);
    CHECK(z0.amb.delta(z0.pos[i], z1.pos[i]).norm() <= g.max_h());
  }
}

TEST_CASE("lift argument checks") {
  auto psi = dipole(32);
  auto g = psi.grid();
  Schedule s = [&](double) { return VelocityAt{make_vector(g), make_complex(g)}; };
  LiftOptions bad;
  bad.dt = 0.0;
  CHECK_THROWS_AS(horizontal_lift(psi, s, 0.1, bad), Error);
  CHECK_THROWS_AS(horizontal_lift(psi, s, -0.1), Error);
}

TEST_CASE("constant loop has no holonomy") {
  auto psi = dipole(64);
  auto g = psi.grid();
  LiftOptions opt;
  opt.dt = 0.01;
  auto h = holonomy(psi, [&](double) { return VelocityAt{make_vector(g), make_complex(g)}; }, 0.2, 0.0, opt);
  CHECK(std::abs(h.holonomy) <= 1e-10);
  CHECK(std::abs(h.residual) <= 1e-10);
}

TEST_CASE("phase volume of a uniform rotation and the branch guard") {
  auto psi = dipole(64);
  for (double c : {-2.0, 0.5, 3.0}) {
    auto rot = psi.field;
    for (auto& z : rot.v) z *= std::polar(1.0, c);
    CHECK(std::abs(phase_volume(rot, psi.field) - c / (2 * pi)) <= 1e-12);
  }
  auto flip = psi.field;
  for (auto& z : flip.v) z = -z;
  CHECK_THROWS_AS(phase_volume(flip, psi.field), Error);
}

TEST_CASE("loop_omega midpoint sums") {
  CHECK(loop_omega([](double, double) { return 1.0; }, 0, 2, 0, 3, 4, 5) == doctest::Approx(6.0));
  CHECK(loop_omega([](double s, double t) { return s + t; }, 0, 1, 0, 1, 8, 8) == doctest::Approx(1.0));
  CHECK_THROWS_AS(loop_omega([](double, double) { return 1.0; }, 0, 1, 0, 1, 0, 3), Error);
}

TEST_CASE("finite-difference loop of exact and non-exact forms") {
  // dF for F = sin(s) cos(2t) + s t^2
  FamilyOneForm dF = [](double s, double t, int dir) {
    return dir == 0 ? std::cos(s) * std::cos(2 * t) + t * t : -2 * std::sin(s) * std::sin(2 * t) + 2 * s * t;
  };
  for (double e : {1e-2, 5e-3, 1e-3}) CHECK(std::abs(dform_fd_loop(dF, 0.3, -0.7, e)) <= 5 * e * e);
  // (s dt - t ds) / 2 has d = ds ^ dt
  FamilyOneForm rot = [](double s, double t, int dir) { return dir == 0 ? -0.5 * t : 0.5 * s; };
  CHECK(std::abs(dform_fd_loop(rot, 1.1, 2.0, 1e-3) - 1.0) <= 1e-9);
  CHECK_THROWS_AS(dform_fd_loop(rot, 0, 0, 0.0), Error);
}

TEST_CASE("d eta = omega on translated circles, both primitives") {
  auto c0 = make_circle(0.3, 256, Vec3(0.1, -0.2, 0.3), Vec3(1, 0.5, 2).normalized());
  double mw = mw_form(c0, constant_velocity(256, Vec3::UnitX()), constant_velocity(256, Vec3::UnitZ()));
  double e = 1e-3;
  double loops[2];
  int k = 0;
  for (const auto& nu : {nu_symmetric(), nu_single_axis()}) {
    FamilyOneForm eta = [&](double s, double t, int dir) {
      auto c = translated(c0, Vec3(s, 0, t));
      return liouville_eta_general(c, constant_velocity(256, dir == 0 ? Vec3::UnitX() : Vec3::UnitZ()), nu);
    };
    loops[k] = dform_fd_loop(eta, 0, 0, e);
    CHECK(std::abs(loops[k] - mw) <= std::max(1e-4, 5 * e * e));
    ++k;
  }
  CHECK(std::abs(loops[0] - loops[1]) <= 1e-6);
}

TEST_CASE("local model densities") {
  cplx d0[2] = {1.0, cplx(0, 1)};     // x + i y
  cplx d1[2] = {1.0, cplx(1, 1)};     // x + y + i y
  // v = (0, 1): psi_dot = -i_v d psi
  cplx v0 = -d0[1], v1 = -d1[1];
  CHECK(z_density(d0, v0, v0, false) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(z_density(d1, v1, v1, false) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(z_density(d0, v0, v0, true)) <= 1e-12);
  // x then y translation: the MW value of a +1 point
  CHECK(z_density(d0, -d0[0], -d0[1], true) == doctest::Approx(1.0).epsilon(1e-12));
  cplx flat[2] = {1.0, 2.0};
  CHECK_THROWS_AS(z_density(flat, 1.0, 1.0), Error);
}

TEST_CASE("Z vanishes on equal velocities and ignores the representative") {
  auto psi = dipole(128);
  auto g = psi.grid();
  auto U = [](const Vec3& x) -> Vec3 { return Vec3(std::cos(2 * pi * x.y()), 0.5 * std::sin(2 * pi * x.x()), 0); };
  auto W = [](const Vec3& x) -> Vec3 { return Vec3(0.3 * std::sin(2 * pi * x.y()) + 0.2, std::cos(2 * pi * x.x()), 0); };
  auto a0 = make_complex(g);
  auto pd = realize(psi, make_velocity(psi, field_of(g, U), a0));
  auto pr = realize(psi, make_velocity(psi, field_of(g, W), a0));
  CHECK(std::abs(presymplectic_Z(psi, pd, pd)) <= 1e-12);
  double z0 = presymplectic_Z(psi, pd, pr);
  // same fiber: multiply by e^{sin(2 pi x)}
  auto psi2 = psi;
  for (std::size_t p = 0; p < g.nodes(); ++p) psi2.field.v[p] *= std::exp(std::sin(2 * pi * g.position(p).x()));
  auto pd2 = realize(psi2, make_velocity(psi2, field_of(g, U), a0));
  auto pr2 = realize(psi2, make_velocity(psi2, field_of(g, W), a0));
  double z1 = presymplectic_Z(psi2, pd2, pr2);
  CHECK(std::abs(z1 - z0) <= 0.02 * std::abs(z0));
  // and both match the MW form of the point velocities
  auto zs = std::get<OrientedPoints>(zero_set(psi));
  double mw = 0;
  for (std::size_t i = 0; i < zs.pos.size(); ++i) {
    Vec3 u = U(zs.pos[i]), w = W(zs.pos[i]);
    mw += zs.sign[i] * (u.x() * w.y() - u.y() * w.x());
  }
  CHECK(std::abs(z0 - mw) <= 0.02 * std::abs(mw));
}

TEST_CASE("swept-volume oracle") {
  auto psi = dipole(128);
  auto g = psi.grid();
  CHECK(avg_swept_volume_rate(psi, make_complex(g), 16) == 0.0);
  double c = 0.6;
  auto vert = psi.field;
  for (auto& z : vert.v) z *= cplx(0, c);
  double ref = c * g.vol() / (2 * pi);
  // per-phase fluxes are log-singular at the saddle values of the phase, so the
  // phase average converges like 1/n_phases; 16 phases land within 5%
  CHECK(std::abs(avg_swept_volume_rate(psi, vert, 64) - ref) <= 0.03 * ref);
  auto u = make_vector(g, Vec3(1, 0, 0));
  auto dot = realize(psi, make_velocity(psi, u, make_complex(g)));
  double th = theta(psi, make_velocity(psi, u, make_complex(g)));
  CHECK(std::abs(avg_swept_volume_rate(psi, dot, 16) - th) <= 0.03 * std::abs(th));
  CHECK_THROWS_AS(avg_swept_volume_rate(psi, dot, 4), Error);
}

TEST_CASE("Hamiltonian step argument checks") {
  auto g = make_grid(3, {32, 32, 32});
  auto ring = make_circle(0.25, 128, Vec3(0.5, 0.5, 0.5));
  ring.amb = Ambient::torus(g);
  auto psi = build_psi_3d(g, {ring}, 0.08);
  auto same = hamiltonian_horizontal_step(psi, 0.0);
  CHECK(same.psi.field.v == psi.field.v);
  CHECK(std::abs(curve_length(same.extracted) - 2 * pi * 0.25) <= 0.05 * 2 * pi * 0.25);
  CHECK_THROWS_AS(hamiltonian_horizontal_step(psi, -1e-3), Error);
  CHECK_THROWS_AS(hamiltonian_horizontal_step(dipole(32), 1e-3), Error);
}
