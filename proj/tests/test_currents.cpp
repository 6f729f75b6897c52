#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>

#include "codim2/currents.hpp"
#include "codim2/implicit_shapes.hpp"
#include "gen.hpp"

using namespace c2;
static const double pi = std::numbers::pi;

namespace {

TriSurface unit_square(int k) {
  TriSurface s;
  s.amb = Ambient::euclidean(3);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) s.v.push_back(Vec3(double(i) / k, double(j) / k, 0.0));
  auto id = [k](int i, int j) { return i * (k + 1) + j; };
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      s.tri.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      s.tri.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return s;
}

// polar disk of radius r lifted onto z = height(x, y); counterclockwise about +z
TriSurface polar_disk(double r, int rings, int sectors, const std::function<double(double, double)>& height) {
  TriSurface s;
  s.amb = Ambient::euclidean(3);
  s.v.push_back(Vec3(0, 0, height(0, 0)));
  for (int i = 1; i <= rings; ++i)
    for (int j = 0; j < sectors; ++j) {
      double rr = r * i / rings, a = 2 * pi * j / sectors;
      double x = rr * std::cos(a), y = rr * std::sin(a);
      s.v.push_back(Vec3(x, y, height(x, y)));
    }
  auto id = [sectors](int i, int j) { return 1 + (i - 1) * sectors + (j % sectors); };
  for (int j = 0; j < sectors; ++j) s.tri.push_back({0, id(1, j), id(1, j + 1)});
  for (int i = 1; i < rings; ++i)
    for (int j = 0; j < sectors; ++j) {
      s.tri.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      s.tri.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return s;
}

TriSurface hemisphere(double r, int rings, int sectors) {
  TriSurface s;
  s.amb = Ambient::euclidean(3);
  s.v.push_back(Vec3(0, 0, r));
  for (int i = 1; i <= rings; ++i)
    for (int j = 0; j < sectors; ++j) {
      double th = 0.5 * pi * i / rings, a = 2 * pi * j / sectors;
      s.v.push_back(r * Vec3(std::sin(th) * std::cos(a), std::sin(th) * std::sin(a), std::cos(th)));
    }
  auto id = [sectors](int i, int j) { return 1 + (i - 1) * sectors + (j % sectors); };
  for (int j = 0; j < sectors; ++j) s.tri.push_back({0, id(1, j), id(1, j + 1)});
  for (int i = 1; i < rings; ++i)
    for (int j = 0; j < sectors; ++j) {
      s.tri.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      s.tri.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return s;
}

TriSurface octahedron() {
  TriSurface s;
  s.amb = Ambient::euclidean(3);
  s.v = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
  s.tri = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return s;
}

TestForm area_xy() {
  TestForm t;
  t.degree = 2;
  t.m = 3;
  t.coef = [](const Vec3&) { return std::vector<double>{0, 0, 1}; };
  return t;
}

}  // namespace

TEST_CASE("boundary of a closed surface is empty") {
  CHECK(boundary(octahedron()).lines.empty());
}

TEST_CASE("boundary of a single triangle is a closed 3-edge loop") {
  TriSurface s;
  s.v = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  s.tri = {{0, 1, 2}};
  auto b = boundary(s);
  REQUIRE(b.lines.size() == 1);
  CHECK(b.lines[0].closed);
  CHECK(b.lines[0].v.size() == 3);
  CHECK(b.segments() == 3);
}

TEST_CASE("boundary of a flat disk is its rim, counterclockwise") {
  auto d = polar_disk(1.0, 6, 32, [](double, double) { return 0.0; });
  auto b = boundary(d);
  REQUIRE(b.lines.size() == 1);
  CHECK(b.lines[0].closed);
  CHECK(b.lines[0].v.size() == 32);
  // signed area of the rim polygon
  double A = 0;
  const auto& v = b.lines[0].v;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    A += 0.5 * (p.x() * q.y() - q.x() * p.y());
  }
  CHECK(A > 0);
  for (const auto& p : v) CHECK(p.norm() == doctest::Approx(1.0));
}

TEST_CASE("boundary rejects non-manifold edges") {
  TriSurface s;
  s.v = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1)};
  s.tri = {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}};
  CHECK_THROWS_AS(boundary(s), Error);
}

TEST_CASE("boundary of boundary-capable meshes has no endpoints") {
  gen::Rng r(3);
  for (int t = 0; t < 5; ++t) {
    double a = r.uni(0.1, 0.4), b = r.uni(0.1, 0.4);
    auto d = polar_disk(r.uni(0.5, 2.0), 4 + t, 12 + 4 * t,
                        [a, b](double x, double y) { return a * x * x - b * y * y; });
    for (const auto& l : boundary(d).lines) CHECK(l.closed);
  }
}

TEST_CASE("Dirac pairing of oriented points") {
  OrientedPoints p;
  p.amb = Ambient::euclidean(2);
  p.pos = {Vec3(0.3, 0.7, 0)};
  p.sign = {1};
  TestForm f;
  f.degree = 0;
  f.m = 2;
  f.coef = [](const Vec3& x) { return std::vector<double>{std::sin(x.x()) + x.y() * x.y()}; };
  CHECK(pair(p, f) == doctest::Approx(std::sin(0.3) + 0.49).epsilon(1e-14));
  p.sign = {-1};
  CHECK(pair(p, f) == doctest::Approx(-(std::sin(0.3) + 0.49)).epsilon(1e-14));
}

TEST_CASE("unit square pairs to 1 with dx^dy") {
  CHECK(std::abs(pair(unit_square(10), area_xy()) - 1.0) <= 1e-6);
}

TEST_CASE("pairing degree mismatch is an error") {
  TestForm f;
  f.degree = 1;
  f.m = 3;
  f.coef = [](const Vec3&) { return std::vector<double>{1, 0, 0}; };
  CHECK_THROWS_AS(pair(unit_square(2), f), Error);
}

TEST_CASE("Stokes on a curved disk") {
  gen::Rng r(41);
  auto d = polar_disk(0.4, 60, 256, [](double x, double y) { return 0.1 * (1.0 - (x * x + y * y) / 0.16); });
  auto b = boundary(d);
  for (int t = 0; t < 4; ++t) {
    auto alpha = trig_one_form(3, gen::coeffs(r, 3 * trig_coeff_count(3, 0)), Vec3(1, 1, 1));
    double lhs = pair(d, alpha.d());
    double rhs = pair(b, alpha);
    CHECK(std::abs(lhs - rhs) <= 1e-3);
  }
}

TEST_CASE("Stokes mismatch shrinks with the mesh") {
  gen::Rng r(43);
  auto alpha = trig_one_form(3, gen::coeffs(r, 3 * trig_coeff_count(3, 0)), Vec3(1, 1, 1));
  auto h = [](double x, double y) { return 0.3 * x * y; };
  double prev = 1e300;
  for (int k : {8, 16, 32}) {
    auto d = polar_disk(0.45, k, 4 * k, h);
    double err = std::abs(pair(d, alpha.d()) - pair(boundary(d), alpha));
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("flux through the unit square") {
  auto s = unit_square(4);
  CHECK(flux(s, [](const Vec3&) { return Vec3(0, 0, 1); }) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(flux(s, [](const Vec3&) { return Vec3(0.3, -2.0, 0); })) <= 1e-15);
}

TEST_CASE("flux of z through a hemisphere is the projected area") {
  double r = 0.7;
  auto s = hemisphere(r, 50, 100);
  CHECK(s.tri.size() >= 9900);
  double f = flux(s, [](const Vec3&) { return Vec3(0, 0, 1); });
  CHECK(std::abs(f - pi * r * r) <= 0.01 * pi * r * r);
}

TEST_CASE("2D flux through segments") {
  PolyCurve c;
  c.amb = Ambient::euclidean(2);
  c.lines.push_back({{Vec3(0, 0, 0), Vec3(0, 1, 0)}, false});
  double fx = flux(c, [](const Vec3&) { return Vec3(1, 0, 0); });
  CHECK(std::abs(std::abs(fx) - 1.0) <= 1e-14);
  CHECK(std::abs(flux(c, [](const Vec3&) { return Vec3(0, 1, 0); })) <= 1e-15);
}

TEST_CASE("2D dipole level set joins the zeros") {
  auto g = make_grid(2, {64, 64});
  Points2D pts;
  pts.amb = Ambient::torus(g);
  pts.pos = {Vec3(0.3, 0.4, 0), Vec3(0.7, 0.6, 0)};
  pts.sign = {1, -1};
  auto psi = build_psi_2d(g, pts, 0.05);
  for (double s : {0.0, 1.0, 2.5, -2.0}) {
    auto ls = std::get<PolyCurve>(extract_phase_levelset(psi.field, s));
    // closed components (e.g. a loop around the torus) carry no boundary
    std::vector<Polyline> open;
    for (const auto& l : ls.lines)
      if (!l.closed) open.push_back(l);
    REQUIRE(open.size() == 1);
    const auto& l = open[0];
    auto amb = ls.amb;
    double h = g.max_h();
    CHECK(amb.delta(l.v.front(), pts.pos[1]).norm() <= h);
    CHECK(amb.delta(l.v.back(), pts.pos[0]).norm() <= h);
  }
}

TEST_CASE("3D ring level set is a disk bounded by the ring") {
  auto g = make_grid(3, {48, 48, 48});
  double r = 0.25;
  auto ring = make_circle(r, 256, Vec3(0.5, 0.5, 0.5));
  auto psi = build_psi_3d(g, {ring}, 0.06);
  auto zs = std::get<PolyCurve>(zero_set(psi));
  for (double s : {0.3, 2.0}) {
    auto surf = std::get<TriSurface>(extract_phase_levelset(psi.field, s));
    auto b = boundary(surf);
    CHECK(std::abs(total_length(b) - 2 * pi * r) <= 0.02 * 2 * pi * r);
    double hd = hausdorff(sample_points(b, 0.5 * g.max_h()), sample_points(zs, 0.5 * g.max_h()), b.amb);
    CHECK(hd <= 2 * g.max_h());
    // induced orientation agrees with the zero set
    double agree = 0;
    for (const auto& l : b.lines)
      for (std::size_t i = 0; i + 1 < l.v.size(); ++i) {
        Vec3 mid = 0.5 * (l.v[i] + l.v[i + 1]) - Vec3(0.5, 0.5, 0.5);
        Vec3 tan = b.amb.delta(l.v[i], l.v[i + 1]);
        agree += Vec3::UnitZ().cross(mid).dot(tan);
      }
    CHECK(agree > 0);
  }
}

TEST_CASE("level set boundary matches the zero set for several phases") {
  auto g = make_grid(2, {64, 64});
  Points2D pts;
  pts.amb = Ambient::torus(g);
  pts.pos = {Vec3(0.25, 0.25, 0), Vec3(0.75, 0.25, 0), Vec3(0.5, 0.75, 0), Vec3(0.2, 0.8, 0)};
  pts.sign = {1, -1, 1, -1};
  auto psi = build_psi_2d(g, pts, 0.05);
  auto zp = std::get<OrientedPoints>(zero_set(psi));
  for (int t = 0; t < 6; ++t) {
    double s = -pi + 2 * pi * (t + 0.37) / 6;
    auto ls = std::get<PolyCurve>(extract_phase_levelset(psi.field, s));
    std::vector<Vec3> ends;
    for (const auto& l : ls.lines)
      if (!l.closed) {
        ends.push_back(l.v.front());
        ends.push_back(l.v.back());
      }
    CHECK(hausdorff(ends, zp.pos, ls.amb) <= 2 * g.max_h());
  }
}

TEST_CASE("OBJ text carries vertices and elements") {
  auto s = obj_string(octahedron());
  CHECK(s.find("v ") != std::string::npos);
  CHECK(s.find("f ") != std::string::npos);
  PolyCurve c;
  c.amb = Ambient::euclidean(3);
  c.lines.push_back({{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, true});
  CHECK(obj_string(c).find("l ") != std::string::npos);
}
