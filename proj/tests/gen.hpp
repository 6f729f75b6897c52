// Seeded generators for property tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "codim2/explicit_shapes.hpp"
#include "codim2/torus_fields.hpp"

namespace gen {

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uni(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  c2::Vec3 vec(double s = 1.0) { return {uni(-s, s), uni(-s, s), uni(-s, s)}; }
};

inline std::vector<double> coeffs(Rng& r, int count) {
  std::vector<double> c(count);
  for (auto& x : c) x = r.uni();
  return c;
}

// smooth closed curve: a circle with a few low-mode wiggles
inline c2::Curve3D wobbly_curve(Rng& r, std::size_t N) {
  const double pi = std::numbers::pi;
  c2::Vec3 a[3][2];
  for (auto& k : a)
    for (auto& v : k) v = r.vec(0.08);
  double rad = r.uni(0.5, 1.0);
  c2::Vec3 center = r.vec(0.5);
  c2::Curve3D c;
  for (std::size_t i = 0; i < N; ++i) {
    double s = 2.0 * pi * double(i) / double(N);
    c2::Vec3 p = center + rad * c2::Vec3(std::cos(s), std::sin(s), 0.0);
    for (int k = 0; k < 3; ++k) p += a[k][0] * std::cos((k + 2) * s) + a[k][1] * std::sin((k + 2) * s);
    c.v.push_back(p);
  }
  return c;
}

inline c2::ShapeVelocity smooth_velocity(Rng& r, const c2::Curve3D& c) {
  const double pi = std::numbers::pi;
  c2::Vec3 a0 = r.vec(), a1 = r.vec(), b1 = r.vec();
  c2::ShapeVelocity v(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    double s = 2.0 * pi * double(i) / double(c.size());
    v[i] = a0 + a1 * std::cos(s) + b1 * std::sin(s);
  }
  return v;
}

inline c2::ComplexField random_complex(Rng& r, const c2::GridSpec& g) {
  auto f = c2::make_complex(g);
  for (auto& z : f.v) z = {r.uni(), r.uni()};
  return f;
}

}  // namespace gen
