#include "codim2/implicit_shapes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace c2 {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw Error("grid mismatch");
}

// comb spanning tree rooted at node 0: walk axis 0 along (i,0,0), then axis 1, then axis 2
std::vector<double> tree_phase(const EdgeOneForm& lam) {
  const auto& g = lam.grid;
  const int m = g.m;
  std::vector<double> th(g.nodes(), 0.0);
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) {
        std::size_t p = g.index(i, j, k);
        if (k > 0) {
          std::size_t q = g.index(i, j, k - 1);
          th[p] = th[q] + lam.v[q * m + 2];
        } else if (j > 0) {
          std::size_t q = g.index(i, j - 1, 0);
          th[p] = th[q] + lam.v[q * m + 1];
        } else if (i > 0) {
          std::size_t q = g.index(i - 1, 0, 0);
          th[p] = th[q] + lam.v[q * m + 0];
        }
      }
  return th;
}

// add the constant harmonic 1-form that rounds the loop periods through node 0
// to multiples of 2*pi, so that the tree phase is single valued
void quantize_periods(EdgeOneForm& lam) {
  const auto& g = lam.grid;
  for (int a = 0; a < g.m; ++a) {
    double per = 0.0;
    std::size_t p = 0;
    for (int i = 0; i < g.n[a]; ++i) {
      per += lam.v[p * g.m + a];
      p = g.shift(p, a, 1);
    }
    double target = kTwoPi * std::floor(per / kTwoPi + 0.5);
    double corr = (target - per) / g.n[a];
    for (std::size_t q = 0; q < g.nodes(); ++q) lam.v[q * g.m + a] += corr;
  }
}

ComplexField assemble(const GridSpec& g, const std::vector<double>& dist, const std::vector<double>& th,
                      double eps) {
  ComplexField f = make_complex(g);
  const double floor_d = 1e-6 * g.max_h();
  for (std::size_t p = 0; p < g.nodes(); ++p)
    f.v[p] = std::tanh(std::max(dist[p], floor_d) / eps) * std::polar(1.0, th[p]);
  return f;
}

int floor_index(double x, double h, int n) {
  int i = int(std::floor(x / h));
  i %= n;
  if (i < 0) i += n;
  return i;
}

double seg_distance(const Vec3& x, const Vec3& a, const Vec3& d) {
  double dd = d.squaredNorm();
  double t = dd > 0 ? std::clamp((x - a).dot(d) / dd, 0.0, 1.0) : 0.0;
  return (x - a - t * d).norm();
}

// zero of the bilinear interpolant c00(1-u)(1-v) + c10 u(1-v) + c11 uv + c01(1-u)v
std::pair<double, double> bilinear_zero(cplx c00, cplx c10, cplx c11, cplx c01) {
  double u = 0.5, v = 0.5;
  for (int it = 0; it < 50; ++it) {
    cplx f = c00 * (1 - u) * (1 - v) + c10 * u * (1 - v) + c11 * u * v + c01 * (1 - u) * v;
    cplx fu = (c10 - c00) * (1 - v) + (c11 - c01) * v;
    cplx fv = (c01 - c00) * (1 - u) + (c11 - c10) * u;
    double det = fu.real() * fv.imag() - fv.real() * fu.imag();
    if (std::abs(det) < 1e-300) break;
    double du = (f.real() * fv.imag() - fv.real() * f.imag()) / det;
    double dv = (fu.real() * f.imag() - f.real() * fu.imag()) / det;
    u -= du;
    v -= dv;
    if (std::abs(du) + std::abs(dv) < 1e-14) break;
  }
  if (!std::isfinite(u) || !std::isfinite(v)) return {0.5, 0.5};
  return {std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)};
}

struct ZeroSample {
  Vec3 x;
  Vec3 t;  // unit tangent (3D only)
};

std::vector<ZeroSample> zero_samples_with_tangent(const ShapeCurrent& z, double spacing) {
  std::vector<ZeroSample> out;
  if (auto* pts = std::get_if<OrientedPoints>(&z)) {
    for (const auto& x : pts->pos) out.push_back({x, Vec3::Zero()});
    return out;
  }
  const auto& pc = std::get<PolyCurve>(z);
  for (const auto& pl : pc.lines) {
    std::size_t N = pl.v.size();
    std::size_t M = pl.closed ? N : N - 1;
    for (std::size_t i = 0; i < M; ++i) {
      Vec3 a = pl.v[i];
      Vec3 d = pc.amb.delta(a, pl.v[(i + 1) % N]);
      double len = d.norm();
      if (len == 0) continue;
      int k = std::max(1, int(std::ceil(len / spacing)));
      for (int s = 0; s < k; ++s) out.push_back({a + (s + 0.5) / k * d, d / len});
    }
  }
  return out;
}

// per node: distance to and index of the nearest sample
// nearest zero sample for nodes closer than radius; other nodes keep +inf
void nearest(const GridSpec& g, const std::vector<ZeroSample>& zs, double radius, std::vector<double>& dist,
             std::vector<int>& idx) {
  dist.assign(g.nodes(), std::numeric_limits<double>::infinity());
  idx.assign(g.nodes(), -1);
  std::array<int, 3> reach{0, 0, 0};
  for (int a = 0; a < g.m; ++a) reach[a] = std::min(int(std::ceil(radius / g.h(a))) + 1, g.n[a] / 2);
  for (std::size_t s = 0; s < zs.size(); ++s) {
    Vec3 x = g.wrap(zs[s].x);
    std::array<int, 3> base{0, 0, 0};
    for (int a = 0; a < g.m; ++a) base[a] = int(std::floor(x[a] / g.h(a)));
    for (int i = -reach[0]; i <= reach[0]; ++i)
      for (int j = -reach[1]; j <= reach[1]; ++j)
        for (int k = -reach[2]; k <= reach[2]; ++k) {
          int c[3] = {base[0] + i, base[1] + j, base[2] + k};
          for (int a = 0; a < 3; ++a) c[a] = ((c[a] % g.n[a]) + g.n[a]) % g.n[a];
          std::size_t p = g.index(c[0], c[1], c[2]);
          double d = g.min_image(x - g.position(p)).norm();
          if (d < radius && (d < dist[p] || (d == dist[p] && int(s) < idx[p]))) {
            dist[p] = d;
            idx[p] = int(s);
          }
        }
  }
}

// angular average of Im(K u / J u) over unit vectors u of the normal plane
double polar_regular_average(const cplx J[3], const cplx K[3], const Vec3& tangent, int m) {
  Vec3 e1, e2;
  if (m == 2) {
    e1 = Vec3::UnitX();
    e2 = Vec3::UnitY();
  } else {
    Vec3 t = tangent.normalized();
    Vec3 ref = std::abs(t.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    e1 = (ref - ref.dot(t) * t).normalized();
    e2 = t.cross(e1);
  }
  constexpr int K_ANG = 64;
  double acc = 0.0;
  for (int k = 0; k < K_ANG; ++k) {
    double phi = kTwoPi * (k + 0.5) / K_ANG;
    Vec3 u = std::cos(phi) * e1 + std::sin(phi) * e2;
    cplx ju = 0.0, ku = 0.0;
    for (int a = 0; a < m; ++a) {
      ju += J[a] * u[a];
      ku += K[a] * u[a];
    }
    if (std::abs(ju) == 0.0) throw Error("singular dpsi at zero");
    acc += (ku / ju).imag();
  }
  return acc / K_ANG;
}

// chain pierced faces cube to cube into closed polylines; with via_centers
// the cube centers are inserted between consecutive punctures
PolyCurve chain_punctures(const GridSpec& g, const std::vector<int>& w, const std::map<std::size_t, Vec3>& punct,
                          bool via_centers) {
  const std::size_t nf = 3;
  auto cube_of = [&](std::size_t fi) {
    std::size_t p = fi / nf;
    int c = int(fi % nf);
    return w[fi] > 0 ? p : g.shift(p, c, -1);
  };
  auto exit_of = [&](std::size_t fi) {
    std::size_t cube = cube_of(fi);
    std::vector<std::size_t> entries, exits;
    for (int a = 0; a < 3; ++a) {
      std::size_t lo = cube * nf + a, hi = g.shift(cube, a, 1) * nf + a;
      if (w[lo] > 0) entries.push_back(lo);
      if (w[lo] < 0) exits.push_back(lo);
      if (w[hi] > 0) exits.push_back(hi);
      if (w[hi] < 0) entries.push_back(hi);
    }
    if (entries.size() != 1 || exits.size() != 1) throw Error("unmatched punctures");
    return exits[0];
  };
  PolyCurve out;
  out.amb = Ambient::torus(g);
  std::map<std::size_t, bool> seen;
  for (const auto& [f0, x0] : punct) {
    if (seen[f0]) continue;
    Polyline pl;
    pl.closed = true;
    Vec3 prev = x0;
    pl.v.push_back(prev);
    seen[f0] = true;
    std::size_t cur = f0;
    std::size_t guard = 0;
    while (true) {
      if (via_centers) {
        Vec3 c = g.position(cube_of(cur)) + 0.5 * Vec3(g.h(0), g.h(1), g.h(2));
        Vec3 x = prev + g.min_image(c - prev);
        pl.v.push_back(x);
        prev = x;
      }
      cur = exit_of(cur);
      if (cur == f0) break;
      if (seen[cur] || ++guard > punct.size()) throw Error("unmatched punctures");
      seen[cur] = true;
      Vec3 x = prev + g.min_image(punct.at(cur) - prev);
      pl.v.push_back(x);
      prev = x;
    }
    out.lines.push_back(std::move(pl));
  }
  return out;
}

}  // namespace

ImplicitVelocity ImplicitVelocity::from_raw(ComplexField f) {
  ImplicitVelocity v;
  v.kind = Kind::Raw;
  v.raw = std::move(f);
  return v;
}

ImplicitVelocity ImplicitVelocity::generated(VectorField u, ComplexField a) {
  same_grid(u.grid, a.grid);
  ImplicitVelocity v;
  v.kind = Kind::Generated;
  v.u = std::move(u);
  v.a = std::move(a);
  return v;
}

ScalarField distance_to(const GridSpec& g, const std::vector<Vec3>& pts) {
  ScalarField d = make_scalar(g, std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    Vec3 x = g.position(p);
    for (const auto& q : pts) d.v[p] = std::min(d.v[p], g.min_image(q - x).norm());
  }
  return d;
}

ScalarField distance_to_curves(const GridSpec& g, const std::vector<Curve3D>& curves) {
  ScalarField d = make_scalar(g, std::numeric_limits<double>::infinity());
  std::vector<std::pair<Vec3, Vec3>> segs;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.size(); ++i) {
      Vec3 a = c.v[i];
      segs.emplace_back(a, g.min_image(c.v[(i + 1) % c.size()] - a));
    }
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    Vec3 x = g.position(p);
    double best = d.v[p];
    for (const auto& [a, dv] : segs) {
      // nearest periodic image of the segment start relative to x
      Vec3 a0 = x + g.min_image(a - x);
      best = std::min(best, seg_distance(x, a0, dv));
    }
    d.v[p] = best;
  }
  return d;
}

PsiField build_psi_2d(const GridSpec& g, const Points2D& pts, double eps) {
  if (g.m != 2) throw Error("build_psi_2d needs a 2D grid");
  if (!(eps > 0)) throw Error("eps must be positive");
  if (pts.pos.size() != pts.sign.size()) throw Error("points and signs differ in length");
  int total = 0;
  for (int s : pts.sign) total += s;
  if (total != 0) throw Error("no global ψ on T² (nonzero total index)");
  FaceTwoForm F{g, std::vector<double>(g.faces(), 0.0)};
  for (std::size_t i = 0; i < pts.pos.size(); ++i) {
    const Vec3& x = pts.pos[i];
    int a = floor_index(x[0], g.h(0), g.n[0]);
    int b = floor_index(x[1], g.h(1), g.n[1]);
    F.v[g.index(a, b)] += kTwoPi * pts.sign[i];
  }
  auto lam = solve_coulomb_oneform(F);
  quantize_periods(lam);
  auto th = tree_phase(lam);
  // amplitude vanishes on the rasterized zeros (plaquette centers)
  std::vector<Vec3> P;
  for (std::size_t p = 0; p < g.nodes(); ++p)
    if (F.v[p] != 0.0) P.push_back(g.position(p) + Vec3(0.5 * g.h(0), 0.5 * g.h(1), 0.0));
  auto d = distance_to(g, P);
  return {assemble(g, d.v, th, eps), eps};
}

PsiField build_psi_3d(const GridSpec& g, const std::vector<Curve3D>& curves, double eps) {
  if (g.m != 3) throw Error("build_psi_3d needs a 3D grid");
  if (!(eps > 0)) throw Error("eps must be positive");
  FaceTwoForm F{g, std::vector<double>(g.faces(), 0.0)};
  // fixed sub-grid nudge so vertices never sit exactly on grid planes or lines
  const Vec3 nudge = 1e-7 * Vec3(0.31 * g.h(0), 0.47 * g.h(1), 0.73 * g.h(2));
  for (const auto& c : curves) {
    if (c.size() < 3) throw Error("curve needs at least 3 vertices");
    for (std::size_t i = 0; i < c.size(); ++i) {
      Vec3 A = c.v[i] + nudge;
      Vec3 D = g.min_image(c.v[(i + 1) % c.size()] - c.v[i]);
      Vec3 B = A + D;
      for (int ax = 0; ax < 3; ++ax) {
        if (D[ax] == 0.0) continue;
        double h = g.h(ax);
        double lo = std::min(A[ax], B[ax]), hi = std::max(A[ax], B[ax]);
        // planes x_ax = k h with lo < k h <= hi
        long k0 = long(std::floor(lo / h)) + 1, k1 = long(std::floor(hi / h));
        for (long k = k0; k <= k1; ++k) {
          double t = (k * h - A[ax]) / D[ax];
          Vec3 X = A + t * D;
          auto ab = g.face_axes(ax);
          int idx[3];
          idx[ax] = floor_index(k * h + 0.5 * h, h, g.n[ax]);
          idx[ab[0]] = floor_index(X[ab[0]], g.h(ab[0]), g.n[ab[0]]);
          idx[ab[1]] = floor_index(X[ab[1]], g.h(ab[1]), g.n[ab[1]]);
          std::size_t p = g.index(idx[0], idx[1], idx[2]);
          F.v[p * 3 + ax] += kTwoPi * (D[ax] > 0 ? 1.0 : -1.0);
        }
      }
    }
  }
  EdgeOneForm lam;
  try {
    lam = solve_coulomb_oneform(F);
  } catch (const Error& e) {
    if (std::string(e.what()) == "source not exact") throw Error("curve not exact in homology");
    throw;
  }
  quantize_periods(lam);
  auto th = tree_phase(lam);
  // amplitude vanishes on the rasterized curve: pierced face centers joined
  // through cube centers, so amplitude zero and lattice vortex coincide
  std::vector<int> w(F.v.size());
  std::map<std::size_t, Vec3> punct;
  for (std::size_t fi = 0; fi < F.v.size(); ++fi) {
    w[fi] = int(std::lround(F.v[fi] / kTwoPi));
    if (std::abs(w[fi]) >= 2) throw Error("degenerate zero");
    if (w[fi] == 0) continue;
    auto ab = g.face_axes(int(fi % 3));
    Vec3 x = g.position(fi / 3);
    x[ab[0]] += 0.5 * g.h(ab[0]);
    x[ab[1]] += 0.5 * g.h(ab[1]);
    punct.emplace(fi, x);
  }
  std::vector<Curve3D> raster;
  for (const auto& pl : chain_punctures(g, w, punct, true).lines) raster.push_back(Curve3D{Ambient::euclidean(3), pl.v});
  auto d = distance_to_curves(g, raster);
  return {assemble(g, d.v, th, eps), eps};
}

EdgeOneForm circle_differential(const ComplexField& psi) {
  const auto& g = psi.grid;
  require_finite(psi.v, "psi");
  EdgeOneForm lam{g, std::vector<double>(g.edges())};
  for (std::size_t p = 0; p < g.nodes(); ++p)
    for (int a = 0; a < g.m; ++a) {
      cplx t = psi.v[p], h = psi.v[g.shift(p, a, 1)];
      if (std::abs(t) < 1e-8 && std::abs(h) < 1e-8) throw Error("circle differential undefined on edge inside zero tube");
      double v = std::arg(h * std::conj(t));
      if (v == -std::numbers::pi) v = std::numbers::pi;
      lam.v[p * g.m + a] = v;
    }
  return lam;
}

std::vector<int> face_windings(const ComplexField& psi) {
  auto F = plaquette_circulation(circle_differential(psi));
  std::vector<int> w(F.v.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = int(std::lround(F.v[i] / kTwoPi));
  return w;
}

ShapeCurrent zero_set(const PsiField& psi) {
  const auto& g = psi.grid();
  const auto& f = psi.field.v;
  auto w = face_windings(psi.field);
  for (int x : w)
    if (std::abs(x) >= 2) throw Error("degenerate zero");

  if (g.m == 2) {
    OrientedPoints out;
    out.amb = Ambient::torus(g);
    for (std::size_t p = 0; p < g.nodes(); ++p) {
      if (w[p] == 0) continue;
      std::size_t p10 = g.shift(p, 0, 1), p01 = g.shift(p, 1, 1), p11 = g.shift(p10, 1, 1);
      auto [u, v] = bilinear_zero(f[p], f[p10], f[p11], f[p01]);
      Vec3 x = g.position(p) + Vec3(u * g.h(0), v * g.h(1), 0.0);
      out.pos.push_back(g.wrap(x));
      out.sign.push_back(w[p]);
    }
    return out;
  }

  // punctures on 3D faces
  const std::size_t nf = 3;
  std::map<std::size_t, Vec3> punct;
  for (std::size_t p = 0; p < g.nodes(); ++p)
    for (int c = 0; c < 3; ++c) {
      std::size_t fi = p * nf + c;
      if (w[fi] == 0) continue;
      auto ab = g.face_axes(c);
      std::size_t pa = g.shift(p, ab[0], 1), pb = g.shift(p, ab[1], 1), pab = g.shift(pa, ab[1], 1);
      auto [u, v] = bilinear_zero(f[p], f[pa], f[pab], f[pb]);
      Vec3 x = g.position(p);
      x[ab[0]] += u * g.h(ab[0]);
      x[ab[1]] += v * g.h(ab[1]);
      punct.emplace(fi, x);
    }
  return chain_punctures(g, w, punct, false);
}

std::vector<Vec3> zero_samples(const ShapeCurrent& z, double spacing) {
  std::vector<Vec3> out;
  for (const auto& s : zero_samples_with_tangent(z, spacing)) out.push_back(s.x);
  return out;
}

void validate_psi(const PsiField& psi) {
  const auto& g = psi.grid();
  auto z = zero_set(psi);
  auto zs = zero_samples(z, 0.5 * g.max_h());
  if (zs.empty()) throw Error("empty zero set");
  auto d = distance_to(g, zs);
  for (std::size_t p = 0; p < g.nodes(); ++p)
    if (d.v[p] > 3 * psi.eps && std::abs(psi.field.v[p]) < 0.5) throw Error("psi amplitude below 0.5 off the zero tube");
}

PsiField heat_smooth(const PsiField& psi, int steps) {
  if (steps < 0) throw Error("smoothing steps must be non-negative");
  const auto& g = psi.grid();
  double w = 0.0;
  for (int a = 0; a < g.m; ++a) w += 2.0 / (g.h(a) * g.h(a));
  // 0.1 h^2 per step on a cubic 3D grid; stability needs tau * w <= 1
  const double tau = 0.6 / w;
  PsiField out = psi;
  for (int it = 0; it < steps; ++it) {
    const auto f = out.field.v;
    for (std::size_t p = 0; p < g.nodes(); ++p) {
      cplx lap = 0.0;
      for (int a = 0; a < g.m; ++a)
        lap += (f[g.shift(p, a, 1)] - 2.0 * f[p] + f[g.shift(p, a, -1)]) / (g.h(a) * g.h(a));
      out.field.v[p] = f[p] + tau * lap;
    }
  }
  return out;
}

std::array<ComplexField, 3> nodal_gradient(const ComplexField& f) {
  const auto& g = f.grid;
  std::array<ComplexField, 3> out{make_complex(g), make_complex(g), make_complex(g)};
  for (std::size_t p = 0; p < g.nodes(); ++p)
    for (int a = 0; a < g.m; ++a)
      out[a].v[p] = (8.0 * (f.v[g.shift(p, a, 1)] - f.v[g.shift(p, a, -1)]) -
                     (f.v[g.shift(p, a, 2)] - f.v[g.shift(p, a, -2)])) /
                    (12.0 * g.h(a));
  return out;
}

void sample_with_gradient(const ComplexField& f, const Vec3& x, cplx& value, cplx grad[3]) {
  const auto& g = f.grid;
  const int m = g.m;
  int base[3] = {0, 0, 0};
  double t[3] = {0, 0, 0};
  for (int a = 0; a < m; ++a) {
    double s = x[a] / g.h(a);
    double fl = std::floor(s);
    t[a] = s - fl;
    base[a] = int(((long(fl) % g.n[a]) + g.n[a]) % g.n[a]);
  }
  std::size_t p0 = g.index(base[0], base[1], base[2]);
  value = 0.0;
  for (int a = 0; a < 3; ++a) grad[a] = 0.0;
  for (int b = 0; b < (1 << m); ++b) {
    std::size_t p = p0;
    double wts[3];
    for (int a = 0; a < m; ++a) {
      int bit = (b >> a) & 1;
      if (bit) p = g.shift(p, a, 1);
      wts[a] = bit ? t[a] : 1 - t[a];
    }
    double w = 1.0;
    for (int a = 0; a < m; ++a) w *= wts[a];
    value += w * f.v[p];
    for (int a = 0; a < m; ++a) {
      double dw = ((b >> a) & 1 ? 1.0 : -1.0) / g.h(a);
      for (int c = 0; c < m; ++c)
        if (c != a) dw *= wts[c];
      grad[a] += dw * f.v[p];
    }
  }
}

double lambda_flux(const EdgeOneForm& lam, const VectorField& u) {
  const auto& g = lam.grid;
  same_grid(g, u.grid);
  require_finite(lam.v, "lambda");
  std::vector<double> terms(g.edges());
  for (std::size_t p = 0; p < g.nodes(); ++p)
    for (int a = 0; a < g.m; ++a) {
      double ua = 0.5 * (u.v[p][a] + u.v[g.shift(p, a, 1)][a]);
      terms[p * g.m + a] = ua * lam.v[p * g.m + a] * g.edge_dual(a);
    }
  return stable_sum(terms);
}

double lambda_flux(const PsiField& psi, const VectorField& u) {
  return lambda_flux(circle_differential(psi.field), u);
}

double theta(const PsiField& psi, const ImplicitVelocity& v, RawQuadrature q) {
  const auto& g = psi.grid();
  const double cell = g.cell_measure();
  if (v.kind == ImplicitVelocity::Kind::Generated) {
    same_grid(g, v.u.grid);
    same_grid(g, v.a.grid);
    std::vector<double> ia(g.nodes());
    for (std::size_t p = 0; p < g.nodes(); ++p) ia[p] = v.a.v[p].imag() * cell;
    return (stable_sum(ia) - lambda_flux(psi, v.u)) / kTwoPi;
  }
  same_grid(g, v.raw.grid);
  const auto& f = psi.field.v;
  const auto& r = v.raw.v;
  std::vector<double> terms(g.nodes(), 0.0);
  auto integrand = [&](std::size_t p) {
    double a2 = std::norm(f[p]);
    return a2 > 0 ? (r[p] * std::conj(f[p])).imag() / a2 : 0.0;
  };
  if (q == RawQuadrature::Node) {
    for (std::size_t p = 0; p < g.nodes(); ++p) terms[p] = integrand(p) * cell;
    return stable_sum(terms) / kTwoPi;
  }
  auto zs = zero_samples_with_tangent(zero_set(psi), 0.5 * g.max_h());
  std::vector<double> dist;
  std::vector<int> idx;
  nearest(g, zs, psi.eps, dist, idx);
  std::vector<double> fbar(zs.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    if (dist[p] >= psi.eps) {
      terms[p] = integrand(p) * cell;
      continue;
    }
    int s = idx[p];
    if (std::isnan(fbar[s])) {
      cplx val, J[3], K[3];
      sample_with_gradient(psi.field, zs[s].x, val, J);
      sample_with_gradient(v.raw, zs[s].x, val, K);
      fbar[s] = polar_regular_average(J, K, zs[s].t, g.m);
    }
    terms[p] = fbar[s] * cell;
  }
  return stable_sum(terms) / kTwoPi;
}

ImplicitVelocity make_velocity(const PsiField& psi, const VectorField& u, const ComplexField& a) {
  same_grid(psi.grid(), u.grid);
  same_grid(psi.grid(), a.grid);
  return ImplicitVelocity::generated(u, a);
}

ComplexField realize(const PsiField& psi, const ImplicitVelocity& v) {
  const auto& g = psi.grid();
  if (v.kind == ImplicitVelocity::Kind::Raw) {
    same_grid(g, v.raw.grid);
    return v.raw;
  }
  same_grid(g, v.u.grid);
  const auto& f = psi.field.v;
  ComplexField out = make_complex(g);
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    cplx acc = v.a.v[p] * f[p];
    for (int a = 0; a < g.m; ++a) {
      cplx d = (8.0 * (f[g.shift(p, a, 1)] - f[g.shift(p, a, -1)]) - (f[g.shift(p, a, 2)] - f[g.shift(p, a, -2)])) /
               (12.0 * g.h(a));
      acc -= v.u.v[p][a] * d;
    }
    out.v[p] = acc;
  }
  return out;
}

PsiField group_act(const PsiField& psi, double c, const std::vector<int>& k) {
  const auto& g = psi.grid();
  if (int(k.size()) != g.m) throw Error("twist vector needs one entry per torus axis");
  PsiField out = psi;
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    Vec3 x = g.position(p);
    double ph = c;
    for (int a = 0; a < g.m; ++a) ph += kTwoPi * k[a] * x[a] / g.L[a];
    out.field.v[p] *= std::polar(1.0, ph);
  }
  return out;
}

namespace {
void check_shear(const GridSpec& g) {
  if (g.n[0] != g.n[1] || g.L[0] != g.L[1]) throw Error("shear needs equal resolution and length on axes 0 and 1");
}
std::size_t sheared_source(const GridSpec& g, std::size_t p, int k) {
  auto c = g.coords(p);
  long i = (long(c[0]) - long(k) * c[1]) % g.n[0];
  if (i < 0) i += g.n[0];
  return g.index(int(i), c[1], c[2]);
}
}  // namespace

ComplexField shear(const ComplexField& f, int k) {
  check_shear(f.grid);
  ComplexField out = f;
  for (std::size_t p = 0; p < f.grid.nodes(); ++p) out.v[p] = f.v[sheared_source(f.grid, p, k)];
  return out;
}

PsiField shear(const PsiField& psi, int k) { return {shear(psi.field, k), psi.eps}; }

VectorField shear_pushforward(const VectorField& u, int k) {
  check_shear(u.grid);
  VectorField out = u;
  for (std::size_t p = 0; p < u.grid.nodes(); ++p) {
    Vec3 w = u.v[sheared_source(u.grid, p, k)];
    w[0] += k * w[1];
    out.v[p] = w;
  }
  return out;
}

double boundary_pairing(const PsiField& psi, const TestForm& alpha, int sub) {
  const auto& g = psi.grid();
  if (alpha.degree != g.m - 2 || alpha.m != g.m) throw Error("degree mismatch between current and test form");
  if (sub < 1) throw Error("sub-sampling must be positive");
  const int m = g.m;
  const int per = m == 2 ? sub * sub : sub * sub * sub;
  const double w = g.cell_measure() / per;
  std::vector<double> cells(g.nodes());
  std::vector<double> local(per);
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    Vec3 x0 = g.position(p);
    int s = 0;
    for (int i = 0; i < sub; ++i)
      for (int j = 0; j < sub; ++j)
        for (int k = 0; k < (m == 3 ? sub : 1); ++k, ++s) {
          Vec3 x = x0;
          x[0] += (i + 0.5) / sub * g.h(0);
          x[1] += (j + 0.5) / sub * g.h(1);
          if (m == 3) x[2] += (k + 0.5) / sub * g.h(2);
          cplx val, grad[3];
          sample_with_gradient(psi.field, x, val, grad);
          double a2 = std::norm(val);
          if (a2 == 0.0) {
            local[s] = 0.0;
            continue;
          }
          double lam[3];
          for (int a = 0; a < m; ++a) lam[a] = (grad[a] * std::conj(val)).imag() / a2;
          auto b = alpha.dcoef(x);
          local[s] = m == 2 ? (lam[0] * b[1] - lam[1] * b[0]) * w
                            : (lam[0] * b[0] + lam[1] * b[1] + lam[2] * b[2]) * w;
        }
    cells[p] = stable_sum(local);
  }
  return stable_sum(cells);
}

}  // namespace c2
