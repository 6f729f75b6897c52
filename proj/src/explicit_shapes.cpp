#include "codim2/explicit_shapes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace c2 {

namespace {

double det3(const Vec3& a, const Vec3& b, const Vec3& c) { return a.dot(b.cross(c)); }

// half the central chord (gamma_{i+1} - gamma_{i-1}) / 2 = D_s gamma * dual weight
std::vector<Vec3> half_chords(const Curve3D& c) {
  const std::size_t N = c.size();
  std::vector<Vec3> T(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec3& prev = c.v[(i + N - 1) % N];
    const Vec3& next = c.v[(i + 1) % N];
    T[i] = 0.5 * c.amb.delta(prev, next);
  }
  return T;
}

void require_closed(const Curve3D& c) {
  if (c.size() < 3) throw Error("curve needs at least 3 vertices");
}

void require_match(std::size_t n, const ShapeVelocity& v) {
  if (v.size() != n) throw Error("velocity size does not match shape");
}

// vertices relative to a local frame; R^3 only for origin-dependent quantities
void require_euclidean(const Curve3D& c) {
  if (c.amb.periodic()) throw Error("requires exact volume form");
}

double seg_seg_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0, t = 0;
  if (a <= 1e-300 && e <= 1e-300) return r.norm();
  if (a <= 1e-300) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double cc = d1.dot(r);
    if (e <= 1e-300) {
      s = std::clamp(-cc / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2), den = a * e - b * b;
      s = den != 0 ? std::clamp((b * f - cc * e) / den, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-cc / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - cc) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + d1 * s) - (q0 + d2 * t)).norm();
}

}  // namespace

CurveJets curve_jets(const Curve3D& c) {
  require_closed(c);
  const std::size_t N = c.size();
  CurveJets J;
  J.t.resize(N);
  J.k.resize(N);
  J.w.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    Vec3 dm = c.amb.delta(c.v[(i + N - 1) % N], c.v[i]);
    Vec3 dp = c.amb.delta(c.v[i], c.v[(i + 1) % N]);
    double lm = dm.norm(), lp = dp.norm();
    if (lm == 0.0 || lp == 0.0) throw Error("zero tangent");
    J.t[i] = (dm + dp) / (lm + lp);
    J.k[i] = 2.0 * (dp / lp - dm / lm) / (lm + lp);
    J.w[i] = 0.5 * (lm + lp);
  }
  return J;
}

double curve_length(const Curve3D& c) {
  double L = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) L += c.amb.delta(c.v[i], c.v[(i + 1) % c.size()]).norm();
  return L;
}

double mean_spacing(const Curve3D& c) { return curve_length(c) / double(c.size()); }

double mw_form(const Points2D& p, const ShapeVelocity& v, const ShapeVelocity& w) {
  require_match(p.pos.size(), v);
  require_match(p.pos.size(), w);
  if (p.sign.size() != p.pos.size()) throw Error("signs do not match points");
  double s = 0.0;
  for (std::size_t j = 0; j < p.pos.size(); ++j) s += p.sign[j] * (v[j][0] * w[j][1] - v[j][1] * w[j][0]);
  return s;
}

double mw_form(const Curve3D& c, const ShapeVelocity& v, const ShapeVelocity& w) {
  require_closed(c);
  require_match(c.size(), v);
  require_match(c.size(), w);
  auto T = half_chords(c);
  std::vector<double> terms(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) terms[i] = det3(T[i], v[i], w[i]);
  return stable_sum(terms);
}

double liouville_eta_curve(const Curve3D& c, const ShapeVelocity& v) {
  require_euclidean(c);
  require_closed(c);
  require_match(c.size(), v);
  auto T = half_chords(c);
  std::vector<double> terms(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) terms[i] = det3(c.v[i], v[i], T[i]);
  return stable_sum(terms) / 3.0;
}

TestForm nu_symmetric() {
  TestForm t;
  t.degree = 2;
  t.m = 3;
  t.coef = [](const Vec3& x) { return std::vector<double>{x[0] / 3.0, x[1] / 3.0, x[2] / 3.0}; };
  t.dcoef = [](const Vec3&) { return std::vector<double>{1.0}; };
  return t;
}

TestForm nu_single_axis() {
  TestForm t;
  t.degree = 2;
  t.m = 3;
  t.coef = [](const Vec3& x) { return std::vector<double>{x[0], 0.0, 0.0}; };
  t.dcoef = [](const Vec3&) { return std::vector<double>{1.0}; };
  return t;
}

double liouville_eta_general(const Curve3D& c, const ShapeVelocity& v, const TestForm& nu) {
  require_euclidean(c);
  require_closed(c);
  require_match(c.size(), v);
  if (nu.degree != 2 || nu.m != 3 || !nu.dcoef) throw Error("nu must be a 2-form on R^3");
  // d(nu) = mu checked at the shape's vertices and a few fixed probes
  std::vector<Vec3> probes = c.v;
  probes.push_back(Vec3(0.3, -1.7, 2.1));
  probes.push_back(Vec3(-4.0, 0.5, 0.25));
  for (const auto& x : probes)
    if (std::abs(nu.dcoef(x).at(0) - 1.0) > 1e-9) throw Error("d(nu) is not the volume form");
  auto T = half_chords(c);
  std::vector<double> terms(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    Vec3 vv[2] = {v[i], T[i]};
    terms[i] = eval_form(2, 3, nu.coef(c.v[i]), vv);
  }
  return stable_sum(terms);
}

// D_s gamma x D_s^2 gamma written on the two chords at a vertex: the turning
// angle enters as 2 tan(theta/2) instead of sin(theta), which keeps the
// semi-discrete flow's linear and angular momenta exact on equal-edge polygons
ShapeVelocity binormal_velocity(const Curve3D& c) {
  require_closed(c);
  const std::size_t N = c.size();
  ShapeVelocity v(N);
  for (std::size_t i = 0; i < N; ++i) {
    Vec3 dm = c.amb.delta(c.v[(i + N - 1) % N], c.v[i]);
    Vec3 dp = c.amb.delta(c.v[i], c.v[(i + 1) % N]);
    double lm = dm.norm(), lp = dp.norm();
    if (lm == 0.0 || lp == 0.0) throw Error("zero tangent");
    double den = 0.5 * (lm + lp) * (lm * lp + dm.dot(dp));
    if (!(den > 0.0)) throw Error("curve folds back on itself");
    v[i] = 2.0 * dm.cross(dp) / den;
  }
  return v;
}

void check_self_intersection(const Curve3D& c) {
  const std::size_t N = c.size();
  double tol = 0.1 * mean_spacing(c);
  // segments i and j, skipping neighbours
  for (std::size_t i = 0; i < N; ++i) {
    Vec3 a0 = c.v[i], a1 = c.v[i] + c.amb.delta(c.v[i], c.v[(i + 1) % N]);
    for (std::size_t j = i + 2; j < N; ++j) {
      if (i == 0 && j == N - 1) continue;
      Vec3 b0 = a0 + c.amb.delta(a0, c.v[j]);
      Vec3 b1 = b0 + c.amb.delta(c.v[j], c.v[(j + 1) % N]);
      if ((b0 - a0).norm() > tol + (a1 - a0).norm() + (b1 - b0).norm()) continue;
      if (seg_seg_distance(a0, a1, b0, b1) < tol) throw Error("reconnection out of scope");
    }
  }
}

Curve3D resample_uniform(const Curve3D& c, std::size_t N) {
  const std::size_t M = c.size();
  std::vector<double> s(M + 1, 0.0);
  for (std::size_t i = 0; i < M; ++i) s[i + 1] = s[i] + c.amb.delta(c.v[i], c.v[(i + 1) % M]).norm();
  double L = s[M];
  Curve3D out;
  out.amb = c.amb;
  out.v.resize(N);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < N; ++k) {
    double target = L * double(k) / double(N);
    while (seg + 1 < M && s[seg + 1] <= target) ++seg;
    double len = s[seg + 1] - s[seg];
    double t = len > 0 ? (target - s[seg]) / len : 0.0;
    out.v[k] = c.v[seg] + t * c.amb.delta(c.v[seg], c.v[(seg + 1) % M]);
  }
  return out;
}

Curve3D binormal_step(const Curve3D& c, double dt, const BinormalOptions& opt) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  require_closed(c);
  auto add = [&](const Curve3D& base, const ShapeVelocity& k, double f) {
    Curve3D r = base;
    for (std::size_t i = 0; i < r.size(); ++i) r.v[i] += f * k[i];
    return r;
  };
  auto k1 = binormal_velocity(c);
  auto k2 = binormal_velocity(add(c, k1, 0.5 * dt));
  auto k3 = binormal_velocity(add(c, k2, 0.5 * dt));
  auto k4 = binormal_velocity(add(c, k3, dt));
  Curve3D out = c;
  for (std::size_t i = 0; i < c.size(); ++i)
    out.v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  if (opt.resample) {
    double hbar = mean_spacing(out);
    bool bad = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      double l = out.amb.delta(out.v[i], out.v[(i + 1) % out.size()]).norm();
      if (l < opt.band_lo * hbar || l > opt.band_hi * hbar) bad = true;
    }
    if (bad) out = resample_uniform(out, out.size());
  }
  check_self_intersection(out);
  return out;
}

Vec3 momentum_so3(const Curve3D& c) {
  require_euclidean(c);
  require_closed(c);
  auto T = half_chords(c);
  Vec3 J;
  for (int a = 0; a < 3; ++a) {
    Vec3 xi = Vec3::Unit(a);
    std::vector<double> terms(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) terms[i] = det3(T[i], c.v[i], xi.cross(c.v[i]));
    J[a] = -stable_sum(terms) / 3.0;
  }
  return J;
}

Vec3 linear_momentum(const Curve3D& c) {
  require_euclidean(c);
  auto T = half_chords(c);
  Vec3 P = Vec3::Zero();
  for (std::size_t i = 0; i < c.size(); ++i) P += 0.5 * c.v[i].cross(T[i]);
  return P;
}

ShapeVelocity rotate_normal_J(const Curve3D& c, const ShapeVelocity& v) {
  require_closed(c);
  require_match(c.size(), v);
  auto T = half_chords(c);
  ShapeVelocity out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    double n = T[i].norm();
    if (!(n > 0.0)) throw Error("zero tangent");
    Vec3 t = T[i] / n;
    Vec3 vn = v[i] - v[i].dot(t) * t;
    // det(t, J v, v) = |v_n|^2 >= 0
    out[i] = vn.cross(t);
  }
  return out;
}

double metric_G(const Curve3D& c, const ShapeVelocity& v, const ShapeVelocity& w) {
  // omega(J v, w): symmetric and positive with the orientation fixed in rotate_normal_J
  return mw_form(c, rotate_normal_J(c, v), w);
}

Curve3D make_circle(double r, std::size_t N, const Vec3& center, const Vec3& axis, double phase) {
  Vec3 n = axis.normalized();
  Vec3 e1 = (std::abs(n[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
  e1 = (e1 - e1.dot(n) * n).normalized();
  Vec3 e2 = n.cross(e1);
  Curve3D c;
  c.v.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    double th = phase + 2.0 * std::numbers::pi * double(i) / double(N);
    c.v[i] = center + r * (std::cos(th) * e1 + std::sin(th) * e2);
  }
  return c;
}

Curve3D make_ellipse(double a, double b, std::size_t N, const Vec3& center) {
  Curve3D c;
  c.v.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    double th = 2.0 * std::numbers::pi * double(i) / double(N);
    c.v[i] = center + Vec3(a * std::cos(th), b * std::sin(th), 0.0);
  }
  return c;
}

Curve3D translated(const Curve3D& c, const Vec3& d) {
  Curve3D out = c;
  for (auto& x : out.v) x += d;
  return out;
}

Curve3D reversed(const Curve3D& c) {
  Curve3D out = c;
  std::reverse(out.v.begin(), out.v.end());
  return out;
}

ShapeVelocity constant_velocity(std::size_t n, const Vec3& u) { return ShapeVelocity(n, u); }

PolyCurve to_polycurve(const Curve3D& c) {
  PolyCurve p;
  p.amb = c.amb;
  p.lines.push_back({c.v, true});
  return p;
}

// ---------------------------------------------------------------------------
// I/O

namespace {
using json = nlohmann::json;

json vec_list(const std::vector<Vec3>& v, int m) {
  json a = json::array();
  for (const auto& x : v) a.push_back(std::vector<double>(x.data(), x.data() + m));
  return a;
}

std::vector<Vec3> parse_vecs(const json& a) {
  std::vector<Vec3> out;
  for (const auto& e : a) {
    Vec3 x = Vec3::Zero();
    for (std::size_t k = 0; k < e.size() && k < 3; ++k) x[k] = e.at(k).get<double>();
    out.push_back(x);
  }
  return out;
}
}  // namespace

void save_curve_json(const std::string& path, const Curve3D& c) {
  json j;
  j["vertices"] = vec_list(c.v, 3);
  j["closed"] = true;
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << j.dump(1) << "\n";
}

Curve3D load_curve(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  Curve3D c;
  if (path.size() > 4 && path.substr(path.size() - 4) == ".obj") {
    std::vector<Vec3> verts;
    std::vector<int> order;
    std::string line;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      std::string tag;
      ls >> tag;
      if (tag == "v") {
        Vec3 x;
        ls >> x[0] >> x[1] >> x[2];
        verts.push_back(x);
      } else if (tag == "l") {
        int id;
        while (ls >> id) order.push_back(id - 1);
      }
    }
    if (order.empty())
      c.v = verts;
    else {
      if (order.size() > 1 && order.front() == order.back()) order.pop_back();
      for (int id : order) c.v.push_back(verts.at(id));
    }
  } else {
    json j = json::parse(is);
    if (j.contains("closed") && !j["closed"].get<bool>()) throw Error("curve must be closed");
    c.v = parse_vecs(j.at("vertices"));
  }
  require_closed(c);
  return c;
}

void save_points_json(const std::string& path, const Points2D& p) {
  json j;
  j["vertices"] = vec_list(p.pos, 2);
  j["signs"] = p.sign;
  j["closed"] = true;
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << j.dump(1) << "\n";
}

Points2D load_points(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  json j = json::parse(is);
  Points2D p;
  p.pos = parse_vecs(j.at("vertices"));
  if (j.contains("signs"))
    p.sign = j["signs"].get<std::vector<int>>();
  else
    p.sign.assign(p.pos.size(), 1);
  if (p.sign.size() != p.pos.size()) throw Error("signs do not match vertices");
  return p;
}

}  // namespace c2
