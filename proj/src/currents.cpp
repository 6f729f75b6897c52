#include "codim2/currents.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace c2 {

Ambient Ambient::torus(const GridSpec& g) {
  Ambient a;
  a.m = g.m;
  for (int i = 0; i < g.m; ++i) a.period[i] = g.L[i];
  return a;
}

Vec3 Ambient::delta(const Vec3& a, const Vec3& b) const {
  Vec3 d = b - a;
  for (int i = 0; i < 3; ++i)
    if (period[i] > 0) d[i] -= period[i] * std::round(d[i] / period[i]);
  return d;
}

std::size_t PolyCurve::segments() const {
  std::size_t s = 0;
  for (const auto& l : lines)
    if (l.v.size() >= 2) s += l.closed ? l.v.size() : l.v.size() - 1;
  return s;
}

int current_dimension(const ShapeCurrent& c) {
  return std::visit(
      [](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, OrientedPoints>) return 0;
        if constexpr (std::is_same_v<T, PolyCurve>) return 1;
        return 2;
      },
      c);
}

TestForm TestForm::d() const {
  if (!dcoef) throw Error("test form has no closed-form derivative");
  TestForm out;
  out.degree = degree + 1;
  out.m = m;
  out.coef = dcoef;
  // d(d alpha) = 0
  int nc = (out.degree == 1) ? m : (out.degree == 2 ? (m == 3 ? 3 : 1) : 1);
  out.dcoef = [nc](const Vec3&) { return std::vector<double>(nc, 0.0); };
  return out;
}

double eval_form(int degree, int m, const std::vector<double>& c, const Vec3* v) {
  switch (degree) {
    case 0: return c.at(0);
    case 1: {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += c.at(i) * v[0][i];
      return s;
    }
    case 2:
      if (m == 2) return c.at(0) * (v[0][0] * v[1][1] - v[0][1] * v[1][0]);
      return Vec3(c.at(0), c.at(1), c.at(2)).dot(v[0].cross(v[1]));
    case 3: {
      Eigen::Matrix3d M;
      M << v[0], v[1], v[2];
      return c.at(0) * M.determinant();
    }
  }
  throw Error("unsupported form degree");
}

namespace {

template <class F>
void for_segments(const PolyCurve& c, F&& f) {
  for (const auto& l : c.lines) {
    std::size_t n = l.v.size();
    if (n < 2) continue;
    std::size_t segs = l.closed ? n : n - 1;
    for (std::size_t i = 0; i < segs; ++i) f(l.v[i], l.v[(i + 1) % n]);
  }
}

}  // namespace

PolyCurve boundary(const TriSurface& s) {
  // undirected incidence count
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : s.tri)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  for (const auto& [k, c] : count)
    if (c > 2) throw Error("non-manifold edge");
  // boundary edges in triangle order, keyed by tail vertex
  std::multimap<int, int> next;
  std::vector<std::pair<int, int>> order;
  for (const auto& t : s.tri)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (count[{std::min(a, b), std::max(a, b)}] == 1) {
        next.emplace(a, b);
        order.emplace_back(a, b);
      }
    }
  std::map<std::pair<int, int>, bool> used;
  std::map<int, int> indeg;
  for (const auto& [a, b] : order) ++indeg[b];
  PolyCurve out;
  out.amb = s.amb;
  auto take = [&](int a) -> int {
    auto range = next.equal_range(a);
    for (auto it = range.first; it != range.second; ++it)
      if (!used[{a, it->second}]) {
        used[{a, it->second}] = true;
        return it->second;
      }
    return -1;
  };
  auto trace = [&](int start) {
    Polyline pl;
    pl.v.push_back(s.v[start]);
    int cur = start;
    while (true) {
      int nx = take(cur);
      if (nx < 0) {
        pl.closed = false;
        break;
      }
      if (nx == start) {
        pl.closed = true;
        break;
      }
      pl.v.push_back(s.v[nx]);
      cur = nx;
    }
    out.lines.push_back(std::move(pl));
  };
  // open chains start at vertices with no incoming boundary edge
  for (const auto& [a, b] : order)
    if (!used[{a, b}] && indeg[a] == 0) trace(a);
  for (const auto& [a, b] : order)
    if (!used[{a, b}]) trace(a);
  return out;
}

double pair(const ShapeCurrent& c, const TestForm& alpha) {
  int dim = current_dimension(c);
  if (alpha.degree != dim) throw Error("degree mismatch between current and test form");
  if (const auto* p = std::get_if<OrientedPoints>(&c)) {
    double s = 0.0;
    for (std::size_t j = 0; j < p->pos.size(); ++j)
      s += p->sign[j] * alpha.coef(p->pos[j]).at(0);
    return s;
  }
  if (const auto* pc = std::get_if<PolyCurve>(&c)) {
    double s = 0.0;
    for_segments(*pc, [&](const Vec3& a, const Vec3& b) {
      Vec3 d = pc->amb.delta(a, b);
      s += eval_form(1, alpha.m, alpha.coef(a + 0.5 * d), &d);
    });
    return s;
  }
  const auto& ts = std::get<TriSurface>(c);
  double s = 0.0;
  for (const auto& t : ts.tri) {
    Vec3 e[2] = {ts.amb.delta(ts.v[t[0]], ts.v[t[1]]), ts.amb.delta(ts.v[t[0]], ts.v[t[2]])};
    Vec3 cen = ts.v[t[0]] + (e[0] + e[1]) / 3.0;
    s += 0.5 * eval_form(2, alpha.m, alpha.coef(cen), e);
  }
  return s;
}

double flux(const TriSurface& s, const VecFn& u) {
  double acc = 0.0;
  for (const auto& t : s.tri) {
    Vec3 e0 = s.amb.delta(s.v[t[0]], s.v[t[1]]);
    Vec3 e1 = s.amb.delta(s.v[t[0]], s.v[t[2]]);
    Vec3 cen = s.v[t[0]] + (e0 + e1) / 3.0;
    acc += 0.5 * u(cen).dot(e0.cross(e1));
  }
  return acc;
}

double flux(const PolyCurve& c, const VecFn& u) {
  double acc = 0.0;
  for_segments(c, [&](const Vec3& a, const Vec3& b) {
    Vec3 d = c.amb.delta(a, b);
    Vec3 w = u(a + 0.5 * d);
    acc += w[0] * d[1] - w[1] * d[0];
  });
  return acc;
}

double total_length(const PolyCurve& c) {
  double L = 0.0;
  for_segments(c, [&](const Vec3& a, const Vec3& b) { L += c.amb.delta(a, b).norm(); });
  return L;
}

double total_area(const TriSurface& s) {
  double A = 0.0;
  for (const auto& t : s.tri)
    A += 0.5 * s.amb.delta(s.v[t[0]], s.v[t[1]]).cross(s.amb.delta(s.v[t[0]], s.v[t[2]])).norm();
  return A;
}

std::vector<Vec3> sample_points(const PolyCurve& c, double spacing) {
  std::vector<Vec3> out;
  for_segments(c, [&](const Vec3& a, const Vec3& b) {
    Vec3 d = c.amb.delta(a, b);
    int k = std::max(1, int(std::ceil(d.norm() / spacing)));
    for (int i = 0; i < k; ++i) out.push_back(a + d * (double(i) / k));
  });
  for (const auto& l : c.lines)
    if (!l.closed && !l.v.empty()) out.push_back(l.v.back());
  return out;
}

double hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b, const Ambient& amb) {
  if (a.empty() || b.empty()) return (a.empty() && b.empty()) ? 0.0 : INFINITY;
  auto directed = [&](const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    double worst = 0.0;
    for (const auto& p : x) {
      double best = INFINITY;
      for (const auto& q : y) best = std::min(best, amb.delta(p, q).squaredNorm());
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

std::string obj_string(const ShapeCurrent& c) {
  std::ostringstream os;
  os.precision(17);
  if (const auto* p = std::get_if<OrientedPoints>(&c)) {
    for (std::size_t j = 0; j < p->pos.size(); ++j)
      os << "v " << p->pos[j][0] << " " << p->pos[j][1] << " " << p->pos[j][2] << "\n";
    return os.str();
  }
  if (const auto* pc = std::get_if<PolyCurve>(&c)) {
    std::size_t base = 1;
    for (const auto& l : pc->lines) {
      for (const auto& v : l.v) os << "v " << v[0] << " " << v[1] << " " << v[2] << "\n";
      os << "l";
      for (std::size_t i = 0; i < l.v.size(); ++i) os << " " << base + i;
      if (l.closed && !l.v.empty()) os << " " << base;
      os << "\n";
      base += l.v.size();
    }
    return os.str();
  }
  const auto& s = std::get<TriSurface>(c);
  for (const auto& v : s.v) os << "v " << v[0] << " " << v[1] << " " << v[2] << "\n";
  for (const auto& t : s.tri) os << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  return os.str();
}

void write_obj(const std::string& path, const ShapeCurrent& c) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << obj_string(c);
}

void write_pairing_csv(const std::string& path, const std::vector<PairingRow>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os.precision(17);
  os << "id,degree,value\n";
  for (const auto& r : rows) os << r.id << "," << r.degree << "," << r.value << "\n";
}

// ---------------------------------------------------------------------------
// trigonometric test forms

namespace {

// product basis: per axis {1, cos, sin} of 2*pi*x/L; 3^m functions
struct TrigScalar {
  int m;
  Vec3 L;
  std::vector<double> c;

  void eval(const Vec3& x, double& f, Vec3& grad) const {
    f = 0.0;
    grad.setZero();
    // per axis: {1, cos, sin} and their derivatives
    double tv[3][3], td[3][3];
    for (int a = 0; a < m; ++a) {
      double k = 2.0 * std::numbers::pi / L[a];
      double cs = std::cos(k * x[a]), sn = std::sin(k * x[a]);
      tv[a][0] = 1.0;
      td[a][0] = 0.0;
      tv[a][1] = cs;
      td[a][1] = -k * sn;
      tv[a][2] = sn;
      td[a][2] = k * cs;
    }
    const int nb = int(c.size());
    for (int b = 0; b < nb; ++b) {
      if (c[b] == 0.0) continue;
      double val[3], der[3];
      int code = b;
      for (int a = 0; a < m; ++a) {
        int d = code % 3;
        code /= 3;
        val[a] = tv[a][d];
        der[a] = td[a][d];
      }
      double prod = 1.0;
      for (int a = 0; a < m; ++a) prod *= val[a];
      f += c[b] * prod;
      for (int a = 0; a < m; ++a) {
        double g = der[a];
        for (int e = 0; e < m; ++e)
          if (e != a) g *= val[e];
        grad[a] += c[b] * g;
      }
    }
  }
};

int basis_size(int m) { return m == 2 ? 9 : 27; }

}  // namespace

int trig_coeff_count(int m, int degree) {
  return degree == 0 ? basis_size(m) : m * basis_size(m);
}

TestForm trig_zero_form(int m, const std::vector<double>& coeffs, const Vec3& L) {
  if (int(coeffs.size()) != basis_size(m)) throw Error("wrong coefficient count for 0-form");
  TrigScalar ts{m, L, coeffs};
  TestForm t;
  t.degree = 0;
  t.m = m;
  t.coef = [ts](const Vec3& x) {
    double f;
    Vec3 g;
    ts.eval(x, f, g);
    return std::vector<double>{f};
  };
  t.dcoef = [ts, m](const Vec3& x) {
    double f;
    Vec3 g;
    ts.eval(x, f, g);
    return std::vector<double>(g.data(), g.data() + m);
  };
  return t;
}

TestForm trig_one_form(int m, const std::vector<double>& coeffs, const Vec3& L) {
  const int nb = basis_size(m);
  if (int(coeffs.size()) != m * nb) throw Error("wrong coefficient count for 1-form");
  std::vector<TrigScalar> comp;
  for (int a = 0; a < m; ++a)
    comp.push_back({m, L, std::vector<double>(coeffs.begin() + a * nb, coeffs.begin() + (a + 1) * nb)});
  TestForm t;
  t.degree = 1;
  t.m = m;
  t.coef = [comp, m](const Vec3& x) {
    std::vector<double> out(m);
    for (int a = 0; a < m; ++a) {
      double f;
      Vec3 g;
      comp[a].eval(x, f, g);
      out[a] = f;
    }
    return out;
  };
  t.dcoef = [comp, m](const Vec3& x) {
    Vec3 grad[3] = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    for (int a = 0; a < m; ++a) {
      double f;
      comp[a].eval(x, f, grad[a]);
    }
    if (m == 2) return std::vector<double>{grad[1][0] - grad[0][1]};
    // components (23, 31, 12) of d(alpha): curl
    return std::vector<double>{grad[2][1] - grad[1][2], grad[0][2] - grad[2][0],
                               grad[1][0] - grad[0][1]};
  };
  return t;
}

}  // namespace c2
