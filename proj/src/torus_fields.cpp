#include "codim2/torus_fields.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace c2 {

double GridSpec::max_h() const {
  double r = 0.0;
  for (int a = 0; a < m; ++a) r = std::max(r, h(a));
  return r;
}

double GridSpec::vol() const {
  double v = 1.0;
  for (int a = 0; a < m; ++a) v *= L[a];
  return v;
}

std::array<int, 3> GridSpec::coords(std::size_t idx) const {
  std::array<int, 3> c{};
  c[2] = int(idx % n[2]);
  idx /= n[2];
  c[1] = int(idx % n[1]);
  c[0] = int(idx / n[1]);
  return c;
}

std::size_t GridSpec::shift(std::size_t idx, int axis, int by) const {
  auto c = coords(idx);
  c[axis] = ((c[axis] + by) % n[axis] + n[axis]) % n[axis];
  return index(c[0], c[1], c[2]);
}

Vec3 GridSpec::position(std::size_t idx) const {
  auto c = coords(idx);
  Vec3 x = Vec3::Zero();
  for (int a = 0; a < m; ++a) x[a] = c[a] * h(a);
  return x;
}

std::array<int, 2> GridSpec::face_axes(int c) const {
  if (m == 2) return {0, 1};
  return {(c + 1) % 3, (c + 2) % 3};
}

double GridSpec::edge_dual(int a) const {
  double w = 1.0;
  for (int b = 0; b < m; ++b)
    if (b != a) w *= h(b);
  return w;
}

double GridSpec::cell_measure() const {
  double w = 1.0;
  for (int a = 0; a < m; ++a) w *= h(a);
  return w;
}

Vec3 GridSpec::wrap(const Vec3& x) const {
  Vec3 y = x;
  for (int a = 0; a < m; ++a) {
    y[a] = std::fmod(x[a], L[a]);
    if (y[a] < 0) y[a] += L[a];
    if (y[a] >= L[a]) y[a] -= L[a];
  }
  return y;
}

Vec3 GridSpec::min_image(const Vec3& d) const {
  Vec3 r = d;
  for (int a = 0; a < m; ++a) r[a] -= L[a] * std::round(d[a] / L[a]);
  return r;
}

bool GridSpec::operator==(const GridSpec& o) const {
  return m == o.m && n == o.n && L == o.L;
}

GridSpec make_grid(int m, const std::vector<int>& n, const std::vector<double>& L) {
  if (m != 2 && m != 3) throw Error("grid dimension must be 2 or 3");
  if (int(n.size()) != m) throw Error("grid needs one node count per axis");
  if (!L.empty() && int(L.size()) != m) throw Error("grid needs one period per axis");
  GridSpec g;
  g.m = m;
  for (int a = 0; a < m; ++a) {
    if (n[a] < 8) throw Error("resolution below minimum (n_i >= 8)");
    g.n[a] = n[a];
    double l = L.empty() ? 1.0 : L[a];
    if (!(l > 0.0) || !std::isfinite(l)) throw Error("period lengths must be positive");
    g.L[a] = l;
  }
  return g;
}

ScalarField make_scalar(const GridSpec& g, double value) {
  return {g, std::vector<double>(g.nodes(), value)};
}
ComplexField make_complex(const GridSpec& g, cplx value) {
  return {g, std::vector<cplx>(g.nodes(), value)};
}
VectorField make_vector(const GridSpec& g, const Vec3& value) {
  return {g, std::vector<Vec3>(g.nodes(), value)};
}

void require_finite(const std::vector<double>& x, const char* what) {
  for (double v : x)
    if (!std::isfinite(v)) throw Error(std::string("non-finite value in ") + what);
}

void require_finite(const std::vector<cplx>& x, const char* what) {
  for (const auto& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(std::string("non-finite value in ") + what);
}

double stable_sum(const std::vector<double>& x) {
  double s = 0.0, c = 0.0;
  for (double v : x) {
    double t = s + v;
    if (std::abs(s) >= std::abs(v))
      c += (s - t) + v;
    else
      c += (v - t) + s;
    s = t;
  }
  return s + c;
}

double integrate(const ScalarField& f) {
  if (f.v.size() != f.grid.nodes()) throw Error("field size does not match grid");
  require_finite(f.v, "integrand");
  return stable_sum(f.v) * f.grid.cell_measure();
}

EdgeComplex d_complex(const ComplexField& psi) {
  const auto& g = psi.grid;
  require_finite(psi.v, "psi");
  EdgeComplex e{g, std::vector<cplx>(g.edges())};
  for (std::size_t p = 0; p < g.nodes(); ++p)
    for (int a = 0; a < g.m; ++a) e.v[p * g.m + a] = psi.v[g.shift(p, a, 1)] - psi.v[p];
  return e;
}

namespace {

template <class T>
T circulation(const GridSpec& g, const std::vector<T>& e, std::size_t p, int a, int b) {
  const int m = g.m;
  return e[p * m + a] + e[g.shift(p, a, 1) * m + b] - e[g.shift(p, b, 1) * m + a] -
         e[p * m + b];
}

}  // namespace

FaceTwoForm plaquette_circulation(const EdgeOneForm& lam) {
  const auto& g = lam.grid;
  const int nf = g.faces_per_node();
  FaceTwoForm F{g, std::vector<double>(g.faces())};
  for (std::size_t p = 0; p < g.nodes(); ++p)
    for (int c = 0; c < nf; ++c) {
      auto ab = g.face_axes(c);
      F.v[p * nf + c] = circulation(g, lam.v, p, ab[0], ab[1]);
    }
  return F;
}

std::vector<cplx> plaquette_circulation(const EdgeComplex& e) {
  const auto& g = e.grid;
  const int nf = g.faces_per_node();
  std::vector<cplx> out(g.faces());
  for (std::size_t p = 0; p < g.nodes(); ++p)
    for (int c = 0; c < nf; ++c) {
      auto ab = g.face_axes(c);
      out[p * nf + c] = circulation(g, e.v, p, ab[0], ab[1]);
    }
  return out;
}

ScalarField codifferential(const EdgeOneForm& lam) {
  const auto& g = lam.grid;
  ScalarField d = make_scalar(g);
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    double s = 0.0;
    for (int a = 0; a < g.m; ++a) {
      double w = 1.0 / (g.h(a) * g.h(a));
      s += w * (lam.v[p * g.m + a] - lam.v[g.shift(p, a, -1) * g.m + a]);
    }
    d.v[p] = s;
  }
  return d;
}

std::array<double, 3> homology_periods(const FaceTwoForm& F) {
  const auto& g = F.grid;
  const int nf = g.faces_per_node();
  std::array<double, 3> out{0, 0, 0};
  for (int c = 0; c < nf; ++c) {
    std::vector<double> col(g.nodes());
    for (std::size_t p = 0; p < g.nodes(); ++p) col[p] = F.v[p * nf + c];
    out[c] = stable_sum(col);
  }
  return out;
}

namespace {

// in-place m-dimensional DFT (FFTW sign convention, unnormalized)
void dft(const GridSpec& g, std::vector<cplx>& data, int sign) {
  int dims[3] = {g.n[0], g.n[1], g.n[2]};
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  // planning is not thread-safe in FFTW; execution is
  static std::mutex plan_mutex;
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    plan = fftw_plan_dft(g.m, dims, ptr, ptr, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fftw_destroy_plan(plan);
  }
}

}  // namespace

EdgeOneForm solve_coulomb_oneform(const FaceTwoForm& F) {
  const auto& g = F.grid;
  if (F.v.size() != g.faces()) throw Error("face form size does not match grid");
  require_finite(F.v, "face form");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (double f : F.v) {
    double q = f / two_pi;
    if (std::abs(q - std::round(q)) > 1e-9) throw Error("non-quantized source");
  }
  auto per = homology_periods(F);
  for (double s : per)
    if (std::abs(s) > 1e-9 * two_pi) throw Error("source not exact");

  const int m = g.m;
  const int nf = g.faces_per_node();
  const std::size_t N = g.nodes();

  // transformed face components, indexed by c
  std::vector<std::vector<cplx>> Fh(nf, std::vector<cplx>(N));
  for (int c = 0; c < nf; ++c) {
    for (std::size_t p = 0; p < N; ++p) Fh[c][p] = F.v[p * nf + c];
    dft(g, Fh[c], FFTW_FORWARD);
  }
  // F_{ab} as (face index, sign)
  auto comp = [&](int a, int b) -> std::pair<int, double> {
    if (m == 2) return {0, a == 0 ? 1.0 : -1.0};
    for (int c = 0; c < 3; ++c) {
      auto ab = g.face_axes(c);
      if (ab[0] == a && ab[1] == b) return {c, 1.0};
      if (ab[0] == b && ab[1] == a) return {c, -1.0};
    }
    return {0, 0.0};
  };

  std::vector<std::vector<cplx>> lh(m, std::vector<cplx>(N, 0.0));
  std::array<double, 3> w{};
  for (int a = 0; a < m; ++a) w[a] = 1.0 / (g.h(a) * g.h(a));
  for (std::size_t p = 0; p < N; ++p) {
    auto k = g.coords(p);
    std::array<cplx, 3> D{};
    double K = 0.0;
    for (int a = 0; a < m; ++a) {
      double th = two_pi * k[a] / g.n[a];
      D[a] = cplx(std::cos(th) - 1.0, std::sin(th));
      K += w[a] * std::norm(D[a]);
    }
    if (K == 0.0) continue;
    for (int a = 0; a < m; ++a) {
      cplx s = 0.0;
      for (int b = 0; b < m; ++b) {
        if (b == a) continue;
        auto [c, sg] = comp(b, a);
        s += std::conj(D[b]) * w[b] * sg * Fh[c][p];
      }
      lh[a][p] = s / K;
    }
  }
  EdgeOneForm lam{g, std::vector<double>(g.edges())};
  for (int a = 0; a < m; ++a) {
    dft(g, lh[a], FFTW_BACKWARD);
    for (std::size_t p = 0; p < N; ++p) lam.v[p * m + a] = lh[a][p].real() / double(N);
  }
  auto check = plaquette_circulation(lam);
  double res = 0.0;
  for (std::size_t i = 0; i < check.v.size(); ++i)
    res = std::max(res, std::abs(check.v[i] - F.v[i]));
  if (res > 1e-9 * two_pi) throw Error("source not exact");
  return lam;
}

}  // namespace c2

namespace c2 {

namespace {

template <class T, class Z>
T multilinear(const GridSpec& g, const std::vector<T>& v, const Vec3& x, Z zero) {
  Vec3 y = g.wrap(x);
  int i0[3] = {0, 0, 0};
  double t[3] = {0, 0, 0};
  for (int a = 0; a < g.m; ++a) {
    double s = y[a] / g.h(a);
    int i = int(std::floor(s));
    t[a] = s - i;
    i0[a] = ((i % g.n[a]) + g.n[a]) % g.n[a];
  }
  T acc = zero;
  const int corners = 1 << g.m;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    int idx[3] = {0, 0, 0};
    for (int a = 0; a < g.m; ++a) {
      int bit = (c >> a) & 1;
      w *= bit ? t[a] : 1.0 - t[a];
      idx[a] = (i0[a] + bit) % g.n[a];
    }
    if (w != 0.0) acc = acc + v[g.index(idx[0], idx[1], idx[2])] * w;
  }
  return acc;
}

}  // namespace

double sample(const ScalarField& f, const Vec3& x) {
  return multilinear(f.grid, f.v, x, 0.0);
}
cplx sample(const ComplexField& f, const Vec3& x) {
  return multilinear(f.grid, f.v, x, cplx(0.0));
}
Vec3 sample(const VectorField& f, const Vec3& x) {
  return multilinear(f.grid, f.v, x, Vec3(Vec3::Zero()));
}

}  // namespace c2
