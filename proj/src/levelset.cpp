// Phase level sets by marching squares / face-based marching cubes on
// g = Im(psi e^{-is}), clipped to Re(psi e^{-is}) > 0.
//
// Each cell face is processed independently: crossings on its edges are
// paired (asymptotic decider for the 4-crossing case) and each segment is
// oriented from the sign of the corner it cuts off. In 3D the face segments
// of a cube are chained into loops and fanned around the loop centroid.
#include <algorithm>
#include <cmath>
#include <map>

#include "codim2/currents.hpp"

namespace c2 {

namespace {

constexpr double kTie = 1e-12;
constexpr double kCritical = 1e-6;

struct Builder {
  const GridSpec& g;
  const std::vector<double>& gv;  // Im part
  const std::vector<double>& rv;  // Re part
  const std::vector<double>& amp;
  std::vector<Vec3> verts;
  std::vector<double> vre;
  std::map<long, int> edge_vertex;

  // vertex on the grid edge from node p along axis a
  int edge_vert(std::size_t p, int a) {
    long key = long(p) * 3 + a;
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    std::size_t q = g.shift(p, a, 1);
    double g0 = gv[p], g1 = gv[q];
    double t = g0 / (g0 - g1);
    Vec3 x = g.position(p);
    x[a] += t * g.h(a);
    verts.push_back(x);
    vre.push_back(rv[p] + t * (rv[q] - rv[p]));
    int id = int(verts.size()) - 1;
    edge_vertex.emplace(key, id);
    return id;
  }

  // corners q[0..3] counter-clockwise about the face normal; the edge
  // between q[k] and q[k+1] is (edge_node[k], edge_axis[k]).
  // want_left: the g > 0 side lies to the left of each segment.
  void face_segments(const std::size_t q[4], const std::size_t edge_node[4], const int edge_axis[4],
                     bool want_left, std::vector<std::pair<int, int>>& out) {
    double gq[4];
    for (int k = 0; k < 4; ++k) gq[k] = gv[q[k]];
    int cross[4], nc = 0;
    for (int k = 0; k < 4; ++k)
      if ((gq[k] > 0) != (gq[(k + 1) % 4] > 0)) cross[nc++] = k;
    if (nc == 0) return;
    auto emit = [&](int k1, int k2, int arc_corner) {
      int a = edge_vert(edge_node[k1], edge_axis[k1]);
      int b = edge_vert(edge_node[k2], edge_axis[k2]);
      // corners on the arc (k1, k2] lie to the right of k1 -> k2
      bool pos = gq[arc_corner] > 0;
      if (pos == want_left)
        out.emplace_back(b, a);
      else
        out.emplace_back(a, b);
    };
    if (nc == 2) {
      emit(cross[0], cross[1], (cross[0] + 1) % 4);
      return;
    }
    double den = gq[0] + gq[2] - gq[1] - gq[3];
    double num = gq[0] * gq[2] - gq[1] * gq[3];
    double gs = den != 0.0 ? num / den : 0.0;
    if (den != 0.0) {
      double u = -(gq[3] - gq[0]) / den;
      double v = -(gq[1] - gq[0]) / den;
      if (u >= 0 && u <= 1 && v >= 0 && v <= 1) {
        double r0 = rv[q[0]], r1 = rv[q[1]], r2 = rv[q[2]], r3 = rv[q[3]];
        double rs = r0 * (1 - u) * (1 - v) + r1 * u * (1 - v) + r2 * u * v + r3 * (1 - u) * v;
        double scale = 0.25 * (amp[q[0]] + amp[q[1]] + amp[q[2]] + amp[q[3]]);
        if (rs > 0 && std::abs(gs) < kCritical * scale) throw Error("near-critical phase");
      }
    }
    if ((gs > 0) == (gq[0] > 0)) {
      emit(0, 1, 1);
      emit(2, 3, 3);
    } else {
      emit(3, 0, 0);
      emit(1, 2, 2);
    }
  }
};

std::vector<double> offset_tie(std::vector<double> g) {
  for (auto& x : g)
    if (x == 0.0) x = kTie;
  return g;
}

ShapeCurrent extract_2d(const ComplexField& psi, const std::vector<double>& gv,
                        const std::vector<double>& rv, const std::vector<double>& amp) {
  const auto& g = psi.grid;
  Builder B{g, gv, rv, amp, {}, {}, {}};
  std::vector<std::pair<int, int>> segs;
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j) {
      std::size_t p00 = g.index(i, j), p10 = g.shift(p00, 0, 1), p01 = g.shift(p00, 1, 1);
      std::size_t p11 = g.shift(p10, 1, 1);
      std::size_t q[4] = {p00, p10, p11, p01};
      std::size_t en[4] = {p00, p10, p01, p00};
      int ea[4] = {0, 1, 0, 1};
      B.face_segments(q, en, ea, false, segs);
    }
  // clip at Re > 0
  PolyCurve out;
  out.amb = Ambient::torus(g);
  Ambient amb = out.amb;
  std::vector<Vec3> V = B.verts;
  std::vector<std::pair<int, int>> kept;
  for (auto [a, b] : segs) {
    double ra = B.vre[a], rb = B.vre[b];
    if (ra <= 0 && rb <= 0) continue;
    if (ra > 0 && rb > 0) {
      kept.emplace_back(a, b);
      continue;
    }
    double t = ra / (ra - rb);
    V.push_back(V[a] + t * amb.delta(V[a], V[b]));
    int c = int(V.size()) - 1;
    if (ra > 0)
      kept.emplace_back(a, c);
    else
      kept.emplace_back(c, b);
  }
  // chain
  std::map<int, int> next, indeg;
  for (auto [a, b] : kept) {
    next[a] = b;
    ++indeg[b];
  }
  std::map<int, bool> used;
  auto trace = [&](int start) {
    Polyline pl;
    pl.closed = false;
    int cur = start;
    pl.v.push_back(V[cur]);
    used[cur] = true;
    while (next.count(cur)) {
      int nx = next[cur];
      if (nx == start) {
        pl.closed = true;
        break;
      }
      if (used[nx]) break;
      used[nx] = true;
      pl.v.push_back(V[nx]);
      cur = nx;
    }
    out.lines.push_back(std::move(pl));
  };
  for (auto [a, b] : kept)
    if (!used[a] && indeg[a] == 0) trace(a);
  for (auto [a, b] : kept)
    if (!used[a]) trace(a);
  return out;
}

ShapeCurrent extract_3d(const ComplexField& psi, const std::vector<double>& gv,
                        const std::vector<double>& rv, const std::vector<double>& amp) {
  const auto& g = psi.grid;
  Builder B{g, gv, rv, amp, {}, {}, {}};
  Ambient amb = Ambient::torus(g);
  std::vector<std::array<int, 3>> tris;

  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) {
        std::size_t base = g.index(i, j, k);
        std::size_t c[8];
        for (int b = 0; b < 8; ++b) {
          std::size_t p = base;
          for (int a = 0; a < 3; ++a)
            if ((b >> a) & 1) p = g.shift(p, a, 1);
          c[b] = p;
        }
        bool anypos = false, anyneg = false, anyre = false;
        for (int b = 0; b < 8; ++b) {
          (gv[c[b]] > 0 ? anypos : anyneg) = true;
          if (rv[c[b]] > 0) anyre = true;
        }
        if (!(anypos && anyneg) || !anyre) continue;
        std::vector<std::pair<int, int>> segs;
        for (int a = 0; a < 3; ++a) {
          int bax = (a + 1) % 3, cax = (a + 2) % 3;
          for (int side = 0; side < 2; ++side) {
            // (b,c) offsets of the four face corners, CCW about the outward normal
            int uv[4][2];
            if (side == 1) {
              int t[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
              std::copy(&t[0][0], &t[0][0] + 8, &uv[0][0]);
            } else {
              int t[4][2] = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
              std::copy(&t[0][0], &t[0][0] + 8, &uv[0][0]);
            }
            std::size_t q[4], en[4];
            int ea[4];
            for (int kk = 0; kk < 4; ++kk) {
              int bits = (side << a) | (uv[kk][0] << bax) | (uv[kk][1] << cax);
              q[kk] = c[bits];
            }
            for (int kk = 0; kk < 4; ++kk) {
              int k2 = (kk + 1) % 4;
              int du = uv[k2][0] - uv[kk][0];
              int lo0 = std::min(uv[kk][0], uv[k2][0]), lo1 = std::min(uv[kk][1], uv[k2][1]);
              int bits = (side << a) | (lo0 << bax) | (lo1 << cax);
              en[kk] = c[bits];
              ea[kk] = du != 0 ? bax : cax;
            }
            B.face_segments(q, en, ea, true, segs);
          }
        }
        if (segs.empty()) continue;
        // chain face segments into loops
        std::map<int, int> nxt;
        for (auto [a, b] : segs) nxt[a] = b;
        std::map<int, bool> used;
        for (auto [a0, b0] : segs) {
          if (used[a0]) continue;
          std::vector<int> loop;
          int cur = a0;
          while (!used[cur]) {
            used[cur] = true;
            loop.push_back(cur);
            auto it = nxt.find(cur);
            if (it == nxt.end()) break;
            cur = it->second;
          }
          if (loop.size() < 3) continue;
          Vec3 ref = B.verts[loop[0]];
          Vec3 acc = Vec3::Zero();
          for (int v : loop) acc += amb.delta(ref, B.verts[v]);
          Vec3 cen = ref + acc / double(loop.size());
          B.verts.push_back(cen);
          int cid = int(B.verts.size()) - 1;
          B.vre.push_back(sample(psi, cen).real());
          for (std::size_t t = 0; t < loop.size(); ++t)
            tris.push_back({cid, loop[t], loop[(t + 1) % loop.size()]});
        }
      }
  TriSurface out;
  out.amb = amb;
  out.v = B.verts;
  std::map<std::pair<int, int>, int> clip_vertex;
  auto clip_vert = [&](int a, int b) {
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = clip_vertex.find(key);
    if (it != clip_vertex.end()) return it->second;
    double ra = B.vre[key.first], rb = B.vre[key.second];
    double t = ra / (ra - rb);
    out.v.push_back(out.v[key.first] + t * amb.delta(out.v[key.first], out.v[key.second]));
    int id = int(out.v.size()) - 1;
    clip_vertex.emplace(key, id);
    return id;
  };
  for (const auto& t : tris) {
    std::vector<int> poly;
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      bool ina = B.vre[a] > 0, inb = B.vre[b] > 0;
      if (ina) poly.push_back(a);
      if (ina != inb) poly.push_back(clip_vert(a, b));
    }
    for (std::size_t f = 1; f + 1 < poly.size(); ++f) out.tri.push_back({poly[0], poly[f], poly[f + 1]});
  }
  return out;
}

}  // namespace

ShapeCurrent extract_phase_levelset(const ComplexField& psi, double s) {
  const auto& g = psi.grid;
  require_finite(psi.v, "psi");
  cplx rot = std::exp(cplx(0.0, -s));
  std::vector<double> gv(g.nodes()), rv(g.nodes()), amp(g.nodes());
  for (std::size_t p = 0; p < g.nodes(); ++p) {
    cplx z = psi.v[p] * rot;
    gv[p] = z.imag();
    rv[p] = z.real();
    amp[p] = std::abs(z);
  }
  gv = offset_tie(std::move(gv));
  if (g.m == 2) return extract_2d(psi, gv, rv, amp);
  // centroid Re values are resampled from the rotated field
  ComplexField rotated{g, psi.v};
  for (auto& z : rotated.v) z *= rot;
  return extract_3d(rotated, gv, rv, amp);
}

}  // namespace c2
