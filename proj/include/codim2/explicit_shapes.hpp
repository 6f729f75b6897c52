// Explicit codimension-2 shapes: signed points in the plane/torus and closed
// polylines in R^3/T^3, with the MW form, Liouville forms, J, G, binormal
// flow and the SO(3) momentum map.
#pragma once

#include <string>
#include <vector>

#include "codim2/currents.hpp"

namespace c2 {

struct Points2D {
  Ambient amb = Ambient::euclidean(2);
  std::vector<Vec3> pos;  // z component unused
  std::vector<int> sign;
};

struct Curve3D {
  Ambient amb = Ambient::euclidean(3);
  std::vector<Vec3> v;  // closed: v[N-1] connects back to v[0]
  std::size_t size() const { return v.size(); }
};

using ShapeVelocity = std::vector<Vec3>;

// discrete jets on a closed polyline (arclength-weighted central differences)
struct CurveJets {
  std::vector<Vec3> t;    // D_s gamma (unit-ish tangent)
  std::vector<Vec3> k;    // D_s^2 gamma
  std::vector<double> w;  // dual arclength weight per vertex
};
CurveJets curve_jets(const Curve3D& c);

double curve_length(const Curve3D& c);
double mean_spacing(const Curve3D& c);

double mw_form(const Points2D& p, const ShapeVelocity& v, const ShapeVelocity& w);
double mw_form(const Curve3D& c, const ShapeVelocity& v, const ShapeVelocity& w);

double liouville_eta_curve(const Curve3D& c, const ShapeVelocity& v);

// primitive nu of the volume form: a closed-form 2-form (3D) with coefficients
// {n_23, n_31, n_12}; checked against d(nu) = mu at sample points
TestForm nu_symmetric();    // (1/3) sum x_i dx_{i+1} ^ dx_{i+2}
TestForm nu_single_axis();  // x_1 dx_2 ^ dx_3
double liouville_eta_general(const Curve3D& c, const ShapeVelocity& v, const TestForm& nu);

struct BinormalOptions {
  bool resample = true;
  double band_lo = 0.5, band_hi = 1.5;
};
Curve3D binormal_step(const Curve3D& c, double dt, const BinormalOptions& opt = {});
ShapeVelocity binormal_velocity(const Curve3D& c);
void check_self_intersection(const Curve3D& c);
Curve3D resample_uniform(const Curve3D& c, std::size_t N);

Vec3 momentum_so3(const Curve3D& c);
Vec3 linear_momentum(const Curve3D& c);

ShapeVelocity rotate_normal_J(const Curve3D& c, const ShapeVelocity& v);
double metric_G(const Curve3D& c, const ShapeVelocity& v, const ShapeVelocity& w);

// constructors used by tests and experiments
Curve3D make_circle(double r, std::size_t N, const Vec3& center = Vec3::Zero(),
                    const Vec3& axis = Vec3::UnitZ(), double phase = 0.0);
Curve3D make_ellipse(double a, double b, std::size_t N, const Vec3& center = Vec3::Zero());
Curve3D translated(const Curve3D& c, const Vec3& d);
Curve3D reversed(const Curve3D& c);
ShapeVelocity constant_velocity(std::size_t n, const Vec3& u);

// curve I/O: OBJ polylines and {"vertices": [...], "signs": [...], "closed": true}
void save_curve_json(const std::string& path, const Curve3D& c);
Curve3D load_curve(const std::string& path);
void save_points_json(const std::string& path, const Points2D& p);
Points2D load_points(const std::string& path);
PolyCurve to_polycurve(const Curve3D& c);

}  // namespace c2
