// Desk-scale currents: oriented points, polylines and triangle surfaces,
// boundary, pairing with closed-form test forms, flux and phase level sets.
#pragma once

#include <array>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "codim2/torus_fields.hpp"

namespace c2 {

// period[a] > 0 marks a periodic axis; 0 means Euclidean
struct Ambient {
  int m = 3;
  Vec3 period = Vec3::Zero();

  static Ambient euclidean(int m) { return {m, Vec3::Zero()}; }
  static Ambient torus(const GridSpec& g);
  Vec3 delta(const Vec3& a, const Vec3& b) const;  // b - a, minimal image
  bool periodic() const { return period.squaredNorm() > 0; }
};

struct OrientedPoints {
  Ambient amb;
  std::vector<Vec3> pos;
  std::vector<int> sign;
};

struct Polyline {
  std::vector<Vec3> v;
  bool closed = true;
};

struct PolyCurve {
  Ambient amb;
  std::vector<Polyline> lines;
  std::size_t segments() const;
};

struct TriSurface {
  Ambient amb;
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> tri;
};

using ShapeCurrent = std::variant<OrientedPoints, PolyCurve, TriSurface>;

int current_dimension(const ShapeCurrent& c);

// Coefficients: 0-form {f}; 1-form {a_1..a_m}; 2-form in 3D {b_23, b_31, b_12},
// in 2D {b_12}; top form {b}. dcoef gives the coefficients of d(alpha).
struct TestForm {
  int degree = 0;
  int m = 3;
  std::function<std::vector<double>(const Vec3&)> coef;
  std::function<std::vector<double>(const Vec3&)> dcoef;

  TestForm d() const;
};

// evaluate a k-form with coefficients c on k vectors (k = coefficient degree)
double eval_form(int degree, int m, const std::vector<double>& c, const Vec3* vecs);

PolyCurve boundary(const TriSurface& s);

double pair(const ShapeCurrent& c, const TestForm& alpha);

using VecFn = std::function<Vec3(const Vec3&)>;
// hypersurface flux: triangles in 3D, oriented segments in 2D
double flux(const TriSurface& s, const VecFn& u);
double flux(const PolyCurve& c, const VecFn& u);

double total_length(const PolyCurve& c);
double total_area(const TriSurface& s);

// symmetric Hausdorff distance between vertex sets of two curves/point sets
double hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b, const Ambient& amb);
std::vector<Vec3> sample_points(const PolyCurve& c, double spacing);

// phase level set {Im(psi e^{-is}) = 0, Re(psi e^{-is}) > 0}:
// a PolyCurve for m=2, a TriSurface for m=3
ShapeCurrent extract_phase_levelset(const ComplexField& psi, double s);

// OBJ: v / f / l records (1-based indices)
void write_obj(const std::string& path, const ShapeCurrent& c);
std::string obj_string(const ShapeCurrent& c);
struct PairingRow {
  std::string id;
  int degree;
  double value;
};
void write_pairing_csv(const std::string& path, const std::vector<PairingRow>& rows);

// trigonometric test forms on T^m with closed-form d; one mode per axis
TestForm trig_zero_form(int m, const std::vector<double>& coeffs, const Vec3& L);
TestForm trig_one_form(int m, const std::vector<double>& coeffs, const Vec3& L);
int trig_coeff_count(int m, int degree);

}  // namespace c2
