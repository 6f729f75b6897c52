// Implicit representations psi: construction from explicit shapes, oriented
// zero sets, the circle differential lambda_psi = Im(dpsi/psi), the 1-form
// Theta and the structure-group actions.
#pragma once

#include <array>
#include <vector>

#include "codim2/currents.hpp"
#include "codim2/explicit_shapes.hpp"

namespace c2 {

struct PsiField {
  ComplexField field;
  double eps = 0.05;
  const GridSpec& grid() const { return field.grid; }
};

struct ImplicitVelocity {
  enum class Kind { Raw, Generated };
  Kind kind = Kind::Raw;
  ComplexField raw;  // psi_dot
  VectorField u;     // generated: psi_dot = -i_u dpsi + a psi
  ComplexField a;

  static ImplicitVelocity from_raw(ComplexField f);
  static ImplicitVelocity generated(VectorField u, ComplexField a);
};

PsiField build_psi_2d(const GridSpec& g, const Points2D& pts, double eps);
PsiField build_psi_3d(const GridSpec& g, const std::vector<Curve3D>& curves, double eps);

// integer windings per face (node*faces_per_node + c)
std::vector<int> face_windings(const ComplexField& psi);
void validate_psi(const PsiField& psi);

// m=2: OrientedPoints; m=3: PolyCurve of oriented closed polylines
ShapeCurrent zero_set(const PsiField& psi);
std::vector<Vec3> zero_samples(const ShapeCurrent& z, double spacing);

EdgeOneForm circle_differential(const ComplexField& psi);

// raw quadrature of Im(psi_dot conj(psi))/|psi|^2
enum class RawQuadrature {
  Singular,  // eps-tube exclusion + local polar estimate (default)
  Node       // plain node sum
};

double theta(const PsiField& psi, const ImplicitVelocity& v,
             RawQuadrature q = RawQuadrature::Singular);
double lambda_flux(const PsiField& psi, const VectorField& u);
double lambda_flux(const EdgeOneForm& lam, const VectorField& u);

ImplicitVelocity make_velocity(const PsiField& psi, const VectorField& u, const ComplexField& a);
// -i_u dpsi + a psi by fourth-order central differences
ComplexField realize(const PsiField& psi, const ImplicitVelocity& v);

PsiField group_act(const PsiField& psi, double c, const std::vector<int>& k);
// integer shear (x, y) -> (x + k y, y) on the first two axes, exact on the node lattice
PsiField shear(const PsiField& psi, int k);
ComplexField shear(const ComplexField& f, int k);
VectorField shear_pushforward(const VectorField& u, int k);

// int lambda_psi ^ d(alpha) for an (m-2)-form alpha, evaluated on the
// multilinear interpolant of psi with sub^m midpoint samples per cell
double boundary_pairing(const PsiField& psi, const TestForm& alpha, int sub = 8);

// explicit heat-flow steps on psi; rounds off grid-scale kinks of the lattice
// phase at the zero set (the result lies in the same fiber up to O(steps h^2))
PsiField heat_smooth(const PsiField& psi, int steps);

// nodal gradient by fourth-order central differences (the realize stencil)
std::array<ComplexField, 3> nodal_gradient(const ComplexField& f);

// gradient of the multilinear interpolant
void sample_with_gradient(const ComplexField& f, const Vec3& x, cplx& value, cplx grad[3]);

// periodic distance field to a set of sample points
ScalarField distance_to(const GridSpec& g, const std::vector<Vec3>& pts);
ScalarField distance_to_curves(const GridSpec& g, const std::vector<Curve3D>& curves);

}  // namespace c2
