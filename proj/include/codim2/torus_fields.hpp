// Periodic grids on flat tori, node/edge/face storage, quadrature and the
// Fourier-diagonalized Coulomb-gauge solver.
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace c2 {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  int m = 2;
  std::array<int, 3> n{1, 1, 1};
  std::array<double, 3> L{1.0, 1.0, 1.0};

  double h(int a) const { return L[a] / n[a]; }
  double max_h() const;
  double vol() const;
  std::size_t nodes() const { return std::size_t(n[0]) * n[1] * n[2]; }
  // faces per node: one in 2D, three in 3D (face c is spanned by c+1, c+2)
  int faces_per_node() const { return m == 2 ? 1 : 3; }
  std::size_t edges() const { return nodes() * m; }
  std::size_t faces() const { return nodes() * faces_per_node(); }

  // row-major, axis 0 slowest
  std::size_t index(int i, int j, int k = 0) const {
    return (std::size_t(i) * n[1] + j) * n[2] + k;
  }
  std::array<int, 3> coords(std::size_t idx) const;
  std::size_t shift(std::size_t idx, int axis, int by) const;
  Vec3 position(std::size_t idx) const;
  // face c of a node is spanned by (face_axes(c)[0], face_axes(c)[1])
  std::array<int, 2> face_axes(int c) const;
  // transverse measure of an edge along axis a (product of the other spacings)
  double edge_dual(int a) const;
  double cell_measure() const;

  Vec3 wrap(const Vec3& x) const;
  Vec3 min_image(const Vec3& d) const;

  bool operator==(const GridSpec& o) const;
};

GridSpec make_grid(int m, const std::vector<int>& n, const std::vector<double>& L = {});

struct ScalarField {
  GridSpec grid;
  std::vector<double> v;
};

struct ComplexField {
  GridSpec grid;
  std::vector<cplx> v;
};

struct VectorField {
  GridSpec grid;
  std::vector<Vec3> v;
};

// value per edge (node*m + axis) = integral of the 1-form along the edge
struct EdgeOneForm {
  GridSpec grid;
  std::vector<double> v;
};

struct EdgeComplex {
  GridSpec grid;
  std::vector<cplx> v;
};

// value per face (node*faces_per_node + c) = integral of the 2-form over it
struct FaceTwoForm {
  GridSpec grid;
  std::vector<double> v;
};

ScalarField make_scalar(const GridSpec& g, double value = 0.0);
ComplexField make_complex(const GridSpec& g, cplx value = 0.0);
VectorField make_vector(const GridSpec& g, const Vec3& value = Vec3::Zero());

// Neumaier-compensated sum in index order
double stable_sum(const std::vector<double>& x);

double integrate(const ScalarField& f);

EdgeComplex d_complex(const ComplexField& psi);

FaceTwoForm plaquette_circulation(const EdgeOneForm& lam);
std::vector<cplx> plaquette_circulation(const EdgeComplex& e);
// metric co-differential (divergence of the edge form), one value per node
ScalarField codifferential(const EdgeOneForm& lam);
// net face sums per orientation c; all must vanish for solvability
std::array<double, 3> homology_periods(const FaceTwoForm& F);

EdgeOneForm solve_coulomb_oneform(const FaceTwoForm& F);

// multilinear interpolation at an arbitrary (wrapped) point
double sample(const ScalarField& f, const Vec3& x);
cplx sample(const ComplexField& f, const Vec3& x);
Vec3 sample(const VectorField& f, const Vec3& x);

// field container
enum class DType { Real, Complex, Vector };
std::string dtype_name(DType t);

void save_field_json(const std::string& path, const ScalarField& f);
void save_field_json(const std::string& path, const ComplexField& f);
void save_field_binary(const std::string& path, const ScalarField& f);
void save_field_binary(const std::string& path, const ComplexField& f);
ScalarField load_scalar(const std::string& path);
ComplexField load_complex(const std::string& path);

void require_finite(const std::vector<double>& x, const char* what);
void require_finite(const std::vector<cplx>& x, const char* what);

}  // namespace c2
