// Connection Theta on implicit representations: horizontal projection and
// lifts, holonomy, finite-difference curvature loops, the zero-set
// presymplectic form and the swept-volume oracle.
#pragma once

#include <functional>
#include <vector>

#include "codim2/implicit_shapes.hpp"

namespace c2 {

// smooth cutoff: 1 for r <= r1, 0 for r >= r2
double cutoff(double r, double r1, double r2);
double cutoff_deriv(double r, double r1, double r2);

ImplicitVelocity horizontal_project(const PsiField& psi, const ImplicitVelocity& v,
                                    RawQuadrature q = RawQuadrature::Singular);

// velocity (u_t, a_t) at time t
struct VelocityAt {
  VectorField u;
  ComplexField a;
};
using Schedule = std::function<VelocityAt(double t)>;

// parameter lattice with one payload per node; one-parameter when t.size() == 1
template <class T>
struct PathFamily {
  std::vector<double> s, t;
  std::vector<T> items;  // s-major
  const T& at(std::size_t i, std::size_t j = 0) const { return items.at(i * t.size() + j); }
};

struct LiftOptions {
  double dt = 1e-3;
  int keep_every = 0;  // 0: keep only the endpoints
  bool check_chart = true;
};

struct LiftResult {
  PathFamily<PsiField> path;
  double max_abs_theta = 0.0;  // horizontality residual over all substeps
  int steps = 0;
};

LiftResult horizontal_lift(const PsiField& psi0, const Schedule& sched, double T, const LiftOptions& opt = {});

struct HolonomyReport {
  double holonomy = 0.0;      // (1/2pi) int Arg(psi_T/psi_0), volume units
  double loop_omega = 0.0;    // double integral of omega over the parameter surface
  double swept_oracle = 0.0;  // -loop_omega: the sign-matched holonomy reference
  double residual = 0.0;      // |holonomy - swept_oracle|
  double relative_residual = 0.0;
  double max_abs_theta = 0.0;
  int steps = 0;
};

double phase_volume(const ComplexField& psiT, const ComplexField& psi0);
HolonomyReport holonomy(const PsiField& psi0, const Schedule& sched, double T, double loop_omega,
                        const LiftOptions& opt = {});

// midpoint sum of omega(d_s, d_t) over [s0,s1] x [t0,t1]
double loop_omega(const std::function<double(double s, double t)>& omega_st, double s0, double s1, double t0,
                  double t1, int ns, int nt);

// one-form on a 2-parameter family: value on d_s (dir 0) or d_t (dir 1) at (s, t)
using FamilyOneForm = std::function<double(double s, double t, int dir)>;
double dform_fd_loop(const FamilyOneForm& alpha, double s0, double t0, double eps_loop);

// Theta evaluated on psi0 o Phi^{-1}, Phi(y) = y + chi(y) disp, along the
// velocity d/d(disp . dir); evaluated by change of variables on lambda_0
double theta_translation_pullback(const EdgeOneForm& lam0, const ScalarField& chi, const VectorField& grad_chi,
                                  const Vec3& disp, const Vec3& dir);

// pointwise density at a zero: nu_C(a, b) / |det(dpsi_N)| (frame oriented with the zero set);
// with_i = false gives the B~ variant
double z_density(const cplx dpsi_n[2], cplx a, cplx b, bool with_i = true);
double presymplectic_Z(const PsiField& psi, const ComplexField& psi_dot, const ComplexField& psi_ring,
                       bool with_i = true);

double avg_swept_volume_rate(const PsiField& psi, const ComplexField& psi_dot, int n_phases);

struct HamiltonianStep {
  PsiField psi;
  Curve3D extracted;  // smoothed zero curve before the step
  double max_abs_theta = 0.0;
  int substeps = 0;
};
// smoothed zero curve of a 3D psi (largest component)
Curve3D extract_zero_curve(const PsiField& psi);
HamiltonianStep hamiltonian_horizontal_step(const PsiField& psi, double dt);

}  // namespace c2
