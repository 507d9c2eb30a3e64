#pragma once

#include <Eigen/SparseCore>
#include <vector>

#include "fpc/control.hpp"
#include "fpc/model.hpp"

namespace fpc {

// Discrete spatial operators shared by the forward step, its linearization
// and the (transposed) adjoint recursion.
//
// neg_laplacian      : L with (L q)_i = -(Lap q)_i in flux form, Neumann
//                      closure; symmetric, columns sum to zero.
// upwind_divergence  : D(v) with (D q)_i = div(v q)_i, donor-cell faces,
//                      zero boundary flux; columns sum to zero.
//
// The implicit step solves  (I + h [L beta(.) + D(v) b*(.)]) rho = rho_old.
namespace ops {

Eigen::SparseMatrix<double> neg_laplacian(const Grid& g);

Eigen::SparseMatrix<double> upwind_divergence(const Grid& g, const VectorField& vel);

// div(vel_flux * q) where the donor side of each face is chosen by the sign
// of vel_donor (split evenly on exact ties). This is the derivative of the
// upwind flux with respect to the velocity, at frozen donor sides.
Eigen::VectorXd upwind_divergence_apply(const Grid& g, const VectorField& vel_flux,
                                        const VectorField& vel_donor, const Eigen::VectorXd& q);

// Face-quadrature of  sum_faces vel_flux_f * q_donor(f) * (p_R - p_L)/dx * dx^d,
// the discrete form of  integral q vel . grad p  matched to the upwind fluxes.
double face_advection_pairing(const Grid& g, const VectorField& vel_flux,
                              const VectorField& vel_donor, const Eigen::VectorXd& q,
                              const Eigen::VectorXd& p);

// Cell-centered gather H with <vel, H> dx^d = <p, D_vel q> dx^d for every
// cell-centered vel (faces take the mean of the two neighbours).
VectorField advection_velocity_transpose(const Grid& g, const VectorField& vel_donor,
                                         const Eigen::VectorXd& q, const Eigen::VectorXd& p);

// Jacobian of the implicit-step residual at state rho:
//   I + h [L diag(beta'(rho)) + D(vel) diag(b*'(rho))].
Eigen::SparseMatrix<double> step_jacobian(const Grid& g, const Eigen::SparseMatrix<double>& L,
                                          const Eigen::SparseMatrix<double>& D,
                                          const Eigen::VectorXd& rho, const ModelFunctions& model,
                                          double h);

}  // namespace ops

struct StepDiagnostics {
  int newton_iters = 0;
  double residual_l1 = 0.0;       // final nonlinear residual
  double mass_drift_pre = 0.0;    // mass change before clip/renormalize
  double min_value = 0.0;         // most negative entry before clipping
  double clipped_mass = 0.0;
};

// Discrete density sequence rho^0..rho^N with h = T/N, plus the control and
// its precomputed drift field.
struct Trajectory {
  double h = 0.0;
  int N = 0;
  double T = 0.0;
  std::vector<ScalarField> states;
  ControlField zeta;
  VectorField drift;  // K(zeta)
  std::vector<StepDiagnostics> diag;
  double sup_l2 = 0.0;        // sup_i ||rho^i||_2
  double energy = 0.0;        // h sum_i ||grad rho^i||_2^2
  double sup_linf = 0.0;
  double cumulative_clipped = 0.0;
};

struct SensitivityTrajectory {
  std::vector<ScalarField> states;  // z^0..z^N, z^0 = 0
  ScalarField direction;            // xi
};

// One backward Euler step: solves
//   rho - h Lap beta(rho) + h div(K(zeta) b(rho) rho) = rho_in
// by damped Newton with the analytic Jacobian, to L1 residual <= tol.
// Negative round-off is clipped and the mass renormalized.
ScalarField implicit_step(const ScalarField& rho_in, const VectorField& drift, double h,
                          const ModelFunctions& model, double tol,
                          StepDiagnostics* diag_out = nullptr);

Trajectory solve_forward(const InitialDensity& rho0, const ControlField& zeta,
                         const Kernel& kernel, int N, double T, const ModelFunctions& model,
                         double tol = 1e-12);

// Same, starting from an already projected density.
Trajectory solve_forward(const ScalarField& rho0_grid, const ControlField& zeta,
                         const Kernel& kernel, int N, double T, const ModelFunctions& model,
                         double tol = 1e-12);

// Linearized recursion in the control direction xi:
//   J_i z^i = z^{i-1} - h div(K(xi) b*(rho^i)),  z^0 = 0,
// with J_i the exact Jacobian of the i-th implicit step.
SensitivityTrajectory solve_sensitivity(const Trajectory& traj, const ScalarField& xi,
                                        const Kernel& kernel, const ModelFunctions& model,
                                        double tol = 1e-12);

}  // namespace fpc
