#pragma once

#include "fpc/fp.hpp"

namespace fpc {

// Which backward recursion to assemble. Transpose is the default: the exact
// algebraic transpose of the linearized forward step, which makes the
// discrete gradient exact. Literal assembles the non-conservative stencil
//   p^i - h beta'(rho^{i+1}) Lap p^i - h K(zeta) b*'(rho^{i+1}) . grad p^i
// with centered gradients, for comparison studies only.
enum class AdjointMode { transpose, literal };

struct AdjointTrajectory {
  std::vector<ScalarField> states;   // p^0..p^N, p^N = -G_T
  std::vector<ScalarField> G_tilde;  // Gtilde^1..Gtilde^N
  AdjointMode mode = AdjointMode::transpose;
};

// Gtilde^i(x) = integral of G(t,x) over ((i-1)h, ih), midpoint rule:
// h * G((i-1/2)h, x). Exact when G is time-independent or linear in t.
std::vector<ScalarField> discretize_running_cost(const CostSpec& cost, double h, int N,
                                                 const Grid& grid);

AdjointTrajectory solve_adjoint(const Trajectory& traj, const CostSpec& cost,
                                const ModelFunctions& model, double tol = 1e-12,
                                AdjointMode mode = AdjointMode::transpose);

// Both sides of the discrete duality identity
//   sum_i <Gtilde^i, z^i> + <G_T, z^N>  =  - sum_i h integral b*(rho^i) K(xi).grad p^{i-1},
// computed independently from the sensitivity and adjoint solutions.
struct DualityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_error = 0.0;
};
DualityReport duality_identity(const Trajectory& traj, const SensitivityTrajectory& sens,
                               const AdjointTrajectory& adj, const Kernel& kernel,
                               const ModelFunctions& model);

}  // namespace fpc
