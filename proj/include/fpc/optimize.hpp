#pragma once

#include "fpc/adjoint.hpp"

namespace fpc {

// Everything a cost/gradient evaluation needs, bundled so the optimizer can
// re-solve the forward problem for trial controls.
struct Problem {
  const Grid* grid = nullptr;
  ModelFunctions model;
  CostSpec cost;
  Kernel kernel;
  AdmissibleSet set;
  ScalarField rho0;  // projected initial density, unit mass
  int N = 1;
  double T = 1.0;
  double forward_tol = 1e-12;

  Trajectory solve(const ControlField& zeta) const {
    return solve_forward(rho0, zeta, kernel, N, T, model, forward_tol);
  }
};

struct CostBreakdown {
  double running = 0.0;
  double terminal = 0.0;
  double control = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

// The variational density of the first-order optimality condition: for every
// feasible direction xi at zeta, the directional derivative of the discrete
// cost is <xi, D>. Bang-bang: zeta = 0 where D > 0, M0 where D < 0.
struct GradientField {
  ScalarField D;
  VectorField F;  // accumulated h b*(rho^i) grad p^{i-1}, face-gathered
};

struct OptimizerReport {
  int iterates = 0;
  std::vector<double> costs;  // accepted totals, non-increasing
  ControlField final_control;
  ScalarField final_D;
  double optimality_residual = 0.0;
  double initial_residual = 0.0;
  double bang_bang_fraction = 0.0;
  bool stalled = false;
  struct Level {
    double h;
    double cost;
    double zeta_change_l2;  // || zeta_level - zeta_prev ||_2
  };
  std::vector<Level> h_levels;
};

CostBreakdown evaluate_cost(const Trajectory& traj, const ControlField& zeta,
                            const CostSpec& cost, const ControlField* anchor,
                            double penalty_weight);

GradientField gradient_field(const Trajectory& traj, const AdjointTrajectory& adj,
                             const ControlField& zeta, const Kernel& kernel,
                             const ModelFunctions& model, const CostSpec& cost,
                             const ControlField* anchor, double penalty_weight);

// Integral over B(0,R0) of the pointwise optimality violation: max(0,-D)
// where zeta sits at 0, max(0,D) where it sits at M0, |D| strictly inside.
double optimality_residual(const ControlField& zeta, const ScalarField& D);

ControlField bang_bang_extract(const ScalarField& D, const AdmissibleSet& set);

struct OptimizerSettings {
  double step0 = 1.0;
  int max_iters = 100;
  double tol_resid = 0.0;       // absolute residual target
  double tol_resid_rel = 1e-4;  // relative to the first residual
  double penalty_weight = 0.0;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double growth = 1.5;
};

OptimizerReport projected_gradient_solve(const Problem& problem, const ControlField& zeta0,
                                         const ControlField* anchor,
                                         const OptimizerSettings& settings);

// Solve at N = N0, 2 N0, 4 N0, ... warm-starting each level from the previous
// control and using it as the penalty anchor.
OptimizerReport continuation_in_h(const Problem& problem, int N0, int levels,
                                  const ControlField& zeta0, const OptimizerSettings& settings);

}  // namespace fpc
