#pragma once

#include <vector>

#include "fpc/grid.hpp"

namespace fpc {

// Compactly supported interaction kernel G_R with precomputed stencil of
// values and analytic gradients at all grid offsets with |offset| < R.
// Profile: G_R(x) = c_R (1 - |x|^2/R^2)^3 inside B(0,R), zero outside;
// C^2 across |x| = R, normalized to unit mass.
struct Kernel {
  double R = 1.0;
  double c_R = 1.0;
  const Grid* grid = nullptr;

  struct StencilEntry {
    std::array<int, 3> offset;
    double value;
    std::array<double, 3> grad;
  };
  std::vector<StencilEntry> stencil;

  double g(const std::array<double, 3>& x, int d) const;
  std::array<double, 3> grad_g(const std::array<double, 3>& x, int d) const;
};

struct AdmissibleSet {
  double M0_tilde = 1.0;  // pointwise upper bound on the control
  double R0 = 1.0;        // support radius

  AdmissibleSet() = default;
  AdmissibleSet(double M0, double R0_) : M0_tilde(M0), R0(R0_) {
    if (M0_tilde < 0.0 || R0 <= 0.0) throw ConfigError("admissible set: need M0 >= 0, R0 > 0");
  }
};

// A control on the grid, clamped to [0, M0] and supported in B(0,R0).
struct ControlField {
  ScalarField zeta;
  AdmissibleSet set;
};

Kernel make_kernel(double R, const Grid& grid);

// K(zeta)(x) = -sum_{x'} grad G_R(x - x') zeta(x') dx^d, by direct stencil
// convolution with the analytic gradient.
VectorField nonlocal_drift(const ScalarField& zeta, const Kernel& kernel);
inline VectorField nonlocal_drift(const ControlField& zeta, const Kernel& kernel) {
  return nonlocal_drift(zeta.zeta, kernel);
}

// Adjoint of the convolution above: given a vector field F, returns the
// scalar field D with <K(xi), F> = <xi, D> for every xi.
ScalarField nonlocal_drift_transpose(const VectorField& F, const Kernel& kernel);

// Pointwise clamp to [0, M0] and zeroing outside B(0,R0); idempotent.
ControlField project_admissible(const ScalarField& f, const AdmissibleSet& set);

// M  = M0 * sum |grad G_R| dx^d      (sup bound on |K(zeta)|)
// M1 = M0 * sum |grad^2 G_R| dx^d    (bound on |grad K(zeta)|, finite
//                                     differences of the gradient stencil)
struct DriftBounds {
  double M = 0.0;
  double M1 = 0.0;
};
DriftBounds drift_bounds(const Kernel& kernel, const AdmissibleSet& set);

}  // namespace fpc
