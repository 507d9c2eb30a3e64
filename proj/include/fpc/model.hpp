#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fpc/grid.hpp"

namespace fpc {

// Nonlinearities of the Fokker-Planck equation and their derived quantities.
// beta is the diffusion nonlinearity, b the drift saturation; bstar(r) = b(r)*r
// and psi(r) = beta(r)/r (continuously extended at 0 by beta'(0)).
// gamma0/gamma1/alpha/b_sup are declared bounds, verified by sampling only.
struct ModelFunctions {
  std::function<double(double)> beta;
  std::function<double(double)> beta_prime;
  std::function<double(double)> psi;
  std::function<double(double)> b;
  std::function<double(double)> b_star;
  std::function<double(double)> b_star_prime;
  double gamma0 = 1.0;
  double gamma1 = 1.0;
  double alpha = 1.0;
  double b_sup = 1.0;

  double sigma(double r) const { return std::sqrt(2.0 * psi(r)); }
};

// Cost data: running cost G(t,x), terminal cost G_T(x), control cost Q(x,z)
// supported in the ball B(0,R0).
struct CostSpec {
  std::function<double(double, const std::array<double, 3>&)> G;
  std::function<double(const std::array<double, 3>&)> G_T;
  std::function<double(const std::array<double, 3>&, double)> Q;
  std::function<double(const std::array<double, 3>&, double)> Q_z;
  double R0 = 1.0;
};

struct InitialDensity {
  std::function<double(const std::array<double, 3>&)> rho0;
  double analytic_mass = 1.0;
};

// Grid projection: sample at cell centers and renormalize to unit mass.
ScalarField project_initial(const InitialDensity& rho0, const Grid& g);

struct HypothesisCheck {
  std::string name;
  bool pass = true;
  double worst_violation = 0.0;
  std::array<double, 2> witness{0.0, 0.0};  // sample point(s) of the worst violation
  bool non_finite = false;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Executable form of the standing hypotheses on (beta, b, costs, rho0):
// dense sampling over [range_lo, range_hi], at least 2 samples.
ValidationReport validate_hypotheses(const ModelFunctions& model, const CostSpec& cost,
                                     const InitialDensity& rho0, double range_lo,
                                     double range_hi, int samples);

// Builtin instances: "linear" (beta(r)=r) and "rational-cubic"
// (beta(r) = r + r^3/(2(1+r^2))); both use b(r) = 1/(1+r^2).
ModelFunctions builtin_model(const std::string& name);

}  // namespace fpc
