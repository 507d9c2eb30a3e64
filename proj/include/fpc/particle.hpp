#pragma once

#include <cstdint>

#include "fpc/fp.hpp"

namespace fpc {

enum class ParticleMode {
  frozen,       // density read from a Fokker-Planck trajectory
  interacting,  // density re-estimated from the ensemble each step (McKean-Vlasov)
};

// Positions at every saved time index (0..steps), flattened per particle.
struct ParticleEnsemble {
  int count = 0;
  int d = 1;
  double scheme_dt = 0.0;
  double T = 0.0;
  std::uint64_t seed = 0;
  // snapshots[k] holds count*d coordinates at time k*scheme_dt
  std::vector<std::vector<double>> snapshots;
  long reflections = 0;
};

struct DensityEstimate {
  ScalarField field;
  double bandwidth = 0.0;
};

struct ParticleSettings {
  ParticleMode mode = ParticleMode::frozen;
  int count = 10000;
  int steps = 256;
  std::uint64_t seed = 1;
  double bandwidth = 0.0;       // <= 0: Silverman's rule
  double reflect_budget = 1e-3; // run fails above this reflecting fraction
};

// Euler-Maruyama for dX = K(zeta)(X) b(rho(X)) dt + sqrt(2 Psi(rho(X))) dW,
// reflecting at the box boundary. Initial positions sampled from the
// projected rho0 (inverse CDF along the flattened cell index, uniform within
// the cell). Counter-based per-particle RNG streams: bitwise reproducible
// for a given (seed, count, steps), independent of scheduling.
ParticleEnsemble simulate(const ScalarField& rho0_grid, const ControlField& zeta,
                          const Kernel& kernel, const ModelFunctions& model,
                          const ParticleSettings& settings, double T,
                          const Trajectory* traj /* required in frozen mode */);

DensityEstimate estimate_density(const ParticleEnsemble& ens, const Grid& grid, int time_index,
                                 double bandwidth /* <= 0: Silverman */);

struct McCost {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

// Sample mean of the pathwise cost (trapezoidal in t) plus terminal cost,
// plus the deterministic control cost integral.
McCost mc_cost(const ParticleEnsemble& ens, const CostSpec& cost, const ControlField& zeta);

}  // namespace fpc
