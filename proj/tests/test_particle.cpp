#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpc/particle.hpp"

using namespace fpc;

namespace {

ScalarField gaussian(const Grid& g, double sigma) {
  ScalarField f(g);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const double x = g.center(c)[0];
    f.values[static_cast<Eigen::Index>(c)] = std::exp(-x * x / (2.0 * sigma * sigma));
  }
  f.values /= integrate(f);
  return f;
}

struct Setup {
  Grid g{1, 6.0, 128};
  ModelFunctions model = builtin_model("linear");
  Kernel kern;
  ControlField zeta;
  ScalarField rho0;
  Trajectory traj;

  Setup() : kern(make_kernel(1.0, g)), zeta{ScalarField(g, 0.0), AdmissibleSet(1.0, 2.0)},
            rho0(gaussian(g, 0.7)) {
    traj = solve_forward(rho0, zeta, kern, 16, 0.25, model);
  }
};

}  // namespace

TEST_CASE("repeated runs are bitwise identical") {
  Setup su;
  ParticleSettings ps;
  ps.count = 500;
  ps.steps = 32;
  ps.seed = 42;
  const auto a = simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, &su.traj);
  const auto b = simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, &su.traj);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k)
    for (std::size_t j = 0; j < a.snapshots[k].size(); ++j)
      CHECK(a.snapshots[k][j] == b.snapshots[k][j]);
}

TEST_CASE("different seeds decorrelate the ensemble") {
  Setup su;
  ParticleSettings ps;
  ps.count = 100;
  ps.steps = 8;
  ps.seed = 1;
  const auto a = simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, &su.traj);
  ps.seed = 2;
  const auto b = simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, &su.traj);
  double max_diff = 0.0;
  for (std::size_t j = 0; j < a.snapshots.back().size(); ++j)
    max_diff = std::max(max_diff, std::abs(a.snapshots.back()[j] - b.snapshots.back()[j]));
  CHECK(max_diff > 1e-3);
}

TEST_CASE("degenerate dynamics freeze the particle") {
  Setup su;
  ModelFunctions still = su.model;
  still.psi = [](double) { return 0.0; };
  still.b = [](double) { return 0.0; };
  ParticleSettings ps;
  ps.count = 1;
  ps.steps = 16;
  const auto ens = simulate(su.rho0, su.zeta, su.kern, still, ps, su.traj.T, &su.traj);
  for (const auto& snap : ens.snapshots) CHECK(snap[0] == ens.snapshots[0][0]);
}

TEST_CASE("density estimate has unit mass") {
  Setup su;
  ParticleSettings ps;
  ps.count = 2000;
  ps.steps = 16;
  const auto ens = simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, &su.traj);
  const auto est = estimate_density(ens, su.g, ps.steps, 0.0);
  CHECK(est.bandwidth > 0.0);
  CHECK(integrate(est.field) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.field.values.minCoeff() >= 0.0);
}

TEST_CASE("frozen heat dynamics spread the variance by 2T") {
  Setup su;
  ParticleSettings ps;
  ps.count = 20000;
  ps.steps = 64;
  ps.seed = 9;
  const auto ens = simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, &su.traj);
  const auto& snap = ens.snapshots.back();
  double mean = 0.0, var = 0.0;
  for (double x : snap) mean += x;
  mean /= ps.count;
  for (double x : snap) var += (x - mean) * (x - mean);
  var /= ps.count - 1;
  const double expected = 0.49 + 2.0 * su.traj.T;
  // variance of the sample variance for a Gaussian: 2 sigma^4 / (n-1)
  const double se = std::sqrt(2.0 * expected * expected / (ps.count - 1));
  CHECK(std::abs(var - expected) <= 3.0 * se + 0.02);
}

TEST_CASE("unit running cost has zero monte carlo variance") {
  Setup su;
  ParticleSettings ps;
  ps.count = 200;
  ps.steps = 16;
  const auto ens = simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, &su.traj);
  CostSpec cost;
  cost.G = [](double, const std::array<double, 3>&) { return 1.0; };
  cost.G_T = [](const std::array<double, 3>&) { return 0.0; };
  cost.Q = [](const std::array<double, 3>&, double) { return 0.0; };
  cost.Q_z = [](const std::array<double, 3>&, double) { return 0.0; };
  cost.R0 = 2.0;
  const auto mc = mc_cost(ens, cost, su.zeta);
  CHECK(mc.estimate == doctest::Approx(su.traj.T).epsilon(1e-12));
  CHECK(mc.stderr_ <= 1e-12);
}

TEST_CASE("frozen mode without a trajectory is rejected") {
  Setup su;
  ParticleSettings ps;
  ps.count = 10;
  ps.steps = 4;
  CHECK_THROWS_AS(simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, nullptr),
                  ConfigError);
}

TEST_CASE("interacting mode stays close to the pde solution") {
  Setup su;
  ParticleSettings ps;
  ps.mode = ParticleMode::interacting;
  ps.count = 4000;
  ps.steps = 16;
  ps.seed = 5;
  const auto ens = simulate(su.rho0, su.zeta, su.kern, su.model, ps, su.traj.T, nullptr);
  const auto est = estimate_density(ens, su.g, ps.steps, 0.0);
  ScalarField diff(su.g);
  diff.values = est.field.values - su.traj.states.back().values;
  CHECK(norm_l1(diff) <= 0.12);  // sampling + kde smoothing at this scale
}
