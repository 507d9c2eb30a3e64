#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpc/adjoint.hpp"

using namespace fpc;

namespace {

double urand(std::uint64_t& s) {
  s = splitmix64(s);
  return static_cast<double>(s >> 11) * 0x1.0p-53;
}

ScalarField gaussian(const Grid& g, double sigma) {
  ScalarField f(g);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const double x = g.center(c)[0];
    f.values[static_cast<Eigen::Index>(c)] = std::exp(-x * x / (2.0 * sigma * sigma));
  }
  f.values /= integrate(f);
  return f;
}

ControlField random_admissible(const Grid& g, const AdmissibleSet& set, std::uint64_t seed) {
  ScalarField f(g, 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c)
    if (g.radius(c) <= set.R0)
      f.values[static_cast<Eigen::Index>(c)] = set.M0_tilde * urand(seed);
  return project_admissible(f, set);
}

CostSpec smooth_cost(double R0) {
  CostSpec c;
  c.G = [](double, const std::array<double, 3>& x) {
    return std::exp(-2.0 * x[0] * x[0]);
  };
  c.G_T = [](const std::array<double, 3>& x) { return std::exp(-x[0] * x[0]); };
  c.Q = [](const std::array<double, 3>&, double) { return 0.0; };
  c.Q_z = [](const std::array<double, 3>&, double) { return 0.0; };
  c.R0 = R0;
  return c;
}

}  // namespace

TEST_CASE("running cost discretizes by the midpoint rule") {
  Grid g(1, 1.0, 4);
  CostSpec c = smooth_cost(1.0);
  c.G = [](double t, const std::array<double, 3>&) { return t; };
  const auto gt = discretize_running_cost(c, 0.5, 2, g);
  REQUIRE(gt.size() == 2);
  CHECK(gt[0].values[0] == doctest::Approx(0.125).epsilon(1e-14));  // h * G(h/2)
  CHECK(gt[1].values[0] == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("constant terminal cost propagates unchanged") {
  // column sums of the step Jacobian are one, so p = -c is a fixed point
  Grid g(1, 4.0, 64);
  const auto model = builtin_model("rational-cubic");
  const auto kern = make_kernel(0.8, g);
  const auto zeta = random_admissible(g, AdmissibleSet(1.0, 1.5), 4);
  const auto traj = solve_forward(gaussian(g, 0.6), zeta, kern, 8, 0.2, model);

  CostSpec c = smooth_cost(1.5);
  c.G = [](double, const std::array<double, 3>&) { return 0.0; };
  c.G_T = [](const std::array<double, 3>&) { return 3.0; };
  const auto adj = solve_adjoint(traj, c, model);
  for (const auto& p : adj.states)
    for (Eigen::Index k = 0; k < p.values.size(); ++k)
      CHECK(p.values[k] == doctest::Approx(-3.0).epsilon(1e-12));
}

TEST_CASE("terminal condition is the sampled cost, no renormalization") {
  Grid g(1, 4.0, 32);
  const auto model = builtin_model("linear");
  const auto kern = make_kernel(0.8, g);
  const ControlField zeta{ScalarField(g, 0.0), AdmissibleSet(1.0, 1.5)};
  const auto traj = solve_forward(gaussian(g, 0.6), zeta, kern, 4, 0.1, model);
  const auto cost = smooth_cost(1.5);
  const auto adj = solve_adjoint(traj, cost, model);
  for (std::size_t c = 0; c < g.cells(); ++c)
    CHECK(adj.states.back().values[static_cast<Eigen::Index>(c)] ==
          doctest::Approx(-cost.G_T(g.center(c))).epsilon(1e-15));
}

TEST_CASE("nonnegative costs give a nonpositive adjoint") {
  Grid g(1, 4.0, 64);
  const auto model = builtin_model("rational-cubic");
  const auto kern = make_kernel(0.8, g);
  const auto zeta = random_admissible(g, AdmissibleSet(1.0, 1.5), 21);
  const auto traj = solve_forward(gaussian(g, 0.6), zeta, kern, 12, 0.3, model);
  const auto adj = solve_adjoint(traj, smooth_cost(1.5), model);
  for (const auto& p : adj.states) CHECK(p.values.maxCoeff() <= 1e-12);
}

TEST_CASE("duality identity holds to near round-off") {
  Grid g(1, 4.0, 64);
  const auto model = builtin_model("rational-cubic");
  const auto kern = make_kernel(0.8, g);
  const AdmissibleSet set(1.0, 1.5);
  const auto cost = smooth_cost(1.5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto zeta = random_admissible(g, set, 100 + seed);
    const auto traj = solve_forward(gaussian(g, 0.6), zeta, kern, 10, 0.25, model);
    const auto adj = solve_adjoint(traj, cost, model);
    ScalarField xi(g, 0.0);
    std::uint64_t s = 500 + seed;
    for (std::size_t c = 0; c < g.cells(); ++c)
      if (g.radius(c) <= set.R0)
        xi.values[static_cast<Eigen::Index>(c)] = 2.0 * urand(s) - 1.0;
    const auto sens = solve_sensitivity(traj, xi, kern, model);
    const auto rep = duality_identity(traj, sens, adj, kern, model);
    CHECK(rep.relative_error <= 1e-6);
  }
}

TEST_CASE("literal stencil agrees with the transpose for smooth data") {
  Grid g(1, 4.0, 128);
  const auto model = builtin_model("rational-cubic");
  const auto kern = make_kernel(0.8, g);
  const auto zeta = random_admissible(g, AdmissibleSet(0.5, 1.5), 8);
  const auto traj = solve_forward(gaussian(g, 0.6), zeta, kern, 16, 0.2, model);
  const auto cost = smooth_cost(1.5);
  const auto a = solve_adjoint(traj, cost, model, 1e-12, AdjointMode::transpose);
  const auto b = solve_adjoint(traj, cost, model, 1e-12, AdjointMode::literal);
  ScalarField diff(g);
  diff.values = a.states.front().values - b.states.front().values;
  // both discretize the same backward equation; they differ at O(dx)
  CHECK(norm_l1(diff) <= 0.1 * norm_l1(a.states.front()));
}
