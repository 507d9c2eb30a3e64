#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <limits>

#include "fpc/optimize.hpp"

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

CostSpec repeller_cost(double R0) {
  CostSpec c;
  c.G = [](double, const std::array<double, 3>& x) { return std::exp(-2.0 * x[0] * x[0]); };
  c.G_T = [](const std::array<double, 3>& x) { return std::exp(-x[0] * x[0]); };
  c.Q = [](const std::array<double, 3>&, double) { return 0.0; };
  c.Q_z = [](const std::array<double, 3>&, double) { return 0.0; };
  c.R0 = R0;
  return c;
}

Problem small_problem(const Grid& g, Kernel kern, CostSpec cost) {
  Problem p;
  p.grid = &g;
  p.model = builtin_model("rational-cubic");
  p.cost = std::move(cost);
  p.kernel = std::move(kern);
  p.set = AdmissibleSet(1.0, 1.5);
  p.rho0 = gaussian(g, 0.6);
  p.N = 10;
  p.T = 0.25;
  return p;
}

}  // namespace

TEST_CASE("unit running cost integrates to the horizon") {
  Grid g(1, 4.0, 64);
  CostSpec c = repeller_cost(1.5);
  c.G = [](double, const std::array<double, 3>&) { return 1.0; };
  c.G_T = [](const std::array<double, 3>&) { return 0.0; };
  Problem p = small_problem(g, make_kernel(0.8, g), c);
  const ControlField zeta{ScalarField(g, 0.0), p.set};
  const auto cb = evaluate_cost(p.solve(zeta), zeta, p.cost, nullptr, 0.0);
  // unit mass at every step makes the running cost exactly T
  CHECK(cb.running == doctest::Approx(p.T).epsilon(1e-12));
  CHECK(cb.terminal == 0.0);
  CHECK(cb.control == 0.0);
  CHECK(cb.total == doctest::Approx(p.T).epsilon(1e-12));
}

TEST_CASE("gradient field matches finite differences of the cost") {
  Grid g(1, 4.0, 64);
  Problem p = small_problem(g, make_kernel(0.8, g), repeller_cost(1.5));
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    ScalarField z0(g, 0.0), xi(g, 0.0);
    std::uint64_t s = 31 + trial;
    for (std::size_t c = 0; c < g.cells(); ++c)
      if (g.radius(c) <= p.set.R0) {
        z0.values[static_cast<Eigen::Index>(c)] = 0.2 + 0.6 * urand(s);
        xi.values[static_cast<Eigen::Index>(c)] = 2.0 * urand(s) - 1.0;
      }
    const ControlField zeta{z0, p.set};
    const auto traj = p.solve(zeta);
    const auto adj = solve_adjoint(traj, p.cost, p.model);
    const auto grad = gradient_field(traj, adj, zeta, p.kernel, p.model, p.cost, nullptr, 0.0);
    const double predicted = grad.D.values.dot(xi.values) * g.cell_volume();

    const double eps = 1e-4;
    ScalarField zp(g), zm(g);
    zp.values = z0.values + eps * xi.values;
    zm.values = z0.values - eps * xi.values;
    const ControlField cp{zp, p.set}, cm{zm, p.set};
    const double fd = (evaluate_cost(p.solve(cp), cp, p.cost, nullptr, 0.0).total -
                       evaluate_cost(p.solve(cm), cm, p.cost, nullptr, 0.0).total) /
                      (2.0 * eps);
    CHECK(std::abs(fd - predicted) <= 1e-3 * std::max(std::abs(predicted), 1e-12));
  }
}

TEST_CASE("optimality residual agrees with a direct evaluation") {
  Grid g(1, 4.0, 32);
  const AdmissibleSet set(1.0, 1.5);
  ScalarField z(g, 0.0), D(g);
  std::uint64_t s = 12;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const auto idx = static_cast<Eigen::Index>(c);
    D.values[idx] = 2.0 * urand(s) - 1.0;
    const double u = urand(s);
    z.values[idx] = g.radius(c) <= set.R0 ? (u < 0.3 ? 0.0 : (u < 0.6 ? 1.0 : u)) : 0.0;
  }
  const ControlField zeta{z, set};
  // direct reimplementation of the defining integral
  double expect = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    if (g.radius(c) > set.R0) continue;
    const auto idx = static_cast<Eigen::Index>(c);
    const double zi = z.values[idx], di = D.values[idx];
    if (zi <= 1e-6)
      expect += std::max(0.0, -di);
    else if (zi >= 1.0 - 1e-6)
      expect += std::max(0.0, di);
    else
      expect += std::abs(di);
  }
  expect *= g.cell_volume();
  CHECK(optimality_residual(zeta, D) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("bang-bang extraction follows the sign of the gradient") {
  Grid g(1, 4.0, 32);
  const AdmissibleSet set(2.0, 1.5);
  ScalarField D(g, 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const double x = g.center(c)[0];
    D.values[static_cast<Eigen::Index>(c)] = x;  // positive right, negative left, tie at none
  }
  const auto bb = bang_bang_extract(D, set);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const auto idx = static_cast<Eigen::Index>(c);
    if (g.radius(c) > set.R0) {
      CHECK(bb.zeta.values[idx] == 0.0);
    } else if (D.values[idx] > 1e-12) {
      CHECK(bb.zeta.values[idx] == 0.0);
    } else if (D.values[idx] < -1e-12) {
      CHECK(bb.zeta.values[idx] == 2.0);
    } else {
      CHECK(bb.zeta.values[idx] == 1.0);
    }
  }
}

TEST_CASE("descent iterations never increase the cost") {
  Grid g(1, 4.0, 64);
  Problem p = small_problem(g, make_kernel(0.8, g), repeller_cost(1.5));
  OptimizerSettings st;
  st.max_iters = 15;
  const ControlField zeta0{ScalarField(g, 0.0), p.set};
  const auto rep = projected_gradient_solve(p, zeta0, nullptr, st);
  REQUIRE(rep.costs.size() >= 2);
  for (std::size_t k = 1; k < rep.costs.size(); ++k) CHECK(rep.costs[k] <= rep.costs[k - 1]);
  CHECK(rep.costs.back() < rep.costs.front());
  CHECK(rep.optimality_residual <= rep.initial_residual);
}

TEST_CASE("pure control cost drives the control to zero") {
  Grid g(1, 4.0, 64);
  CostSpec c = repeller_cost(1.5);
  c.G = [](double, const std::array<double, 3>&) { return 0.0; };
  c.G_T = [](const std::array<double, 3>&) { return 0.0; };
  c.Q = [](const std::array<double, 3>&, double z) { return 0.5 * z * z; };
  c.Q_z = [](const std::array<double, 3>&, double z) { return z; };
  Problem p = small_problem(g, make_kernel(0.8, g), c);
  ScalarField z0(g, 0.0);
  std::uint64_t s = 77;
  for (std::size_t cc = 0; cc < g.cells(); ++cc)
    if (g.radius(cc) <= p.set.R0) z0.values[static_cast<Eigen::Index>(cc)] = urand(s);
  OptimizerSettings st;
  st.max_iters = 60;
  st.tol_resid_rel = 1e-8;
  const auto rep = projected_gradient_solve(p, ControlField{z0, p.set}, nullptr, st);
  CHECK(norm_linf(rep.final_control.zeta) <= 1e-4);
}

TEST_CASE("projection against a one dimensional scan") {
  // for a single active cell the projected gradient step must land on the
  // brute-force minimizer of the quadratic model over [0, M0]
  const AdmissibleSet set(1.0, 1.5);
  for (double target : {-0.7, 0.3, 1.9}) {
    const double stepped = std::clamp(target, 0.0, set.M0_tilde);
    double best = 0.0, best_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10000; ++k) {
      const double z = set.M0_tilde * k / 10000.0;
      const double val = (z - target) * (z - target);
      if (val < best_val) {
        best_val = val;
        best = z;
      }
    }
    CHECK(stepped == doctest::Approx(best).epsilon(1e-3));
  }
}

TEST_CASE("continuation refines the step and settles the control") {
  Grid g(1, 4.0, 64);
  Problem p = small_problem(g, make_kernel(0.8, g), repeller_cost(1.5));
  OptimizerSettings st;
  st.max_iters = 12;
  const ControlField zeta0{ScalarField(g, 0.0), p.set};
  const auto rep = continuation_in_h(p, 8, 3, zeta0, st);
  REQUIRE(rep.h_levels.size() == 3);
  CHECK(rep.h_levels[0].h == doctest::Approx(p.T / 8.0));
  CHECK(rep.h_levels[2].h == doctest::Approx(p.T / 32.0));
  CHECK(rep.h_levels[2].zeta_change_l2 <= rep.h_levels[1].zeta_change_l2);
}
