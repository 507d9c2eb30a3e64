#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpc/control.hpp"

using namespace fpc;

namespace {

double urand(std::uint64_t& s) {
  s = splitmix64(s);
  return static_cast<double>(s >> 11) * 0x1.0p-53;
}

ControlField random_admissible(const Grid& g, const AdmissibleSet& set, std::uint64_t seed) {
  ScalarField f(g);
  for (Eigen::Index k = 0; k < f.values.size(); ++k)
    f.values[k] = set.M0_tilde * urand(seed);
  return project_admissible(f, set);
}

}  // namespace

TEST_CASE("normalization constant in one dimension") {
  Grid g(1, 6.0, 256);
  const auto kern = make_kernel(1.0, g);
  CHECK(kern.c_R == doctest::Approx(35.0 / 32.0).epsilon(1e-14));
  // mass of the profile approaches 1 under the grid quadrature
  double mass = 0.0;
  for (const auto& e : kern.stencil) mass += e.value * g.cell_volume();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("profile is even, compactly supported, critical at the origin") {
  Grid g(1, 6.0, 128);
  const auto kern = make_kernel(1.0, g);
  CHECK(kern.g({0.0, 0.0, 0.0}, 1) == doctest::Approx(kern.c_R).epsilon(1e-14));
  CHECK(kern.g({1.0, 0.0, 0.0}, 1) == 0.0);
  CHECK(kern.g({1.5, 0.0, 0.0}, 1) == 0.0);
  CHECK(kern.g({0.3, 0.0, 0.0}, 1) == doctest::Approx(kern.g({-0.3, 0.0, 0.0}, 1)).epsilon(1e-14));
  CHECK(kern.grad_g({0.0, 0.0, 0.0}, 1)[0] == 0.0);
  CHECK(kern.grad_g({0.3, 0.0, 0.0}, 1)[0] ==
        doctest::Approx(-kern.grad_g({-0.3, 0.0, 0.0}, 1)[0]).epsilon(1e-14));
  // stencil covers exactly the offsets strictly inside the support
  for (const auto& e : kern.stencil) {
    const double r = std::abs(e.offset[0]) * g.dx;
    CHECK(r < kern.R);
  }
}

TEST_CASE("under-resolved kernel is rejected") {
  Grid g(1, 6.0, 8);  // dx = 1.5
  CHECK_THROWS_AS(make_kernel(1.0, g), ConfigError);
}

TEST_CASE("drift of a single-cell source is the kernel gradient") {
  Grid g(1, 6.0, 128);
  const auto kern = make_kernel(1.0, g);
  ScalarField zeta(g, 0.0);
  const std::size_t c0 = g.cells() / 2;
  zeta.values[static_cast<Eigen::Index>(c0)] = 1.0;
  const auto K = nonlocal_drift(zeta, kern);
  const auto x0 = g.center(c0);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const std::array<double, 3> diff{g.center(c)[0] - x0[0], 0.0, 0.0};
    const double expected = -g.cell_volume() * kern.grad_g(diff, 1)[0];
    CHECK(K.comp[0][static_cast<Eigen::Index>(c)] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("convolution transpose satisfies the pairing identity") {
  Grid g(1, 4.0, 64);
  const auto kern = make_kernel(0.8, g);
  std::uint64_t s = 17;
  ScalarField xi(g);
  VectorField F(g);
  for (Eigen::Index k = 0; k < xi.values.size(); ++k) {
    xi.values[k] = 2.0 * urand(s) - 1.0;
    F.comp[0][k] = 2.0 * urand(s) - 1.0;
  }
  const auto K = nonlocal_drift(xi, kern);
  const auto D = nonlocal_drift_transpose(F, kern);
  const double lhs = K.comp[0].dot(F.comp[0]) * g.cell_volume();
  const double rhs = xi.values.dot(D.values) * g.cell_volume();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("projection clamps, truncates and is idempotent") {
  Grid g(1, 6.0, 64);
  const AdmissibleSet set(1.0, 2.0);
  ScalarField f(g);
  std::uint64_t s = 3;
  for (Eigen::Index k = 0; k < f.values.size(); ++k) f.values[k] = 4.0 * urand(s) - 2.0;
  const auto p = project_admissible(f, set);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const double v = p.zeta.values[static_cast<Eigen::Index>(c)];
    CHECK(v >= 0.0);
    CHECK(v <= set.M0_tilde);
    if (g.radius(c) > set.R0) CHECK(v == 0.0);
  }
  const auto pp = project_admissible(p.zeta, set);
  for (Eigen::Index k = 0; k < f.values.size(); ++k) CHECK(pp.zeta.values[k] == p.zeta.values[k]);
}

TEST_CASE("drift bound dominates every admissible control") {
  Grid g(1, 6.0, 128);
  const auto kern = make_kernel(1.0, g);
  const AdmissibleSet set(1.0, 2.0);
  const auto bounds = drift_bounds(kern, set);
  CHECK(bounds.M > 0.0);
  CHECK(bounds.M1 > 0.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto zeta = random_admissible(g, set, 1000 + seed);
    const auto K = nonlocal_drift(zeta, kern);
    CHECK(K.comp[0].cwiseAbs().maxCoeff() <= bounds.M + 1e-6);
  }
}

TEST_CASE("drift bound scales with the control ceiling") {
  Grid g(1, 6.0, 128);
  const auto kern = make_kernel(1.0, g);
  const auto b1 = drift_bounds(kern, AdmissibleSet(1.0, 2.0));
  const auto b2 = drift_bounds(kern, AdmissibleSet(2.0, 2.0));
  CHECK(b2.M == doctest::Approx(2.0 * b1.M).epsilon(1e-12));
  CHECK(b2.M1 == doctest::Approx(2.0 * b1.M1).epsilon(1e-12));
}
