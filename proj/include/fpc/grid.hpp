#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "fpc/common.hpp"

namespace fpc {

// Uniform cell-centered tensor grid on the box [-L,L]^d, d in {1,2,3}.
// The continuous problem lives on R^d; the box is a truncation and all
// operators close it with zero-flux boundaries so that discrete mass is
// conserved exactly.
struct Grid {
  int d;
  double L;
  int n;       // cells per axis
  double dx;   // 2L/n

  Grid(int d_, double L_, int n_);

  std::size_t cells() const { return cells_; }
  double cell_volume() const { return vol_; }
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  std::array<int, 3> coords(std::size_t idx) const {
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      c[static_cast<std::size_t>(a)] = static_cast<int>(idx % static_cast<std::size_t>(n));
      idx /= static_cast<std::size_t>(n);
    }
    return c;
  }
  std::size_t index(const std::array<int, 3>& c) const {
    std::size_t idx = 0;
    for (int a = d - 1; a >= 0; --a)
      idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(c[static_cast<std::size_t>(a)]);
    return idx;
  }

  double axis_center(int i) const { return -L + (i + 0.5) * dx; }
  std::array<double, 3> center(std::size_t idx) const {
    auto c = coords(idx);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a)
      x[static_cast<std::size_t>(a)] = axis_center(c[static_cast<std::size_t>(a)]);
    return x;
  }
  double radius(std::size_t idx) const {
    auto x = center(idx);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
    return std::sqrt(r2);
  }

  bool same_layout(const Grid& other) const {
    return d == other.d && n == other.n && L == other.L;
  }

private:
  std::size_t cells_;
  double vol_;
  std::array<std::size_t, 3> strides_;
};

// One real per cell. Holds rho, p, z, zeta, G_T, Gtilde^i as grid functions.
struct ScalarField {
  const Grid* grid = nullptr;
  Eigen::VectorXd values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0)
      : grid(&g), values(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.cells()), fill)) {}
};

// d reals per cell, cell-centered. Holds K(zeta), grad p, grad rho.
struct VectorField {
  const Grid* grid = nullptr;
  std::array<Eigen::VectorXd, 3> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g) : grid(&g) {
    for (int a = 0; a < g.d; ++a)
      comp[static_cast<std::size_t>(a)] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.cells()));
  }
};

// Quadrature: sum_cells f * dx^d.
double integrate(const ScalarField& f);

double norm_l1(const ScalarField& f);   // integral of |f|
double norm_l2(const ScalarField& f);   // sqrt of integral of f^2
double norm_linf(const ScalarField& f);

// Central differences in the interior, one-sided at the boundary.
VectorField gradient(const ScalarField& f);

// Conservative flux-form div(F s) with donor-cell upwinding on faces and
// zero flux through the box boundary. Cell sums telescope to zero exactly.
ScalarField divergence_upwind(const VectorField& F, const ScalarField& s);

// Second-difference stencil with homogeneous Neumann closure; flux form,
// so the cell sum is exactly zero.
ScalarField laplacian_noflux(const ScalarField& f);

// Mass within one cell of the box boundary; diagnostic for truncation error.
double boundary_mass(const ScalarField& f);

// CSV round trip: one row per cell, columns (index per axis, coordinates, value).
void write_csv(const ScalarField& f, const std::string& path);
ScalarField read_csv(const Grid& g, const std::string& path);

}  // namespace fpc
