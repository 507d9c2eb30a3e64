#include "fpc/adjoint.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace fpc {

std::vector<ScalarField> discretize_running_cost(const CostSpec& cost, double h, int N,
                                                 const Grid& grid) {
  std::vector<ScalarField> out;
  out.reserve(static_cast<std::size_t>(N));
  for (int i = 1; i <= N; ++i) {
    const double t_mid = (i - 0.5) * h;
    ScalarField f(grid);
    for (std::size_t c = 0; c < grid.cells(); ++c)
      f.values[static_cast<Eigen::Index>(c)] = h * cost.G(t_mid, grid.center(c));
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

// Literal stencil of the backward recursion: centered advection, interior
// central differences, one-sided at the boundary.
Eigen::SparseMatrix<double> literal_operator(const Grid& g, const Eigen::SparseMatrix<double>& L,
                                             const VectorField& drift, const Eigen::VectorXd& rho,
                                             const ModelFunctions& model, double h) {
  const auto nc = static_cast<Eigen::Index>(g.cells());
  Eigen::VectorXd bp(nc), cp(nc);
  for (Eigen::Index i = 0; i < nc; ++i) {
    bp[i] = model.beta_prime(rho[i]);
    cp[i] = model.b_star_prime(rho[i]);
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int a = 0; a < g.d; ++a) {
    const auto str = static_cast<Eigen::Index>(g.stride(a));
    const auto& va = drift.comp[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.cells(); ++i) {
      const int ca = g.coords(i)[static_cast<std::size_t>(a)];
      const auto row = static_cast<int>(i);
      const double coef = -h * va[row] * cp[row];
      if (ca == 0) {
        trip.emplace_back(row, row, -coef / g.dx);
        trip.emplace_back(row, row + static_cast<int>(str), coef / g.dx);
      } else if (ca == g.n - 1) {
        trip.emplace_back(row, row - static_cast<int>(str), -coef / g.dx);
        trip.emplace_back(row, row, coef / g.dx);
      } else {
        trip.emplace_back(row, row - static_cast<int>(str), -coef / (2.0 * g.dx));
        trip.emplace_back(row, row + static_cast<int>(str), coef / (2.0 * g.dx));
      }
    }
  }
  Eigen::SparseMatrix<double> Adv(nc, nc);
  Adv.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> A = bp.asDiagonal() * L;
  A = A * h + Adv;
  A += Eigen::VectorXd::Ones(nc).asDiagonal();
  return A;
}

}  // namespace

AdjointTrajectory solve_adjoint(const Trajectory& traj, const CostSpec& cost,
                                const ModelFunctions& model, double tol, AdjointMode mode) {
  const Grid& g = *traj.states.front().grid;
  AdjointTrajectory out;
  out.mode = mode;
  out.G_tilde = discretize_running_cost(cost, traj.h, traj.N, g);

  ScalarField pN(g);
  for (std::size_t c = 0; c < g.cells(); ++c)
    pN.values[static_cast<Eigen::Index>(c)] = -cost.G_T(g.center(c));

  const auto L = ops::neg_laplacian(g);
  const auto D = ops::upwind_divergence(g, traj.drift);

  std::vector<ScalarField> rev;  // p^N, p^{N-1}, ..., p^0
  rev.push_back(std::move(pN));
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int i = traj.N; i >= 1; --i) {
    const auto& rho = traj.states[static_cast<std::size_t>(i)].values;
    Eigen::SparseMatrix<double> A;
    if (mode == AdjointMode::transpose) {
      A = Eigen::SparseMatrix<double>(
          ops::step_jacobian(g, L, D, rho, model, traj.h).transpose());
    } else {
      A = literal_operator(g, L, traj.drift, rho, model, traj.h);
    }
    const Eigen::VectorXd rhs =
        rev.back().values - out.G_tilde[static_cast<std::size_t>(i - 1)].values;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw NumericalError("adjoint solve: factorization failed at step " + std::to_string(i) +
                           " (reduce h)");
    ScalarField p(g);
    p.values = lu.solve(rhs);
    if (!p.values.allFinite())
      throw NumericalError("adjoint solve: divergence at step " + std::to_string(i) +
                           " (reduce h)");
    if ((A * p.values - rhs).norm() * std::sqrt(g.cell_volume()) > std::max(tol, 1e-12))
      p.values += lu.solve(rhs - A * p.values);
    rev.push_back(std::move(p));
  }
  out.states.assign(rev.rbegin(), rev.rend());
  return out;
}

DualityReport duality_identity(const Trajectory& traj, const SensitivityTrajectory& sens,
                               const AdjointTrajectory& adj, const Kernel& kernel,
                               const ModelFunctions& model) {
  const Grid& g = *traj.states.front().grid;
  const double vol = g.cell_volume();

  DualityReport rep;
  for (int i = 1; i <= traj.N; ++i)
    rep.lhs += adj.G_tilde[static_cast<std::size_t>(i - 1)].values.dot(
                   sens.states[static_cast<std::size_t>(i)].values) * vol;
  // terminal term <G_T, z^N> = -<p^N, z^N>
  rep.lhs -= adj.states[static_cast<std::size_t>(traj.N)].values.dot(
                 sens.states[static_cast<std::size_t>(traj.N)].values) * vol;

  const VectorField drift_xi = nonlocal_drift(sens.direction, kernel);
  for (int i = 1; i <= traj.N; ++i) {
    const auto& rho = traj.states[static_cast<std::size_t>(i)].values;
    Eigen::VectorXd bstar(rho.size());
    for (Eigen::Index k = 0; k < rho.size(); ++k) bstar[k] = model.b_star(rho[k]);
    rep.rhs -= traj.h * ops::face_advection_pairing(
                            g, drift_xi, traj.drift, bstar,
                            adj.states[static_cast<std::size_t>(i - 1)].values);
  }
  const double denom = std::max(std::abs(rep.lhs), 1e-300);
  rep.relative_error = std::abs(rep.lhs - rep.rhs) / denom;
  return rep;
}

}  // namespace fpc
