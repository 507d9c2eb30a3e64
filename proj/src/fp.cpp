#include "fpc/fp.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <vector>

namespace fpc {

namespace ops {

Eigen::SparseMatrix<double> neg_laplacian(const Grid& g) {
  std::vector<Eigen::Triplet<double>> trip;
  const double w = 1.0 / (g.dx * g.dx);
  for (int a = 0; a < g.d; ++a) {
    const std::size_t str = g.stride(a);
    for (std::size_t i = 0; i < g.cells(); ++i) {
      if (g.coords(i)[static_cast<std::size_t>(a)] == g.n - 1) continue;
      const auto lo = static_cast<int>(i);
      const auto hi = static_cast<int>(i + str);
      trip.emplace_back(lo, lo, w);
      trip.emplace_back(lo, hi, -w);
      trip.emplace_back(hi, hi, w);
      trip.emplace_back(hi, lo, -w);
    }
  }
  Eigen::SparseMatrix<double> L(static_cast<Eigen::Index>(g.cells()),
                                static_cast<Eigen::Index>(g.cells()));
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

Eigen::SparseMatrix<double> upwind_divergence(const Grid& g, const VectorField& vel) {
  std::vector<Eigen::Triplet<double>> trip;
  const double invdx = 1.0 / g.dx;
  for (int a = 0; a < g.d; ++a) {
    const std::size_t str = g.stride(a);
    const auto& va = vel.comp[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.cells(); ++i) {
      if (g.coords(i)[static_cast<std::size_t>(a)] == g.n - 1) continue;
      const auto lo = static_cast<int>(i);
      const auto hi = static_cast<int>(i + str);
      const double v = 0.5 * (va[lo] + va[hi]);
      if (v == 0.0) continue;
      const int donor = v > 0.0 ? lo : hi;
      trip.emplace_back(lo, donor, v * invdx);
      trip.emplace_back(hi, donor, -v * invdx);
    }
  }
  Eigen::SparseMatrix<double> D(static_cast<Eigen::Index>(g.cells()),
                                static_cast<Eigen::Index>(g.cells()));
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

namespace {
inline double donor_value(double v_donor, double qlo, double qhi) {
  if (v_donor > 0.0) return qlo;
  if (v_donor < 0.0) return qhi;
  return 0.5 * (qlo + qhi);
}
}  // namespace

Eigen::VectorXd upwind_divergence_apply(const Grid& g, const VectorField& vel_flux,
                                        const VectorField& vel_donor, const Eigen::VectorXd& q) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.cells()));
  const double invdx = 1.0 / g.dx;
  for (int a = 0; a < g.d; ++a) {
    const std::size_t str = g.stride(a);
    const auto& vf = vel_flux.comp[static_cast<std::size_t>(a)];
    const auto& vd = vel_donor.comp[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.cells(); ++i) {
      if (g.coords(i)[static_cast<std::size_t>(a)] == g.n - 1) continue;
      const auto lo = static_cast<Eigen::Index>(i);
      const auto hi = static_cast<Eigen::Index>(i + str);
      const double v = 0.5 * (vf[lo] + vf[hi]);
      if (v == 0.0) continue;
      const double flux = v * donor_value(0.5 * (vd[lo] + vd[hi]), q[lo], q[hi]);
      out[lo] += flux * invdx;
      out[hi] -= flux * invdx;
    }
  }
  return out;
}

double face_advection_pairing(const Grid& g, const VectorField& vel_flux,
                              const VectorField& vel_donor, const Eigen::VectorXd& q,
                              const Eigen::VectorXd& p) {
  double acc = 0.0;
  const double invdx = 1.0 / g.dx;
  for (int a = 0; a < g.d; ++a) {
    const std::size_t str = g.stride(a);
    const auto& vf = vel_flux.comp[static_cast<std::size_t>(a)];
    const auto& vd = vel_donor.comp[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.cells(); ++i) {
      if (g.coords(i)[static_cast<std::size_t>(a)] == g.n - 1) continue;
      const auto lo = static_cast<Eigen::Index>(i);
      const auto hi = static_cast<Eigen::Index>(i + str);
      const double v = 0.5 * (vf[lo] + vf[hi]);
      if (v == 0.0) continue;
      acc += v * donor_value(0.5 * (vd[lo] + vd[hi]), q[lo], q[hi]) * (p[hi] - p[lo]) * invdx;
    }
  }
  return acc * g.cell_volume();
}

VectorField advection_velocity_transpose(const Grid& g, const VectorField& vel_donor,
                                         const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
  VectorField out(g);
  const double invdx = 1.0 / g.dx;
  for (int a = 0; a < g.d; ++a) {
    const std::size_t str = g.stride(a);
    const auto& vd = vel_donor.comp[static_cast<std::size_t>(a)];
    auto& oa = out.comp[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.cells(); ++i) {
      if (g.coords(i)[static_cast<std::size_t>(a)] == g.n - 1) continue;
      const auto lo = static_cast<Eigen::Index>(i);
      const auto hi = static_cast<Eigen::Index>(i + str);
      // face weight: q_donor (p_lo - p_hi)/dx, split evenly between the two
      // cells whose mean forms the face velocity
      const double w = donor_value(0.5 * (vd[lo] + vd[hi]), q[lo], q[hi]) * (p[lo] - p[hi]) * invdx;
      oa[lo] += 0.5 * w;
      oa[hi] += 0.5 * w;
    }
  }
  return out;
}

Eigen::SparseMatrix<double> step_jacobian(const Grid& g, const Eigen::SparseMatrix<double>& L,
                                          const Eigen::SparseMatrix<double>& D,
                                          const Eigen::VectorXd& rho, const ModelFunctions& model,
                                          double h) {
  const auto nc = static_cast<Eigen::Index>(g.cells());
  Eigen::VectorXd bp(nc), cp(nc);
  for (Eigen::Index i = 0; i < nc; ++i) {
    bp[i] = model.beta_prime(rho[i]);
    cp[i] = model.b_star_prime(rho[i]);
  }
  Eigen::SparseMatrix<double> J(nc, nc);
  J = (L * bp.asDiagonal() + D * cp.asDiagonal()) * h;
  J += Eigen::VectorXd::Ones(nc).asDiagonal();
  return J;
}

}  // namespace ops

namespace {

Eigen::VectorXd apply_scalar(const std::function<double(double)>& f, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return out;
}

}  // namespace

ScalarField implicit_step(const ScalarField& rho_in, const VectorField& drift, double h,
                          const ModelFunctions& model, double tol, StepDiagnostics* diag_out) {
  const Grid& g = *rho_in.grid;
  const double vol = g.cell_volume();
  const auto L = ops::neg_laplacian(g);
  const auto D = ops::upwind_divergence(g, drift);

  auto residual = [&](const Eigen::VectorXd& rho) -> Eigen::VectorXd {
    return rho - rho_in.values +
           h * (L * apply_scalar(model.beta, rho) + D * apply_scalar(model.b_star, rho));
  };

  Eigen::VectorXd rho = rho_in.values;
  Eigen::VectorXd r = residual(rho);
  double r_l1 = r.lpNorm<1>() * vol;
  if (!std::isfinite(r_l1)) throw NumericalError("implicit step: numerical blowup");

  const int max_newton = 50;
  int iters = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  while (r_l1 > tol && iters < max_newton) {
    auto J = ops::step_jacobian(g, L, D, rho, model, h);
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw NumericalError("implicit step: singular Jacobian");
    const Eigen::VectorXd delta = lu.solve(-r);
    double s = 1.0;
    Eigen::VectorXd rho_try, r_try;
    double l1_try = 0.0;
    bool ok = false;
    for (int half = 0; half <= 30; ++half) {
      rho_try = rho + s * delta;
      r_try = residual(rho_try);
      l1_try = r_try.lpNorm<1>() * vol;
      if (!std::isfinite(l1_try)) throw NumericalError("implicit step: numerical blowup");
      if (l1_try < r_l1 * (1.0 - 1e-4 * s)) {
        ok = true;
        break;
      }
      s *= 0.5;
    }
    if (!ok) {
      // Fixed-point fallback on the resolvent form: diffusion semi-implicit
      // through Psi (L diag(Psi(rho)) rho = L beta(rho) at the fixed point),
      // drift lagged.
      const auto nc = static_cast<Eigen::Index>(g.cells());
      Eigen::VectorXd psi(nc);
      for (Eigen::Index k = 0; k < nc; ++k) psi[k] = model.psi(rho[k]);
      Eigen::SparseMatrix<double> A = L * psi.asDiagonal() * h;
      A += Eigen::VectorXd::Ones(nc).asDiagonal();
      lu.compute(A);
      if (lu.info() != Eigen::Success) throw NumericalError("implicit step: singular resolvent");
      rho_try = lu.solve(rho_in.values - h * (D * apply_scalar(model.b_star, rho)));
      r_try = residual(rho_try);
      l1_try = r_try.lpNorm<1>() * vol;
      if (!(l1_try < r_l1))
        throw NumericalError("implicit step failed: residual " + std::to_string(r_l1));
    }
    rho.swap(rho_try);
    r.swap(r_try);
    r_l1 = l1_try;
    ++iters;
  }
  if (r_l1 > tol)
    throw NumericalError("implicit step failed after max iterations, residual " +
                         std::to_string(r_l1));

  StepDiagnostics d;
  d.newton_iters = iters;
  d.residual_l1 = r_l1;
  const double mass_in = rho_in.values.sum() * vol;
  d.mass_drift_pre = rho.sum() * vol - mass_in;
  d.min_value = rho.minCoeff();

  double clipped = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (rho[i] < 0.0) {
      clipped += -rho[i];
      rho[i] = 0.0;
    }
  d.clipped_mass = clipped * vol;
  const double mass_now = rho.sum() * vol;
  if (mass_now > 0.0) rho *= mass_in / mass_now;

  if (diag_out) *diag_out = d;
  ScalarField out(g);
  out.values = std::move(rho);
  return out;
}

Trajectory solve_forward(const ScalarField& rho0_grid, const ControlField& zeta,
                         const Kernel& kernel, int N, double T, const ModelFunctions& model,
                         double tol) {
  if (N < 1) throw ConfigError("solve_forward: need N >= 1");
  const Grid& g = *rho0_grid.grid;
  Trajectory traj;
  traj.N = N;
  traj.T = T;
  traj.h = T / N;
  traj.zeta = zeta;
  traj.drift = nonlocal_drift(zeta, kernel);

  const auto bounds = drift_bounds(kernel, zeta.set);
  if (traj.h * bounds.M1 >= 0.5)
    throw ConfigError("solve_forward: h*M1 >= 1/2, reduce the time step");

  traj.states.reserve(static_cast<std::size_t>(N) + 1);
  traj.states.push_back(rho0_grid);
  traj.sup_l2 = norm_l2(rho0_grid);
  traj.sup_linf = norm_linf(rho0_grid);
  {
    auto g0 = gradient(rho0_grid);
    double e = 0.0;
    for (int a = 0; a < g.d; ++a) e += g0.comp[static_cast<std::size_t>(a)].squaredNorm();
    traj.energy = traj.h * e * g.cell_volume();
  }
  for (int i = 0; i < N; ++i) {
    StepDiagnostics d;
    ScalarField next;
    try {
      next = implicit_step(traj.states.back(), traj.drift, traj.h, model, tol, &d);
    } catch (const NumericalError& e) {
      throw NumericalError("forward step " + std::to_string(i + 1) + ": " + e.what());
    }
    traj.diag.push_back(d);
    traj.cumulative_clipped += d.clipped_mass;
    if (traj.cumulative_clipped > 1e-8)
      throw NumericalError("forward solve: cumulative clipped mass exceeds budget at step " +
                           std::to_string(i + 1));
    traj.sup_l2 = std::max(traj.sup_l2, norm_l2(next));
    traj.sup_linf = std::max(traj.sup_linf, norm_linf(next));
    auto gr = gradient(next);
    double e = 0.0;
    for (int a = 0; a < g.d; ++a) e += gr.comp[static_cast<std::size_t>(a)].squaredNorm();
    traj.energy += traj.h * e * g.cell_volume();
    traj.states.push_back(std::move(next));
  }
  return traj;
}

Trajectory solve_forward(const InitialDensity& rho0, const ControlField& zeta,
                         const Kernel& kernel, int N, double T, const ModelFunctions& model,
                         double tol) {
  const Grid& g = *zeta.zeta.grid;
  return solve_forward(project_initial(rho0, g), zeta, kernel, N, T, model, tol);
}

SensitivityTrajectory solve_sensitivity(const Trajectory& traj, const ScalarField& xi,
                                        const Kernel& kernel, const ModelFunctions& model,
                                        double tol) {
  const Grid& g = *xi.grid;
  const auto L = ops::neg_laplacian(g);
  const auto D = ops::upwind_divergence(g, traj.drift);
  const VectorField drift_xi = nonlocal_drift(xi, kernel);

  SensitivityTrajectory out;
  out.direction = xi;
  out.states.reserve(static_cast<std::size_t>(traj.N) + 1);
  out.states.emplace_back(g, 0.0);  // z^0 = 0

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int i = 1; i <= traj.N; ++i) {
    const auto& rho = traj.states[static_cast<std::size_t>(i)].values;
    const Eigen::VectorXd bstar = [&] {
      Eigen::VectorXd v(rho.size());
      for (Eigen::Index k = 0; k < rho.size(); ++k) v[k] = model.b_star(rho[k]);
      return v;
    }();
    const Eigen::VectorXd forcing =
        ops::upwind_divergence_apply(g, drift_xi, traj.drift, bstar);
    const Eigen::VectorXd rhs = out.states.back().values - traj.h * forcing;
    auto J = ops::step_jacobian(g, L, D, rho, model, traj.h);
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw NumericalError("sensitivity solve: factorization failed at step " + std::to_string(i));
    ScalarField z(g);
    z.values = lu.solve(rhs);
    if ((J * z.values - rhs).lpNorm<1>() * g.cell_volume() > std::max(tol, 1e-12))
      z.values += lu.solve(rhs - J * z.values);
    out.states.push_back(std::move(z));
  }
  return out;
}

}  // namespace fpc
