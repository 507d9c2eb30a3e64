#include "fpc/control.hpp"

#include <cmath>

namespace fpc {

namespace {

double unit_ball_profile_mass(int d, double R) {
  // integral of (1 - |x|^2/R^2)^3 over B(0,R)
  const double pi = std::acos(-1.0);
  switch (d) {
    case 1: return 32.0 * R / 35.0;
    case 2: return pi * R * R / 4.0;
    case 3: return 64.0 * pi * R * R * R / 315.0;
    default: throw ConfigError("kernel: unsupported dimension");
  }
}

}  // namespace

double Kernel::g(const std::array<double, 3>& x, int d) const {
  double r2 = 0.0;
  for (int a = 0; a < d; ++a) r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
  const double u = 1.0 - r2 / (R * R);
  if (u <= 0.0) return 0.0;
  return c_R * u * u * u;
}

std::array<double, 3> Kernel::grad_g(const std::array<double, 3>& x, int d) const {
  std::array<double, 3> out{0.0, 0.0, 0.0};
  double r2 = 0.0;
  for (int a = 0; a < d; ++a) r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
  const double u = 1.0 - r2 / (R * R);
  if (u <= 0.0) return out;
  const double factor = -6.0 * c_R * u * u / (R * R);
  for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(a)] = factor * x[static_cast<std::size_t>(a)];
  return out;
}

Kernel make_kernel(double R, const Grid& grid) {
  if (!(R > 2.0 * grid.dx)) throw ConfigError("kernel under-resolved: need R > 2*dx");
  Kernel k;
  k.R = R;
  k.grid = &grid;
  k.c_R = 1.0 / unit_ball_profile_mass(grid.d, R);

  const int reach = static_cast<int>(std::ceil(R / grid.dx));
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < grid.d; ++a) {
    lo[static_cast<std::size_t>(a)] = -reach;
    hi[static_cast<std::size_t>(a)] = reach;
  }
  std::array<int, 3> o = lo;
  while (true) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    double r2 = 0.0;
    for (int a = 0; a < grid.d; ++a) {
      x[static_cast<std::size_t>(a)] = o[static_cast<std::size_t>(a)] * grid.dx;
      r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
    }
    if (r2 < R * R) k.stencil.push_back({o, k.g(x, grid.d), k.grad_g(x, grid.d)});
    int a = 0;
    for (; a < grid.d; ++a) {
      auto& oa = o[static_cast<std::size_t>(a)];
      if (++oa <= hi[static_cast<std::size_t>(a)]) break;
      oa = lo[static_cast<std::size_t>(a)];
    }
    if (a == grid.d) break;
  }
  return k;
}

VectorField nonlocal_drift(const ScalarField& zeta, const Kernel& kernel) {
  const Grid& g = *zeta.grid;
  if (!g.same_layout(*kernel.grid)) throw ConfigError("nonlocal_drift: kernel built on a different grid");
  VectorField out(g);
  const double vol = g.cell_volume();
  for (std::size_t i = 0; i < g.cells(); ++i) {
    const auto c = g.coords(i);
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    for (const auto& e : kernel.stencil) {
      // source cell c' = c - offset, so that x - x' = offset*dx
      std::array<int, 3> cp = c;
      bool inside = true;
      for (int a = 0; a < g.d; ++a) {
        cp[static_cast<std::size_t>(a)] -= e.offset[static_cast<std::size_t>(a)];
        if (cp[static_cast<std::size_t>(a)] < 0 || cp[static_cast<std::size_t>(a)] >= g.n) inside = false;
      }
      if (!inside) continue;
      const double zv = zeta.values[static_cast<Eigen::Index>(g.index(cp))];
      if (zv == 0.0) continue;
      for (int a = 0; a < g.d; ++a)
        acc[static_cast<std::size_t>(a)] -= e.grad[static_cast<std::size_t>(a)] * zv;
    }
    for (int a = 0; a < g.d; ++a)
      out.comp[static_cast<std::size_t>(a)][static_cast<Eigen::Index>(i)] =
          acc[static_cast<std::size_t>(a)] * vol;
  }
  return out;
}

ScalarField nonlocal_drift_transpose(const VectorField& F, const Kernel& kernel) {
  const Grid& g = *F.grid;
  if (!g.same_layout(*kernel.grid)) throw ConfigError("nonlocal_drift_transpose: grid mismatch");
  ScalarField out(g, 0.0);
  const double vol = g.cell_volume();
  // <K(xi), F> = sum_c K(xi)(c).F(c) = sum_{c'} xi(c') D(c'),
  // D(c') = -vol * sum_offset grad G_R(offset).F(c' + offset).
  for (std::size_t i = 0; i < g.cells(); ++i) {
    const auto c = g.coords(i);
    double acc = 0.0;
    for (const auto& e : kernel.stencil) {
      std::array<int, 3> cp = c;
      bool inside = true;
      for (int a = 0; a < g.d; ++a) {
        cp[static_cast<std::size_t>(a)] += e.offset[static_cast<std::size_t>(a)];
        if (cp[static_cast<std::size_t>(a)] < 0 || cp[static_cast<std::size_t>(a)] >= g.n) inside = false;
      }
      if (!inside) continue;
      const auto j = static_cast<Eigen::Index>(g.index(cp));
      for (int a = 0; a < g.d; ++a)
        acc -= e.grad[static_cast<std::size_t>(a)] * F.comp[static_cast<std::size_t>(a)][j];
    }
    out.values[static_cast<Eigen::Index>(i)] = acc * vol;
  }
  return out;
}

ControlField project_admissible(const ScalarField& f, const AdmissibleSet& set) {
  const Grid& g = *f.grid;
  ControlField out{ScalarField(g, 0.0), set};
  for (std::size_t i = 0; i < g.cells(); ++i) {
    if (g.radius(i) > set.R0) continue;
    const double v = f.values[static_cast<Eigen::Index>(i)];
    out.zeta.values[static_cast<Eigen::Index>(i)] = std::clamp(v, 0.0, set.M0_tilde);
  }
  return out;
}

DriftBounds drift_bounds(const Kernel& kernel, const AdmissibleSet& set) {
  const Grid& g = *kernel.grid;
  const double vol = g.cell_volume();
  DriftBounds out;
  double sum_grad = 0.0;
  for (const auto& e : kernel.stencil) {
    double n2 = 0.0;
    for (int a = 0; a < g.d; ++a)
      n2 += e.grad[static_cast<std::size_t>(a)] * e.grad[static_cast<std::size_t>(a)];
    sum_grad += std::sqrt(n2);
  }
  out.M = set.M0_tilde * sum_grad * vol;

  // Hessian bound from finite differences of the gradient stencil.
  const int reach = static_cast<int>(std::ceil(kernel.R / g.dx)) + 1;
  double sum_hess = 0.0;
  std::array<int, 3> o{0, 0, 0};
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < g.d; ++a) {
    lo[static_cast<std::size_t>(a)] = -reach;
    hi[static_cast<std::size_t>(a)] = reach;
  }
  o = lo;
  while (true) {
    double frob2 = 0.0;
    for (int a = 0; a < g.d; ++a) {
      std::array<double, 3> xp{0.0, 0.0, 0.0}, xm{0.0, 0.0, 0.0};
      for (int q = 0; q < g.d; ++q) {
        xp[static_cast<std::size_t>(q)] = o[static_cast<std::size_t>(q)] * g.dx;
        xm[static_cast<std::size_t>(q)] = o[static_cast<std::size_t>(q)] * g.dx;
      }
      xp[static_cast<std::size_t>(a)] += 0.5 * g.dx;
      xm[static_cast<std::size_t>(a)] -= 0.5 * g.dx;
      const auto gp = kernel.grad_g(xp, g.d);
      const auto gm = kernel.grad_g(xm, g.d);
      for (int q = 0; q < g.d; ++q) {
        const double h = (gp[static_cast<std::size_t>(q)] - gm[static_cast<std::size_t>(q)]) / g.dx;
        frob2 += h * h;
      }
    }
    sum_hess += std::sqrt(frob2);
    int a = 0;
    for (; a < g.d; ++a) {
      auto& oa = o[static_cast<std::size_t>(a)];
      if (++oa <= hi[static_cast<std::size_t>(a)]) break;
      oa = lo[static_cast<std::size_t>(a)];
    }
    if (a == g.d) break;
  }
  out.M1 = set.M0_tilde * sum_hess * vol;
  return out;
}

}  // namespace fpc
