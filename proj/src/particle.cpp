#include "fpc/particle.hpp"

#include <cmath>

namespace fpc {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double uniform01(std::uint64_t h) {
  // strictly inside (0,1)
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// one standard normal per (seed, particle, step, axis) via Box-Muller
double normal_draw(std::uint64_t seed, std::uint64_t particle, std::uint64_t step,
                   std::uint64_t axis) {
  std::uint64_t h = hash_combine(seed, particle);
  h = hash_combine(h, step);
  h = hash_combine(h, axis);
  const double u1 = uniform01(h);
  const double u2 = uniform01(splitmix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// multilinear interpolation of a cell-centered field at x, clamped to the
// cell-center hull
double interp(const Grid& g, const Eigen::VectorXd& v, const std::array<double, 3>& x) {
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (int a = 0; a < g.d; ++a) {
    double s = (x[static_cast<std::size_t>(a)] + g.L) / g.dx - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(g.n - 1));
    int b = static_cast<int>(std::floor(s));
    b = std::min(b, g.n - 2);
    base[static_cast<std::size_t>(a)] = b;
    w[static_cast<std::size_t>(a)] = s - b;
  }
  double acc = 0.0;
  const int corners = 1 << g.d;
  for (int m = 0; m < corners; ++m) {
    std::array<int, 3> c = base;
    double wt = 1.0;
    for (int a = 0; a < g.d; ++a) {
      const bool hi = (m >> a) & 1;
      c[static_cast<std::size_t>(a)] += hi ? 1 : 0;
      wt *= hi ? w[static_cast<std::size_t>(a)] : 1.0 - w[static_cast<std::size_t>(a)];
    }
    acc += wt * v[static_cast<Eigen::Index>(g.index(c))];
  }
  return acc;
}

std::vector<double> cell_cdf(const ScalarField& rho) {
  const Grid& g = *rho.grid;
  std::vector<double> cdf(g.cells());
  double acc = 0.0;
  for (std::size_t i = 0; i < g.cells(); ++i) {
    acc += std::max(0.0, rho.values[static_cast<Eigen::Index>(i)]);
    cdf[i] = acc;
  }
  for (auto& c : cdf) c /= acc;
  return cdf;
}

std::array<double, 3> sample_initial(const Grid& g, const ScalarField& rho,
                                     const std::vector<double>& cdf, double rho_max,
                                     std::uint64_t seed, std::uint64_t particle) {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  const std::uint64_t h0 = hash_combine(hash_combine(seed, 0xC0FFEEULL), particle);
  if (g.d == 1) {
    // inverse CDF of the piecewise-constant density
    const double u = uniform01(h0);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const auto cell = static_cast<std::size_t>(it - cdf.begin());
    const double lo = cell == 0 ? 0.0 : cdf[cell - 1];
    const double frac = (u - lo) / std::max(cdf[cell] - lo, 1e-300);
    x[0] = -g.L + (static_cast<double>(cell) + frac) * g.dx;
    return x;
  }
  // rejection sampling against the projected density
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::uint64_t h = hash_combine(h0, attempt);
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < g.d; ++a) {
      h = splitmix64(h);
      const double u = uniform01(h);
      x[static_cast<std::size_t>(a)] = -g.L + 2.0 * g.L * u;
      c[static_cast<std::size_t>(a)] =
          std::min(g.n - 1, static_cast<int>((x[static_cast<std::size_t>(a)] + g.L) / g.dx));
    }
    h = splitmix64(h);
    const double v = rho.values[static_cast<Eigen::Index>(g.index(c))];
    if (uniform01(h) * rho_max <= v) return x;
    if (attempt > 100000) throw NumericalError("initial sampling: rejection loop stuck");
  }
}

}  // namespace

ParticleEnsemble simulate(const ScalarField& rho0_grid, const ControlField& zeta,
                          const Kernel& kernel, const ModelFunctions& model,
                          const ParticleSettings& settings, double T, const Trajectory* traj) {
  const Grid& g = *rho0_grid.grid;
  if (settings.mode == ParticleMode::frozen && traj == nullptr)
    throw ConfigError("particle simulate: frozen mode needs a trajectory");
  if (settings.count < 1 || settings.steps < 1)
    throw ConfigError("particle simulate: need count >= 1 and steps >= 1");

  ParticleEnsemble ens;
  ens.count = settings.count;
  ens.d = g.d;
  ens.T = T;
  ens.scheme_dt = T / settings.steps;
  ens.seed = settings.seed;
  ens.snapshots.assign(static_cast<std::size_t>(settings.steps) + 1,
                       std::vector<double>(static_cast<std::size_t>(settings.count) * g.d));

  const VectorField drift = nonlocal_drift(zeta, kernel);
  const auto cdf = cell_cdf(rho0_grid);
  const double rho_max = rho0_grid.values.maxCoeff();

  for (int p = 0; p < settings.count; ++p) {
    const auto x = sample_initial(g, rho0_grid, cdf, rho_max, settings.seed,
                                  static_cast<std::uint64_t>(p));
    for (int a = 0; a < g.d; ++a)
      ens.snapshots[0][static_cast<std::size_t>(p) * g.d + static_cast<std::size_t>(a)] =
          x[static_cast<std::size_t>(a)];
  }

  // density field used for b(rho) and the diffusion coefficient
  ScalarField density = rho0_grid;
  const double dt = ens.scheme_dt;
  long reflections = 0;

  for (int k = 0; k < settings.steps; ++k) {
    if (settings.mode == ParticleMode::frozen) {
      const double t = k * dt;
      // rho_h(t) = rho^{i+1} on (ih, (i+1)h]
      int idx = static_cast<int>(std::ceil(t / traj->h - 1e-12));
      idx = std::clamp(idx, 0, traj->N);
      density = traj->states[static_cast<std::size_t>(idx)];
    } else if (k > 0) {
      const DensityEstimate est = estimate_density(ens, g, k, settings.bandwidth);
      density = est.field;
    }
    const auto& prev = ens.snapshots[static_cast<std::size_t>(k)];
    auto& next = ens.snapshots[static_cast<std::size_t>(k) + 1];
    for (int p = 0; p < settings.count; ++p) {
      std::array<double, 3> x{0.0, 0.0, 0.0};
      for (int a = 0; a < g.d; ++a)
        x[static_cast<std::size_t>(a)] =
            prev[static_cast<std::size_t>(p) * g.d + static_cast<std::size_t>(a)];
      const double r = interp(g, density.values, x);
      const double bval = model.b(r);
      const double sig = std::sqrt(std::max(0.0, 2.0 * model.psi(r)));
      for (int a = 0; a < g.d; ++a) {
        const double u = interp(g, drift.comp[static_cast<std::size_t>(a)], x);
        double xn = x[static_cast<std::size_t>(a)] + dt * u * bval +
                    sig * std::sqrt(dt) *
                        normal_draw(settings.seed, static_cast<std::uint64_t>(p),
                                    static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(a));
        // reflect at the box boundary
        while (xn < -g.L || xn > g.L) {
          if (xn < -g.L) xn = -2.0 * g.L - xn;
          if (xn > g.L) xn = 2.0 * g.L - xn;
          ++reflections;
        }
        next[static_cast<std::size_t>(p) * g.d + static_cast<std::size_t>(a)] = xn;
      }
    }
  }
  ens.reflections = reflections;
  const double frac = static_cast<double>(reflections) /
                      (static_cast<double>(settings.count) * settings.steps * g.d);
  if (frac > settings.reflect_budget)
    throw NumericalError("particle simulate: reflecting fraction " + std::to_string(frac) +
                         " exceeds budget (domain too small)");
  return ens;
}

DensityEstimate estimate_density(const ParticleEnsemble& ens, const Grid& grid, int time_index,
                                 double bandwidth) {
  if (time_index < 0 || time_index >= static_cast<int>(ens.snapshots.size()))
    throw ConfigError("estimate_density: time index out of range");
  const auto& snap = ens.snapshots[static_cast<std::size_t>(time_index)];
  const int n = ens.count;

  if (bandwidth <= 0.0) {
    // Silverman's rule on the first axis spread
    double mean = 0.0, var = 0.0;
    for (int p = 0; p < n; ++p) mean += snap[static_cast<std::size_t>(p) * grid.d];
    mean /= n;
    for (int p = 0; p < n; ++p) {
      const double dx = snap[static_cast<std::size_t>(p) * grid.d] - mean;
      var += dx * dx;
    }
    var /= std::max(1, n - 1);
    const double sigma = std::sqrt(std::max(var, 1e-12));
    bandwidth = sigma * std::pow(4.0 / ((grid.d + 2.0) * n), 1.0 / (grid.d + 4.0));
  }

  DensityEstimate out{ScalarField(grid, 0.0), bandwidth};
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const auto xc = grid.center(c);
    double acc = 0.0;
    for (int p = 0; p < n; ++p) {
      double r2 = 0.0;
      for (int a = 0; a < grid.d; ++a) {
        const double dxa = xc[static_cast<std::size_t>(a)] -
                           snap[static_cast<std::size_t>(p) * grid.d + static_cast<std::size_t>(a)];
        r2 += dxa * dxa;
      }
      acc += std::exp(-r2 * inv2h2);
    }
    out.field.values[static_cast<Eigen::Index>(c)] = acc;
  }
  const double mass = integrate(out.field);
  if (mass <= 0.0) throw NumericalError("estimate_density: empty estimate");
  out.field.values /= mass;
  return out;
}

McCost mc_cost(const ParticleEnsemble& ens, const CostSpec& cost, const ControlField& zeta) {
  const Grid& g = *zeta.zeta.grid;
  const int steps = static_cast<int>(ens.snapshots.size()) - 1;
  const double dt = ens.scheme_dt;

  double q_term = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c)
    q_term += cost.Q(g.center(c), zeta.zeta.values[static_cast<Eigen::Index>(c)]) * g.cell_volume();

  double mean = 0.0, m2 = 0.0;
  for (int p = 0; p < ens.count; ++p) {
    double path = 0.0;
    for (int k = 0; k <= steps; ++k) {
      std::array<double, 3> x{0.0, 0.0, 0.0};
      for (int a = 0; a < ens.d; ++a)
        x[static_cast<std::size_t>(a)] =
            ens.snapshots[static_cast<std::size_t>(k)]
                         [static_cast<std::size_t>(p) * ens.d + static_cast<std::size_t>(a)];
      const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
      path += w * dt * cost.G(k * dt, x);
      if (k == steps) path += cost.G_T(x);
    }
    // Welford
    const double delta = path - mean;
    mean += delta / (p + 1);
    m2 += delta * (path - mean);
  }
  McCost out;
  out.estimate = mean + q_term;
  out.stderr_ = ens.count > 1 ? std::sqrt(m2 / (ens.count - 1) / ens.count) : 0.0;
  return out;
}

}  // namespace fpc
