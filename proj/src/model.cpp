#include "fpc/model.hpp"

#include <cmath>
#include <limits>

namespace fpc {

ScalarField project_initial(const InitialDensity& rho0, const Grid& g) {
  ScalarField f(g);
  for (std::size_t i = 0; i < g.cells(); ++i) {
    double v = rho0.rho0(g.center(i));
    if (!std::isfinite(v)) throw NumericalError("initial density: non-finite sample");
    f.values[static_cast<Eigen::Index>(i)] = std::max(v, 0.0);
  }
  const double m = integrate(f);
  if (m <= 0.0) throw ConfigError("initial density vanishes on the grid");
  f.values /= m;
  return f;
}

namespace {

// Worst violation of `violation(r) <= 0` over a uniform sample of [lo,hi].
template <typename F>
HypothesisCheck scan1(const std::string& name, double lo, double hi, int samples, F violation) {
  HypothesisCheck c{name};
  for (int k = 0; k < samples; ++k) {
    const double r = lo + (hi - lo) * k / (samples - 1);
    const double v = violation(r);
    if (!std::isfinite(v)) {
      c.pass = false;
      c.non_finite = true;
      c.witness = {r, 0.0};
      c.worst_violation = std::numeric_limits<double>::infinity();
      return c;
    }
    if (v > c.worst_violation) {
      c.worst_violation = v;
      c.witness = {r, 0.0};
      c.pass = v <= 0.0;
    }
  }
  return c;
}

}  // namespace

ValidationReport validate_hypotheses(const ModelFunctions& model, const CostSpec& cost,
                                     const InitialDensity& rho0, double range_lo,
                                     double range_hi, int samples) {
  if (samples < 2) throw ConfigError("validate_hypotheses: need at least 2 samples");
  if (!(range_hi > range_lo)) throw ConfigError("validate_hypotheses: empty range");
  ValidationReport rep;

  {
    HypothesisCheck c{"beta(0)=0"};
    const double v = model.beta(0.0);
    c.worst_violation = std::abs(v);
    c.pass = std::isfinite(v) && v == 0.0;
    c.non_finite = !std::isfinite(v);
    rep.checks.push_back(c);
  }
  rep.checks.push_back(scan1("gamma0 <= beta'(r)", range_lo, range_hi, samples,
                             [&](double r) { return model.gamma0 - model.beta_prime(r); }));
  rep.checks.push_back(scan1("beta'(r) <= gamma1", range_lo, range_hi, samples,
                             [&](double r) { return model.beta_prime(r) - model.gamma1; }));
  {
    // |b*(r)-b*(s)| <= alpha |beta(r)-beta(s)| on sampled pairs (coarse pair grid).
    HypothesisCheck c{"|b*(r)-b*(s)| <= alpha|beta(r)-beta(s)|"};
    const int m = std::min(samples, 200);
    for (int i = 0; i < m; ++i) {
      const double r = range_lo + (range_hi - range_lo) * i / (m - 1);
      for (int j = i + 1; j < m; ++j) {
        const double s = range_lo + (range_hi - range_lo) * j / (m - 1);
        const double v =
            std::abs(model.b_star(r) - model.b_star(s)) - model.alpha * std::abs(model.beta(r) - model.beta(s));
        if (!std::isfinite(v)) {
          c.pass = false;
          c.non_finite = true;
          c.witness = {r, s};
          break;
        }
        if (v > c.worst_violation + 1e-14) {
          c.worst_violation = v;
          c.witness = {r, s};
          c.pass = v <= 1e-12;
        }
      }
      if (c.non_finite) break;
    }
    rep.checks.push_back(c);
  }
  rep.checks.push_back(scan1("b(r) >= 0 for r >= 0", std::max(0.0, range_lo),
                             std::max(range_hi, 1e-9), samples,
                             [&](double r) { return -model.b(r); }));
  rep.checks.push_back(scan1("|b(r)| <= b_sup", range_lo, range_hi, samples,
                             [&](double r) { return std::abs(model.b(r)) - model.b_sup; }));
  rep.checks.push_back(scan1("sigma(r)^2 >= 2*gamma0", std::max(0.0, range_lo),
                             std::max(range_hi, 1e-9), samples, [&](double r) {
                               return 2.0 * model.gamma0 - 2.0 * model.psi(r);
                             }));

  // Cost nonnegativity and support; sampled along the first axis and at a few
  // off-axis points with |x| beyond R0.
  {
    HypothesisCheck c{"G, G_T, Q >= 0"};
    for (int k = 0; k < samples; ++k) {
      const double x1 = range_lo + (range_hi - range_lo) * k / (samples - 1);
      const std::array<double, 3> x{x1, 0.0, 0.0};
      const double t = static_cast<double>(k % 7) / 7.0;
      const double z = 0.9 * static_cast<double>(k % 5) / 4.0;
      const double v = std::min({cost.G(t, x), cost.G_T(x), cost.Q(x, z)});
      if (!std::isfinite(v)) {
        c.pass = false;
        c.non_finite = true;
        c.witness = {x1, z};
        break;
      }
      if (-v > c.worst_violation) {
        c.worst_violation = -v;
        c.witness = {x1, z};
        c.pass = v >= 0.0;
      }
    }
    rep.checks.push_back(c);
  }
  {
    HypothesisCheck c{"Q(x,z)=0 for |x|>R0"};
    for (int k = 0; k < samples; ++k) {
      const double x1 = cost.R0 * (1.0 + 1e-6 + 2.0 * k / (samples - 1));
      const std::array<double, 3> x{k % 2 ? x1 : -x1, 0.0, 0.0};
      const double z = static_cast<double>(k % 5) / 4.0;
      const double v = std::abs(cost.Q(x, z));
      if (!std::isfinite(v)) {
        c.pass = false;
        c.non_finite = true;
        c.witness = {x[0], z};
        break;
      }
      if (v > c.worst_violation) {
        c.worst_violation = v;
        c.witness = {x[0], z};
        c.pass = v == 0.0;
      }
    }
    rep.checks.push_back(c);
  }
  {
    HypothesisCheck c{"z -> Q(x,z) midpoint-convex"};
    const int m = std::min(samples, 64);
    for (int k = 0; k < m; ++k) {
      const double x1 = -cost.R0 + 2.0 * cost.R0 * k / (m - 1);
      const std::array<double, 3> x{x1, 0.0, 0.0};
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
          const double z1 = static_cast<double>(i) / (m - 1);
          const double z2 = static_cast<double>(j) / (m - 1);
          const double v =
              cost.Q(x, 0.5 * (z1 + z2)) - 0.5 * (cost.Q(x, z1) + cost.Q(x, z2)) - 1e-12;
          if (v > c.worst_violation) {
            c.worst_violation = v;
            c.witness = {x1, 0.5 * (z1 + z2)};
            c.pass = v <= 0.0;
          }
        }
    }
    rep.checks.push_back(c);
  }
  {
    HypothesisCheck c{"rho0 >= 0"};
    for (int k = 0; k < samples; ++k) {
      const double x1 = range_lo + (range_hi - range_lo) * k / (samples - 1);
      const double v = rho0.rho0({x1, 0.0, 0.0});
      if (!std::isfinite(v)) {
        c.pass = false;
        c.non_finite = true;
        c.witness = {x1, 0.0};
        break;
      }
      if (-v > c.worst_violation) {
        c.worst_violation = -v;
        c.witness = {x1, 0.0};
        c.pass = v >= 0.0;
      }
    }
    rep.checks.push_back(c);
  }
  {
    HypothesisCheck c{"analytic mass of rho0 = 1"};
    c.worst_violation = std::abs(rho0.analytic_mass - 1.0);
    c.pass = c.worst_violation <= 1e-14;
    rep.checks.push_back(c);
  }
  return rep;
}

ModelFunctions builtin_model(const std::string& name) {
  ModelFunctions m;
  if (name == "linear") {
    m.beta = [](double r) { return r; };
    m.beta_prime = [](double) { return 1.0; };
    m.psi = [](double) { return 1.0; };
    m.gamma0 = 1.0;
    m.gamma1 = 1.0;
  } else if (name == "rational-cubic") {
    m.beta = [](double r) { return r + r * r * r / (2.0 * (1.0 + r * r)); };
    m.beta_prime = [](double r) {
      const double q = 1.0 + r * r;
      return 1.0 + (3.0 * r * r + r * r * r * r) / (2.0 * q * q);
    };
    m.psi = [](double r) { return 1.0 + r * r / (2.0 * (1.0 + r * r)); };
    m.gamma0 = 1.0;
    m.gamma1 = 1.5625;  // analytic max of beta', attained at r^2 = 3
  } else {
    throw ConfigError("unknown builtin model: " + name);
  }
  m.b = [](double r) { return 1.0 / (1.0 + r * r); };
  m.b_star = [](double r) { return r / (1.0 + r * r); };
  m.b_star_prime = [](double r) {
    const double q = 1.0 + r * r;
    return (1.0 - r * r) / (q * q);
  };
  m.alpha = 1.0;
  m.b_sup = 1.0;
  return m;
}

}  // namespace fpc
