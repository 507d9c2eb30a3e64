#include "fpc/optimize.hpp"

#include <cmath>

namespace fpc {

namespace {

constexpr double kActiveBand = 1e-6;  // relative band for "sits at a bound"

Eigen::VectorXd map_b_star(const ModelFunctions& model, const Eigen::VectorXd& rho) {
  Eigen::VectorXd out(rho.size());
  for (Eigen::Index k = 0; k < rho.size(); ++k) out[k] = model.b_star(rho[k]);
  return out;
}

double bang_bang_fraction(const ControlField& zeta) {
  const Grid& g = *zeta.zeta.grid;
  const double M0 = zeta.set.M0_tilde;
  std::size_t in_ball = 0, at_bound = 0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    if (g.radius(c) > zeta.set.R0) continue;
    ++in_ball;
    const double v = zeta.zeta.values[static_cast<Eigen::Index>(c)];
    if (v <= kActiveBand * M0 || v >= (1.0 - kActiveBand) * M0) ++at_bound;
  }
  return in_ball ? static_cast<double>(at_bound) / static_cast<double>(in_ball) : 1.0;
}

}  // namespace

CostBreakdown evaluate_cost(const Trajectory& traj, const ControlField& zeta,
                            const CostSpec& cost, const ControlField* anchor,
                            double penalty_weight) {
  const Grid& g = *traj.states.front().grid;
  const double vol = g.cell_volume();
  CostBreakdown cb;

  const auto gtilde = discretize_running_cost(cost, traj.h, traj.N, g);
  for (int i = 1; i <= traj.N; ++i)
    cb.running += gtilde[static_cast<std::size_t>(i - 1)].values.dot(
                      traj.states[static_cast<std::size_t>(i)].values) * vol;

  for (std::size_t c = 0; c < g.cells(); ++c)
    cb.terminal += cost.G_T(g.center(c)) *
                   traj.states[static_cast<std::size_t>(traj.N)]
                       .values[static_cast<Eigen::Index>(c)] * vol;

  for (std::size_t c = 0; c < g.cells(); ++c)
    cb.control += cost.Q(g.center(c), zeta.zeta.values[static_cast<Eigen::Index>(c)]) * vol;

  if (anchor && penalty_weight != 0.0) {
    const Eigen::VectorXd diff = zeta.zeta.values - anchor->zeta.values;
    cb.penalty = 0.5 * penalty_weight * diff.squaredNorm() * vol;
  }
  cb.total = cb.running + cb.terminal + cb.control + cb.penalty;
  return cb;
}

GradientField gradient_field(const Trajectory& traj, const AdjointTrajectory& adj,
                             const ControlField& zeta, const Kernel& kernel,
                             const ModelFunctions& model, const CostSpec& cost,
                             const ControlField* anchor, double penalty_weight) {
  const Grid& g = *traj.states.front().grid;
  GradientField out;
  out.F = VectorField(g);

  for (int i = 1; i <= traj.N; ++i) {
    const Eigen::VectorXd bstar =
        map_b_star(model, traj.states[static_cast<std::size_t>(i)].values);
    const VectorField phi = ops::advection_velocity_transpose(
        g, traj.drift, bstar, adj.states[static_cast<std::size_t>(i - 1)].values);
    for (int a = 0; a < g.d; ++a)
      out.F.comp[static_cast<std::size_t>(a)] +=
          traj.h * phi.comp[static_cast<std::size_t>(a)];
  }

  out.D = nonlocal_drift_transpose(out.F, kernel);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const auto idx = static_cast<Eigen::Index>(c);
    out.D.values[idx] += cost.Q_z(g.center(c), zeta.zeta.values[idx]);
    if (anchor && penalty_weight != 0.0)
      out.D.values[idx] += penalty_weight * (zeta.zeta.values[idx] - anchor->zeta.values[idx]);
  }
  return out;
}

double optimality_residual(const ControlField& zeta, const ScalarField& D) {
  const Grid& g = *D.grid;
  const double M0 = zeta.set.M0_tilde;
  if (M0 == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    if (g.radius(c) > zeta.set.R0) continue;
    const auto idx = static_cast<Eigen::Index>(c);
    const double z = zeta.zeta.values[idx];
    const double d = D.values[idx];
    double r;
    if (z <= kActiveBand * M0)
      r = std::max(0.0, -d);
    else if (z >= (1.0 - kActiveBand) * M0)
      r = std::max(0.0, d);
    else
      r = std::abs(d);
    acc += r;
  }
  return acc * g.cell_volume();
}

ControlField bang_bang_extract(const ScalarField& D, const AdmissibleSet& set) {
  const Grid& g = *D.grid;
  ControlField out{ScalarField(g, 0.0), set};
  for (std::size_t c = 0; c < g.cells(); ++c) {
    if (g.radius(c) > set.R0) continue;
    const auto idx = static_cast<Eigen::Index>(c);
    const double d = D.values[idx];
    if (d > 1e-12)
      out.zeta.values[idx] = 0.0;
    else if (d < -1e-12)
      out.zeta.values[idx] = set.M0_tilde;
    else
      out.zeta.values[idx] = 0.5 * set.M0_tilde;  // tie; flagged by callers
  }
  return out;
}

OptimizerReport projected_gradient_solve(const Problem& problem, const ControlField& zeta0,
                                         const ControlField* anchor,
                                         const OptimizerSettings& settings) {
  if (!(settings.step0 > 0.0)) throw ConfigError("projected_gradient_solve: step0 must be > 0");
  const Grid& g = *problem.grid;
  const double vol = g.cell_volume();

  OptimizerReport rep;
  ControlField zeta = project_admissible(zeta0.zeta, problem.set);
  Trajectory traj = problem.solve(zeta);
  CostBreakdown cb = evaluate_cost(traj, zeta, problem.cost, anchor, settings.penalty_weight);
  rep.costs.push_back(cb.total);

  double step = settings.step0;
  for (int k = 0; k < settings.max_iters; ++k) {
    const AdjointTrajectory adj = solve_adjoint(traj, problem.cost, problem.model);
    GradientField grad = gradient_field(traj, adj, zeta, problem.kernel, problem.model,
                                        problem.cost, anchor, settings.penalty_weight);
    const double resid = optimality_residual(zeta, grad.D);
    if (k == 0) rep.initial_residual = resid;
    rep.optimality_residual = resid;
    rep.final_D = grad.D;
    if (resid <= std::max(settings.tol_resid, settings.tol_resid_rel * rep.initial_residual))
      break;

    double s = step;
    bool accepted = false;
    ControlField trial;
    Trajectory traj_try;
    CostBreakdown cb_try;
    while (s > settings.step0 * std::pow(2.0, -30)) {
      ScalarField candidate(g);
      candidate.values = zeta.zeta.values - s * grad.D.values;
      trial = project_admissible(candidate, problem.set);
      const double decrease_ref = grad.D.values.dot(zeta.zeta.values - trial.zeta.values) * vol;
      if (decrease_ref <= 0.0) break;  // projection did not move along a descent direction
      traj_try = problem.solve(trial);
      cb_try = evaluate_cost(traj_try, trial, problem.cost, anchor, settings.penalty_weight);
      if (cb_try.total <= cb.total - settings.armijo * decrease_ref) {
        accepted = true;
        break;
      }
      s *= settings.backtrack;
    }
    if (!accepted) {
      rep.stalled = true;
      break;
    }
    zeta = std::move(trial);
    traj = std::move(traj_try);
    cb = cb_try;
    rep.costs.push_back(cb.total);
    ++rep.iterates;
    step = s * settings.growth;
  }

  rep.final_control = zeta;
  rep.bang_bang_fraction = bang_bang_fraction(zeta);
  if (rep.final_D.grid == nullptr) {
    const AdjointTrajectory adj = solve_adjoint(traj, problem.cost, problem.model);
    rep.final_D = gradient_field(traj, adj, zeta, problem.kernel, problem.model, problem.cost,
                                 anchor, settings.penalty_weight).D;
    rep.optimality_residual = optimality_residual(zeta, rep.final_D);
    rep.initial_residual = rep.optimality_residual;
  }
  return rep;
}

OptimizerReport continuation_in_h(const Problem& problem, int N0, int levels,
                                  const ControlField& zeta0, const OptimizerSettings& settings) {
  if (levels < 1) throw ConfigError("continuation_in_h: need at least 1 level");
  const double vol = problem.grid->cell_volume();

  ControlField zeta = project_admissible(zeta0.zeta, problem.set);
  ControlField anchor = zeta;
  OptimizerReport last;
  std::vector<OptimizerReport::Level> hist;

  for (int lev = 0; lev < levels; ++lev) {
    Problem p = problem;
    p.N = N0 << lev;
    const bool use_anchor = lev > 0 && settings.penalty_weight != 0.0;
    OptimizerReport rep =
        projected_gradient_solve(p, zeta, use_anchor ? &anchor : nullptr, settings);
    const double change =
        std::sqrt((rep.final_control.zeta.values - zeta.zeta.values).squaredNorm() * vol);
    hist.push_back({p.T / p.N, rep.costs.back(), change});
    zeta = rep.final_control;
    anchor = zeta;  // next level anchors at this level's optimum
    last = std::move(rep);
  }
  last.h_levels = std::move(hist);
  return last;
}

}  // namespace fpc
