#include "fpc/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>

namespace fpc {

namespace fs = std::filesystem;

namespace {

// C2 ramp: 0 for u<=0, 1 for u>=1
double smootherstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

double get_num(const json& j, const std::string& key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number()) throw ConfigError("field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

double need_num(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing required field '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError("field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

std::array<double, 3> get_point(const json& j, const std::string& key, int d) {
  std::array<double, 3> out{0.0, 0.0, 0.0};
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (!v.is_array() || static_cast<int>(v.size()) != d)
    throw ConfigError("field '" + key + "' must be an array of length " + std::to_string(d));
  for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(a)] = v.at(static_cast<std::size_t>(a)).get<double>();
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// deterministic per-cell pseudorandom uniform in [0,1)
double cell_uniform(std::uint64_t seed, std::uint64_t tag, std::uint64_t cell) {
  return static_cast<double>(hash_combine(hash_combine(seed, tag), cell) >> 11) * 0x1.0p-53;
}

}  // namespace

std::function<double(const std::array<double, 3>&)> make_field(const json& spec, int d,
                                                               const Grid* grid) {
  if (!spec.is_object() || !spec.contains("type"))
    throw ConfigError("field spec must be an object with a 'type'");
  const std::string type = spec.at("type").get<std::string>();
  if (type == "zero") return [](const std::array<double, 3>&) { return 0.0; };
  if (type == "constant") {
    const double v = need_num(spec, "value");
    return [v](const std::array<double, 3>&) { return v; };
  }
  if (type == "gaussian") {
    const auto c = get_point(spec, "center", d);
    const double sigma = need_num(spec, "sigma");
    const double amp = get_num(spec, "amplitude", 0.0);
    if (sigma <= 0.0) throw ConfigError("gaussian: sigma must be > 0");
    // amplitude 0 means: normalize to unit mass in d dimensions
    const double pi = std::acos(-1.0);
    const double a = amp > 0.0 ? amp : 1.0 / std::pow(2.0 * pi * sigma * sigma, 0.5 * d);
    return [c, sigma, a, d](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int q = 0; q < d; ++q) {
        const double dq = x[static_cast<std::size_t>(q)] - c[static_cast<std::size_t>(q)];
        r2 += dq * dq;
      }
      return a * std::exp(-r2 / (2.0 * sigma * sigma));
    };
  }
  if (type == "mollified-box") {
    const auto c = get_point(spec, "center", d);
    const auto& hwj = spec.contains("halfwidth") ? spec.at("halfwidth") : json::array();
    if (!hwj.is_array() || static_cast<int>(hwj.size()) != d)
      throw ConfigError("mollified-box: 'halfwidth' must be an array of length " + std::to_string(d));
    std::array<double, 3> hw{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) hw[static_cast<std::size_t>(a)] = hwj.at(static_cast<std::size_t>(a)).get<double>();
    const double width = need_num(spec, "width");
    const double amp = get_num(spec, "amplitude", 1.0);
    if (width <= 0.0) throw ConfigError("mollified-box: 'width' must be > 0");
    return [c, hw, width, amp, d](const std::array<double, 3>& x) {
      double v = amp;
      for (int q = 0; q < d; ++q) {
        const double dist = std::abs(x[static_cast<std::size_t>(q)] - c[static_cast<std::size_t>(q)]);
        v *= smootherstep((hw[static_cast<std::size_t>(q)] - dist) / width + 0.5);
      }
      return v;
    };
  }
  if (type == "tabulated") {
    if (grid == nullptr) throw ConfigError("tabulated field needs a grid");
    const std::string file = spec.at("file").get<std::string>();
    auto data = std::make_shared<ScalarField>(read_csv(*grid, file));
    const Grid* g = grid;
    return [data, g](const std::array<double, 3>& x) {
      std::array<int, 3> ccoord{0, 0, 0};
      for (int a = 0; a < g->d; ++a)
        ccoord[static_cast<std::size_t>(a)] = std::clamp(
            static_cast<int>((x[static_cast<std::size_t>(a)] + g->L) / g->dx), 0, g->n - 1);
      return data->values[static_cast<Eigen::Index>(g->index(ccoord))];
    };
  }
  throw ConfigError("unknown field type '" + type + "'");
}

ScenarioConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  ScenarioConfig c;
  c.raw = j;
  c.dimension = static_cast<int>(need_num(j, "dimension"));
  c.box = need_num(j, "box");
  c.cells = static_cast<int>(need_num(j, "cells"));
  c.horizon = need_num(j, "horizon");
  c.steps = static_cast<int>(need_num(j, "steps"));
  if (c.steps < 1) throw ConfigError("'steps' must be >= 1");

  const json model = j.value("model", json::object());
  c.model_name = model.value("name", std::string("rational-cubic"));

  const json kernel = j.value("kernel", json::object());
  c.kernel_R = get_num(kernel, "R", 1.0);

  const json adm = j.value("admissible", json::object());
  c.M0 = get_num(adm, "M0", 1.0);
  c.R0 = get_num(adm, "R0", 2.0);
  if (c.R0 + c.kernel_R >= c.box)
    throw ConfigError("'admissible.R0' + 'kernel.R' must be < 'box' (support must fit)");

  c.initial = j.value("initial", json{{"type", "gaussian"}, {"sigma", 0.7}});
  const json cost = j.value("cost", json::object());
  c.cost_running = cost.value("running", json{{"type", "zero"}});
  c.cost_terminal = cost.value("terminal", json{{"type", "zero"}});
  c.cost_control = cost.value("control", json{{"type", "zero"}});

  const json opt = j.value("optimizer", json::object());
  c.optimizer.step0 = get_num(opt, "step0", 1.0);
  c.optimizer.max_iters = static_cast<int>(get_num(opt, "max_iters", 100));
  c.optimizer.tol_resid = get_num(opt, "tol_resid", 0.0);
  c.optimizer.tol_resid_rel = get_num(opt, "tol_resid_rel", 1e-4);
  c.optimizer.penalty_weight = get_num(opt, "penalty_weight", 0.0);
  c.continuation_levels = static_cast<int>(get_num(opt, "continuation_levels", 3));
  c.continuation_N0 = static_cast<int>(get_num(opt, "continuation_N0", 32));

  const json part = j.value("particles", json::object());
  c.particles.count = static_cast<int>(get_num(part, "count", 10000));
  c.particles.steps = static_cast<int>(get_num(part, "steps", 256));
  c.particles.seed = static_cast<std::uint64_t>(get_num(part, "seed", 1));
  c.particles.bandwidth = get_num(part, "bandwidth", 0.0);
  c.particles.mode = part.value("mode", std::string("frozen")) == std::string("interacting")
                         ? ParticleMode::interacting
                         : ParticleMode::frozen;
  c.mc_allowance = get_num(part, "allowance", 0.02);
  c.kde_l1_bound = get_num(part, "kde_l1_bound", 0.0);

  const json val = j.value("validate", json::object());
  c.validate_lo = get_num(val, "lo", -10.0);
  c.validate_hi = get_num(val, "hi", 10.0);
  c.validate_samples = static_cast<int>(get_num(val, "samples", 2001));

  if (j.contains("stages")) {
    if (!j.at("stages").is_array()) throw ConfigError("'stages' must be an array of names");
    for (const auto& s : j.at("stages")) c.stages.push_back(s.get<std::string>());
  } else {
    c.stages = {"validate", "forward"};
  }
  c.output = j.value("output", std::string("out"));
  c.seed = static_cast<std::uint64_t>(get_num(j, "seed", 1));
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config(j);
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  Scenario sc;
  sc.grid = std::make_unique<Grid>(cfg.dimension, cfg.box, cfg.cells);
  sc.model = builtin_model(cfg.model_name);
  sc.set = AdmissibleSet(cfg.M0, cfg.R0);

  const int d = cfg.dimension;
  auto g_spatial = make_field(cfg.cost_running, d, sc.grid.get());
  const double time_rate = get_num(cfg.cost_running, "time_rate", 0.0);
  sc.cost.G = [g_spatial, time_rate](double t, const std::array<double, 3>& x) {
    return g_spatial(x) * (1.0 + time_rate * t);
  };
  sc.cost.G_T = make_field(cfg.cost_terminal, d, sc.grid.get());
  sc.cost.R0 = cfg.R0;

  const std::string qtype = cfg.cost_control.value("type", std::string("zero"));
  if (qtype == "zero") {
    sc.cost.Q = [](const std::array<double, 3>&, double) { return 0.0; };
    sc.cost.Q_z = [](const std::array<double, 3>&, double) { return 0.0; };
  } else if (qtype == "quadratic") {
    const double cq = need_num(cfg.cost_control, "c_q");
    const double R0 = cfg.R0;
    auto inside = [R0, d](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
      return r2 <= R0 * R0;
    };
    sc.cost.Q = [cq, inside](const std::array<double, 3>& x, double z) {
      return inside(x) ? 0.5 * cq * z * z : 0.0;
    };
    sc.cost.Q_z = [cq, inside](const std::array<double, 3>& x, double z) {
      return inside(x) ? cq * z : 0.0;
    };
  } else {
    throw ConfigError("unknown control cost type '" + qtype + "'");
  }

  sc.rho0.rho0 = make_field(cfg.initial, d, sc.grid.get());
  sc.rho0.analytic_mass = 1.0;
  sc.rho0_grid = project_initial(sc.rho0, *sc.grid);

  sc.problem.grid = sc.grid.get();
  sc.problem.model = sc.model;
  sc.problem.cost = sc.cost;
  sc.problem.kernel = make_kernel(cfg.kernel_R, *sc.grid);
  sc.problem.set = sc.set;
  sc.problem.rho0 = sc.rho0_grid;
  sc.problem.N = cfg.steps;
  sc.problem.T = cfg.horizon;
  return sc;
}

namespace {

ControlField random_interior_control(const Grid& g, const AdmissibleSet& set, std::uint64_t seed,
                                     std::uint64_t tag) {
  ScalarField f(g, 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c)
    if (g.radius(c) <= set.R0)
      f.values[static_cast<Eigen::Index>(c)] =
          set.M0_tilde * (0.3 + 0.4 * cell_uniform(seed, tag, c));
  return ControlField{f, set};
}

ScalarField random_direction(const Grid& g, const AdmissibleSet& set, std::uint64_t seed,
                             std::uint64_t tag) {
  ScalarField f(g, 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c)
    if (g.radius(c) <= set.R0)
      f.values[static_cast<Eigen::Index>(c)] = 2.0 * cell_uniform(seed, tag, c) - 1.0;
  return f;
}

struct StageOutcome {
  bool pass = true;
  json report;
};

}  // namespace

int run_scenario(const ScenarioConfig& cfg, const std::string& out_dir, std::ostream& log) {
  using clock = std::chrono::steady_clock;
  json manifest;
  manifest["schema_version"] = 1;
  manifest["config"] = cfg.raw;
  manifest["config_hash"] = fnv1a(cfg.raw.dump());
  manifest["stages"] = json::object();
  manifest["artifacts"] = json::array();
  json timings = json::object();

  try {
    fs::create_directories(out_dir);
    Scenario sc = build_scenario(cfg);
    const Grid& g = *sc.grid;

    auto artifact = [&](const std::string& role, const std::string& name) {
      const std::string path = out_dir + "/" + name;
      manifest["artifacts"].push_back({{"role", role}, {"path", name}});
      return path;
    };

    bool all_pass = true;
    std::optional<Trajectory> forward;
    std::optional<ControlField> forward_zeta;
    std::optional<OptimizerReport> opt_report;
    std::optional<ParticleEnsemble> ensemble;

    auto need_forward = [&]() -> Trajectory& {
      if (!forward) {
        forward_zeta = ControlField{ScalarField(g, 0.0), sc.set};
        if (cfg.raw.contains("control") && cfg.raw.at("control").is_object()) {
          ScalarField zf(g);
          auto fn = make_field(cfg.raw.at("control"), g.d, &g);
          for (std::size_t c = 0; c < g.cells(); ++c)
            zf.values[static_cast<Eigen::Index>(c)] = fn(g.center(c));
          forward_zeta = project_admissible(zf, sc.set);
        }
        forward = sc.problem.solve(*forward_zeta);
      }
      return *forward;
    };

    for (const std::string& stage : cfg.stages) {
      log << "stage " << stage << "...\n";
      const auto t0 = clock::now();
      StageOutcome so;

      if (stage == "validate") {
        const auto rep = validate_hypotheses(sc.model, sc.cost, sc.rho0, cfg.validate_lo,
                                             cfg.validate_hi, cfg.validate_samples);
        so.pass = rep.all_pass();
        so.report["checks"] = json::array();
        for (const auto& c : rep.checks)
          so.report["checks"].push_back({{"name", c.name},
                                         {"pass", c.pass},
                                         {"worst_violation", c.worst_violation},
                                         {"witness", {c.witness[0], c.witness[1]}},
                                         {"non_finite", c.non_finite}});
      } else if (stage == "forward") {
        Trajectory& traj = need_forward();
        double worst_mass = 0.0, worst_pre = 0.0, min_val = 0.0;
        int max_newton = 0;
        for (std::size_t i = 0; i < traj.states.size(); ++i)
          worst_mass = std::max(worst_mass, std::abs(integrate(traj.states[i]) - 1.0));
        for (const auto& d : traj.diag) {
          worst_pre = std::max(worst_pre, std::abs(d.mass_drift_pre));
          min_val = std::min(min_val, d.min_value);
          max_newton = std::max(max_newton, d.newton_iters);
        }
        so.report = {{"mass_error_max", worst_mass},
                     {"mass_drift_pre_max", worst_pre},
                     {"min_value", min_val},
                     {"max_newton_iters", max_newton},
                     {"sup_l2", traj.sup_l2},
                     {"sup_linf", traj.sup_linf},
                     {"grad_energy", traj.energy},
                     {"clipped_mass", traj.cumulative_clipped},
                     {"boundary_mass", boundary_mass(traj.states.back())}};
        so.pass = worst_mass <= 1e-10 && worst_pre <= 1e-12 * traj.N;
        if (boundary_mass(traj.states.back()) > 1e-8)
          so.report["warning"] = "boundary mass above 1e-8: enlarge the box";
        write_csv(traj.states.back(), artifact("final_density", "density_final.csv"));
      } else if (stage == "adjoint") {
        Trajectory& traj = need_forward();
        const auto adj = solve_adjoint(traj, sc.cost, sc.model);
        double terminal_err = 0.0;
        for (std::size_t c = 0; c < g.cells(); ++c)
          terminal_err = std::max(
              terminal_err,
              std::abs(adj.states.back().values[static_cast<Eigen::Index>(c)] +
                       sc.cost.G_T(g.center(c))));
        double max_p = 0.0;
        for (const auto& p : adj.states) max_p = std::max(max_p, norm_linf(p));
        so.report = {{"terminal_error", terminal_err}, {"sup_p", max_p}};
        so.pass = terminal_err == 0.0;
        write_csv(adj.states.front(), artifact("adjoint_p0", "adjoint_p0.csv"));
      } else if (stage == "gradcheck") {
        const ControlField zeta = random_interior_control(g, sc.set, cfg.seed, 101);
        Trajectory traj = sc.problem.solve(zeta);
        const auto adj = solve_adjoint(traj, sc.cost, sc.model);
        const auto grad = gradient_field(traj, adj, zeta, sc.problem.kernel, sc.model, sc.cost,
                                         nullptr, 0.0);
        so.report["directions"] = json::array();
        double worst_fd = 0.0, worst_dual = 0.0;
        const double vol = g.cell_volume();
        for (int k = 0; k < 5; ++k) {
          const ScalarField xi = random_direction(g, sc.set, cfg.seed, 200 + static_cast<std::uint64_t>(k));
          const auto sens = solve_sensitivity(traj, xi, sc.problem.kernel, sc.model);
          const auto dual = duality_identity(traj, sens, adj, sc.problem.kernel, sc.model);
          const double predicted = grad.D.values.dot(xi.values) * vol;
          double best_rel = std::numeric_limits<double>::infinity();
          double best_eps = 0.0;
          for (const double eps : {1e-2, 1e-3, 1e-4}) {
            ScalarField zp(g), zm(g);
            zp.values = zeta.zeta.values + eps * xi.values;
            zm.values = zeta.zeta.values - eps * xi.values;
            const ControlField cp{zp, sc.set}, cm{zm, sc.set};
            const double ip =
                evaluate_cost(sc.problem.solve(cp), cp, sc.cost, nullptr, 0.0).total;
            const double im =
                evaluate_cost(sc.problem.solve(cm), cm, sc.cost, nullptr, 0.0).total;
            const double fd = (ip - im) / (2.0 * eps);
            const double rel = std::abs(fd - predicted) / std::max(std::abs(predicted), 1e-300);
            if (rel < best_rel) {
              best_rel = rel;
              best_eps = eps;
            }
          }
          worst_fd = std::max(worst_fd, best_rel);
          worst_dual = std::max(worst_dual, dual.relative_error);
          so.report["directions"].push_back({{"fd_rel_error", best_rel},
                                             {"fd_eps", best_eps},
                                             {"duality_rel_error", dual.relative_error},
                                             {"directional_derivative", predicted}});
        }
        so.report["fd_rel_error_max"] = worst_fd;
        so.report["duality_rel_error_max"] = worst_dual;
        so.pass = worst_fd <= 1e-3 && worst_dual <= 1e-6;
      } else if (stage == "optimize") {
        const ControlField zeta0{ScalarField(g, 0.0), sc.set};
        opt_report = projected_gradient_solve(sc.problem, zeta0, nullptr, cfg.optimizer);
        bool monotone = true;
        for (std::size_t k = 1; k < opt_report->costs.size(); ++k)
          if (opt_report->costs[k] > opt_report->costs[k - 1]) monotone = false;
        so.report = {{"iterates", opt_report->iterates},
                     {"costs", opt_report->costs},
                     {"initial_residual", opt_report->initial_residual},
                     {"optimality_residual", opt_report->optimality_residual},
                     {"bang_bang_fraction", opt_report->bang_bang_fraction},
                     {"stalled", opt_report->stalled},
                     {"monotone", monotone}};
        so.pass = monotone && !opt_report->stalled;
        write_csv(opt_report->final_control.zeta, artifact("final_control", "control_final.csv"));
        write_csv(opt_report->final_D, artifact("gradient_D", "gradient_D.csv"));
      } else if (stage == "continuation") {
        const ControlField zeta0{ScalarField(g, 0.0), sc.set};
        OptimizerSettings os = cfg.optimizer;
        auto rep = continuation_in_h(sc.problem, cfg.continuation_N0, cfg.continuation_levels,
                                     zeta0, os);
        so.report["levels"] = json::array();
        bool change_dec = true, cost_dec = true;
        for (std::size_t k = 0; k < rep.h_levels.size(); ++k) {
          const auto& lv = rep.h_levels[k];
          so.report["levels"].push_back(
              {{"h", lv.h}, {"cost", lv.cost}, {"zeta_change_l2", lv.zeta_change_l2}});
          if (k >= 2 && rep.h_levels[k].zeta_change_l2 > rep.h_levels[k - 1].zeta_change_l2)
            change_dec = false;
          if (k >= 2 && std::abs(rep.h_levels[k].cost - rep.h_levels[k - 1].cost) >
                            std::abs(rep.h_levels[k - 1].cost - rep.h_levels[k - 2].cost))
            cost_dec = false;
        }
        so.report["zeta_change_decreasing"] = change_dec;
        so.report["cost_delta_decreasing"] = cost_dec;
        so.pass = change_dec && cost_dec;
        write_csv(rep.final_control.zeta, artifact("continuation_control", "control_continuation.csv"));
      } else if (stage == "particle") {
        Trajectory& traj = need_forward();
        ensemble = simulate(sc.rho0_grid, *forward_zeta, sc.problem.kernel, sc.model,
                            cfg.particles, cfg.horizon, &traj);
        const auto est = estimate_density(*ensemble, g, cfg.particles.steps,
                                          cfg.particles.bandwidth);
        so.report = {{"count", ensemble->count},
                     {"steps", cfg.particles.steps},
                     {"seed", cfg.particles.seed},
                     {"reflections", ensemble->reflections},
                     {"bandwidth", est.bandwidth}};
        write_csv(est.field, artifact("particle_density", "particle_density.csv"));
      } else if (stage == "crosscheck") {
        Trajectory& traj = need_forward();
        if (!ensemble)
          ensemble = simulate(sc.rho0_grid, *forward_zeta, sc.problem.kernel, sc.model,
                              cfg.particles, cfg.horizon, &traj);
        const auto mc = mc_cost(*ensemble, sc.cost, *forward_zeta);
        const auto cb = evaluate_cost(traj, *forward_zeta, sc.cost, nullptr, 0.0);
        const double gap = std::abs(mc.estimate - cb.total);
        const double bound = 3.0 * mc.stderr_ + cfg.mc_allowance;
        so.report = {{"mc_estimate", mc.estimate},
                     {"mc_stderr", mc.stderr_},
                     {"pde_cost", cb.total},
                     {"gap", gap},
                     {"bound", bound}};
        so.pass = gap <= bound;
        const auto est = estimate_density(*ensemble, g, cfg.particles.steps,
                                          cfg.particles.bandwidth);
        ScalarField diff(g);
        diff.values = est.field.values - traj.states.back().values;
        const double l1 = norm_l1(diff);
        so.report["kde_l1_distance"] = l1;
        if (cfg.kde_l1_bound > 0.0) {
          so.report["kde_l1_bound"] = cfg.kde_l1_bound;
          so.pass = so.pass && l1 <= cfg.kde_l1_bound;
        }
      } else {
        throw ConfigError("unknown stage '" + stage + "'");
      }

      timings[stage] =
          std::chrono::duration<double>(clock::now() - t0).count();
      so.report["pass"] = so.pass;
      manifest["stages"][stage] = so.report;
      all_pass = all_pass && so.pass;
      log << "stage " << stage << (so.pass ? ": pass\n" : ": FAIL\n");
    }

    manifest["timings"] = timings;
    std::ofstream os(out_dir + "/manifest.json");
    os << manifest.dump(2) << "\n";
    return all_pass ? kExitOk : kExitNumerical;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    log << "numerical error: " << e.what() << "\n";
    manifest["timings"] = timings;
    manifest["error"] = e.what();
    std::ofstream os(out_dir + "/manifest.json");
    os << manifest.dump(2) << "\n";
    return kExitNumerical;
  }
}

json compare_runs(const std::string& manifest_a, const std::string& manifest_b) {
  auto load = [](const std::string& path) -> std::pair<json, fs::path> {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open manifest: " + path);
    json j = json::parse(is);
    return {j, fs::path(path).parent_path()};
  };
  const auto [a, dir_a] = load(manifest_a);
  const auto [b, dir_b] = load(manifest_b);

  const ScenarioConfig ca = parse_config(a.at("config"));
  const ScenarioConfig cb = parse_config(b.at("config"));
  if (ca.dimension != cb.dimension || ca.cells != cb.cells || ca.box != cb.box)
    throw ConfigError("compare: incompatible grids");
  Grid g(ca.dimension, ca.box, ca.cells);

  auto find_artifact = [&](const json& m, const fs::path& dir, const std::string& role)
      -> std::optional<ScalarField> {
    for (const auto& art : m.at("artifacts"))
      if (art.at("role") == role)
        return read_csv(g, (dir / art.at("path").get<std::string>()).string());
    return std::nullopt;
  };

  json out;
  for (const std::string role : {"final_density", "final_control"}) {
    auto fa = find_artifact(a, dir_a, role);
    auto fb = find_artifact(b, dir_b, role);
    if (fa && fb) {
      ScalarField diff(g);
      diff.values = fa->values - fb->values;
      out[role] = {{"l1", norm_l1(diff)}, {"l2", norm_l2(diff)}};
    }
  }
  auto stage_num = [](const json& m, const std::string& stage, const std::string& key)
      -> std::optional<double> {
    if (m.at("stages").contains(stage) && m.at("stages").at(stage).contains(key))
      return m.at("stages").at(stage).at(key).get<double>();
    return std::nullopt;
  };
  for (const auto& [stage, key] : std::vector<std::pair<std::string, std::string>>{
           {"crosscheck", "mc_estimate"}, {"crosscheck", "pde_cost"}, {"crosscheck", "mc_stderr"}}) {
    auto va = stage_num(a, stage, key);
    auto vb = stage_num(b, stage, key);
    if (va && vb) out["deltas"][stage + "." + key] = *va - *vb;
  }
  if (a.at("stages").contains("optimize") && b.at("stages").contains("optimize")) {
    const auto& ca_costs = a.at("stages").at("optimize").at("costs");
    const auto& cb_costs = b.at("stages").at("optimize").at("costs");
    out["deltas"]["optimize.final_cost"] =
        ca_costs.back().get<double>() - cb_costs.back().get<double>();
  }
  return out;
}

}  // namespace fpc
