#include "fpc/grid.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace fpc {

Grid::Grid(int d_, double L_, int n_) : d(d_), L(L_), n(n_) {
  if (d < 1 || d > 3) throw ConfigError("grid: dimension must be 1, 2 or 3");
  if (n < 4) throw ConfigError("grid: need at least 4 cells per axis");
  if (L <= 0.0) throw ConfigError("grid: box half-width must be positive");
  dx = 2.0 * L / n;
  cells_ = 1;
  for (int a = 0; a < d; ++a) {
    strides_[static_cast<std::size_t>(a)] = cells_;
    cells_ *= static_cast<std::size_t>(n);
  }
  vol_ = std::pow(dx, d);
}

double integrate(const ScalarField& f) {
  return f.values.sum() * f.grid->cell_volume();
}

double norm_l1(const ScalarField& f) {
  return f.values.lpNorm<1>() * f.grid->cell_volume();
}

double norm_l2(const ScalarField& f) {
  return f.values.norm() * std::sqrt(f.grid->cell_volume());
}

double norm_linf(const ScalarField& f) {
  return f.values.size() ? f.values.lpNorm<Eigen::Infinity>() : 0.0;
}

VectorField gradient(const ScalarField& f) {
  const Grid& g = *f.grid;
  VectorField out(g);
  const double inv2dx = 1.0 / (2.0 * g.dx);
  const double invdx = 1.0 / g.dx;
  for (int a = 0; a < g.d; ++a) {
    const std::size_t s = g.stride(a);
    auto& ga = out.comp[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.cells(); ++i) {
      const int ca = g.coords(i)[static_cast<std::size_t>(a)];
      const auto idx = static_cast<Eigen::Index>(i);
      if (ca == 0)
        ga[idx] = (f.values[idx + static_cast<Eigen::Index>(s)] - f.values[idx]) * invdx;
      else if (ca == g.n - 1)
        ga[idx] = (f.values[idx] - f.values[idx - static_cast<Eigen::Index>(s)]) * invdx;
      else
        ga[idx] = (f.values[idx + static_cast<Eigen::Index>(s)] -
                   f.values[idx - static_cast<Eigen::Index>(s)]) * inv2dx;
    }
  }
  return out;
}

ScalarField divergence_upwind(const VectorField& F, const ScalarField& s) {
  const Grid& g = *s.grid;
  if (F.grid != s.grid && !F.grid->same_layout(g))
    throw ConfigError("divergence_upwind: fields on different grids");
  ScalarField out(g, 0.0);
  const double invdx = 1.0 / g.dx;
  for (int a = 0; a < g.d; ++a) {
    const std::size_t str = g.stride(a);
    const auto& va = F.comp[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.cells(); ++i) {
      const int ca = g.coords(i)[static_cast<std::size_t>(a)];
      if (ca == g.n - 1) continue;  // no face owner past the last cell
      const auto lo = static_cast<Eigen::Index>(i);
      const auto hi = static_cast<Eigen::Index>(i + str);
      const double v = 0.5 * (va[lo] + va[hi]);
      double q;
      if (v > 0.0)
        q = s.values[lo];
      else if (v < 0.0)
        q = s.values[hi];
      else
        q = 0.5 * (s.values[lo] + s.values[hi]);
      const double flux = v * q;
      out.values[lo] += flux * invdx;
      out.values[hi] -= flux * invdx;
    }
  }
  return out;
}

ScalarField laplacian_noflux(const ScalarField& f) {
  const Grid& g = *f.grid;
  ScalarField out(g, 0.0);
  const double invdx2 = 1.0 / (g.dx * g.dx);
  for (int a = 0; a < g.d; ++a) {
    const std::size_t str = g.stride(a);
    for (std::size_t i = 0; i < g.cells(); ++i) {
      const int ca = g.coords(i)[static_cast<std::size_t>(a)];
      if (ca == g.n - 1) continue;
      const auto lo = static_cast<Eigen::Index>(i);
      const auto hi = static_cast<Eigen::Index>(i + str);
      const double flux = (f.values[hi] - f.values[lo]) * invdx2;
      out.values[lo] += flux;
      out.values[hi] -= flux;
    }
  }
  return out;
}

double boundary_mass(const ScalarField& f) {
  const Grid& g = *f.grid;
  double m = 0.0;
  for (std::size_t i = 0; i < g.cells(); ++i) {
    const auto c = g.coords(i);
    bool near = false;
    for (int a = 0; a < g.d; ++a) {
      const int ca = c[static_cast<std::size_t>(a)];
      if (ca == 0 || ca == g.n - 1) near = true;
    }
    if (near) m += std::abs(f.values[static_cast<Eigen::Index>(i)]);
  }
  return m * g.cell_volume();
}

void write_csv(const ScalarField& f, const std::string& path) {
  const Grid& g = *f.grid;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  os.precision(17);
  for (int a = 0; a < g.d; ++a) os << "i" << a << ",";
  for (int a = 0; a < g.d; ++a) os << "x" << a << ",";
  os << "value\n";
  for (std::size_t i = 0; i < g.cells(); ++i) {
    const auto c = g.coords(i);
    const auto x = g.center(i);
    for (int a = 0; a < g.d; ++a) os << c[static_cast<std::size_t>(a)] << ",";
    for (int a = 0; a < g.d; ++a) os << x[static_cast<std::size_t>(a)] << ",";
    os << f.values[static_cast<Eigen::Index>(i)] << "\n";
  }
}

ScalarField read_csv(const Grid& g, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open for reading: " + path);
  std::string line;
  std::getline(is, line);  // header
  ScalarField out(g, 0.0);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < g.d; ++a) {
      std::getline(ss, tok, ',');
      c[static_cast<std::size_t>(a)] = std::stoi(tok);
    }
    for (int a = 0; a < g.d; ++a) std::getline(ss, tok, ',');  // skip coordinates
    std::getline(ss, tok, ',');
    out.values[static_cast<Eigen::Index>(g.index(c))] = std::stod(tok);
    ++rows;
  }
  if (rows != g.cells()) throw ConfigError("csv row count does not match grid: " + path);
  return out;
}

}  // namespace fpc
