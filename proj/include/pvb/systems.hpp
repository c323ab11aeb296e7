#pragma once

// Benchmark systems with recommended grids, lattices and analytic oracles.

#include "pvb/dynamics.hpp"

#include <map>

namespace pvb {

struct AxisLattice {
  Index nx = 0, np = 0;
};

struct BenchmarkCase {
  std::string name;
  SystemSpec system;
  GridND grid;
  std::vector<AxisLattice> lattice;
  Index tracked_states = 0;       // eigenstates followed in scans
  std::vector<double> times;      // snapshot times for dynamics cases
  std::function<StateVector(const GridND&)> initial_state;
  std::vector<double> oracle;     // analytic energies, ascending, may be empty

  LatticeND make_lattice_nd(double sigma_scale = 1.0, double center_shift = 0.5) const {
    if (lattice.size() != grid.dimension()) throw Error("BenchmarkCase: one lattice shape per axis required");
    std::vector<Lattice> ax;
    for (std::size_t a = 0; a < lattice.size(); ++a)
      ax.push_back(make_lattice(grid.axes[a], lattice[a].nx, lattice[a].np, sigma_scale, center_shift));
    return LatticeND(std::move(ax));
  }
};

/// Grid covering [lo, hi) with n points.
inline Grid1D interval_grid(double lo, double hi, Index n) { return make_grid(hi - lo, n, 0.0, lo); }

/// Normalized Gaussian packet exp(-(x-x0)^2/(4 s^2) + i p0 (x-x0)) on a 1D grid.
inline StateVector coherent_state(const Grid1D& g, double x0, double p0, double sigma, double hbar = kHbar) {
  const double pref = std::pow(2.0 * kPi * sigma * sigma, -0.25);
  return collocate(
      [=](double x) {
        const double d = x - x0;
        return pref * std::exp(-d * d / (4.0 * sigma * sigma)) * std::exp(kI * (p0 * d / hbar));
      },
      g);
}

inline BenchmarkCase morse_1d() {
  BenchmarkCase c;
  c.name = "morse_1d";
  c.system.dimension = 1;
  c.system.mass = {6.0};
  c.system.potential = [](std::span<const double> x) {
    const double e = 1.0 - std::exp(-(x[0] - 2.0) / 2.0);
    return 12.0 * e * e;
  };
  c.system.spectrum_oracle = [](std::size_t n) {
    std::vector<double> e;
    for (std::size_t k = 0; k < std::min<std::size_t>(n, 24); ++k) {
      const double v = static_cast<double>(k) + 0.5;
      e.push_back(v - v * v / 48.0);
    }
    return e;
  };
  c.grid = GridND(interval_grid(0.0, 20.0, 128));
  c.lattice = {{8, 16}};
  c.tracked_states = 21;
  c.oracle = c.system.spectrum_oracle(24);
  return c;
}

inline BenchmarkCase harmonic_1d() {
  BenchmarkCase c;
  c.name = "harmonic_1d";
  c.system.dimension = 1;
  c.system.mass = {1.0};
  c.system.potential = [](std::span<const double> x) { return 0.5 * x[0] * x[0]; };
  c.system.spectrum_oracle = [](std::size_t n) {
    std::vector<double> e;
    for (std::size_t k = 0; k < n; ++k) e.push_back(static_cast<double>(k) + 0.5);
    return e;
  };
  c.grid = GridND(interval_grid(-10.0, 10.0, 64));
  c.lattice = {{8, 8}};
  c.tracked_states = 1;
  c.times = {0.0, 2.0 * kPi};
  c.initial_state = [](const GridND& g) { return coherent_state(g.axes[0], 2.0, 0.0, std::sqrt(0.5)); };
  c.oracle = c.system.spectrum_oracle(20);
  return c;
}

inline BenchmarkCase coupled_ho_2d() {
  BenchmarkCase c;
  c.name = "coupled_ho_2d";
  c.system.dimension = 2;
  c.system.mass = {1.0, 1.0};
  c.system.potential = [](std::span<const double> x) {
    return 0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.3 * x[0] * x[1];
  };
  c.system.spectrum_oracle = [](std::size_t n) {
    // Normal modes of the quadratic form: frequencies sqrt(1 -+ 0.3).
    const double w1 = std::sqrt(0.7), w2 = std::sqrt(1.3);
    std::vector<double> e;
    for (int a = 0; a < 60; ++a)
      for (int b = 0; b < 60; ++b) e.push_back(w1 * (a + 0.5) + w2 * (b + 0.5));
    std::sort(e.begin(), e.end());
    e.resize(std::min(n, e.size()));
    return e;
  };
  c.grid = GridND({interval_grid(-8.0, 8.0, 32), interval_grid(-8.0, 8.0, 32)});
  c.lattice = {{4, 8}, {4, 8}};
  c.tracked_states = 22;
  c.oracle = c.system.spectrum_oracle(22);
  return c;
}

inline BenchmarkCase double_well_2d() {
  BenchmarkCase c;
  c.name = "double_well_2d";
  c.system.dimension = 2;
  c.system.mass = {200.0, 200.0};
  c.system.potential = [](std::span<const double> p) {
    const double x = p[0], y = p[1];
    return 6.4 * (x - 1.0) * (x - 1.0) * (x - 2.0) * (x - 2.0) + 37.5 * (y - 2.0) * (y - 2.0) + 10.0 * x * x * y;
  };
  c.grid = GridND({interval_grid(0.2, 3.0, 48), interval_grid(1.0, 3.2, 48)});
  c.lattice = {{12, 4}, {12, 4}};
  c.times = {0.0, 16.6, 24.6};
  c.initial_state = [](const GridND& g) {
    const double pref = std::sqrt(2.0 / kPi) / std::pow(0.04 * 0.02, 0.25);
    return collocate(
        [pref](std::span<const double> p) -> Complex {
          const double dx = p[0] - 2.1, dy = p[1] - 2.05;
          return pref * std::exp(-dx * dx / 0.04 - dy * dy / 0.02);
        },
        g);
  };
  return c;
}

inline std::vector<std::string> case_names() { return {"morse_1d", "harmonic_1d", "coupled_ho_2d", "double_well_2d"}; }

inline BenchmarkCase case_by_name(std::string_view name) {
  if (name == "morse_1d") return morse_1d();
  if (name == "harmonic_1d") return harmonic_1d();
  if (name == "coupled_ho_2d") return coupled_ho_2d();
  if (name == "double_well_2d") return double_well_2d();
  throw Error("unknown benchmark case '" + std::string(name) + "'");
}

/// Smallest potential value over the outermost samples of every axis.
inline double boundary_potential_min(const BenchmarkCase& c) {
  double vmin = std::numeric_limits<double>::infinity();
  const GridND& g = c.grid;
  for (Index j = 0; j < g.total_points(); ++j) {
    const auto idx = g.unflatten(j);
    bool edge = false;
    for (std::size_t a = 0; a < idx.size(); ++a) edge = edge || idx[a] == 0 || idx[a] == g.axes[a].size - 1;
    if (!edge) continue;
    const auto x = g.point(j);
    vmin = std::min(vmin, c.system.potential(x));
  }
  return vmin;
}

}  // namespace pvb
