#include "oracles.hpp"
#include "pvb/systems.hpp"

#include <gtest/gtest.h>

using namespace pvb;

namespace {

RVector grid_levels(const BenchmarkCase& c, Index count) {
  return solve_tise_hermitian(assemble_fg_hamiltonian(c.system, c.grid).dense(), count).energies();
}

}  // namespace

TEST(Morse, OracleMatchesClosedForm) {
  const auto ref = oracle::morse_levels(12.0, 0.5, 6.0);
  ASSERT_EQ(ref.size(), 24u);
  const auto c = morse_1d();
  ASSERT_EQ(c.oracle.size(), 24u);
  for (std::size_t n = 0; n < 24; ++n) EXPECT_NEAR(c.oracle[n], ref[n], 1e-12);
  EXPECT_NEAR(c.oracle[0], 0.49479166666666666, 1e-14);
}

TEST(Morse, GridSpectrum) {
  const auto c = morse_1d();
  const RVector e = grid_levels(c, 30);
  EXPECT_NEAR(e(0), c.oracle[0], 1e-6);
  for (Index n = 0; n < c.tracked_states; ++n) EXPECT_NEAR(e(n), c.oracle[static_cast<std::size_t>(n)], 1e-6) << n;
  EXPECT_EQ((e.array() < 12.0).count(), 24);
}

TEST(Morse, EdgeExceedsTrackedLevels) {
  const auto c = morse_1d();
  EXPECT_GT(boundary_potential_min(c), c.oracle[static_cast<std::size_t>(c.tracked_states - 1)]);
}

TEST(Harmonic, GridSpectrumAndEdge) {
  const auto c = harmonic_1d();
  const RVector e = grid_levels(c, 6);
  EXPECT_NEAR(e(5), 5.5, 1e-8);
  EXPECT_NEAR(boundary_potential_min(c), 0.5 * 9.6875 * 9.6875, 1e-12);
  EXPECT_GT(boundary_potential_min(c), 2.0 * c.oracle[static_cast<std::size_t>(c.tracked_states - 1)]);
  EXPECT_NEAR(c.initial_state(c.grid).coefficients.squaredNorm() * c.grid.weight(), 1.0, 1e-12);
}

TEST(CoupledHarmonic, GridSpectrumAndEdge) {
  const auto c = coupled_ho_2d();
  const auto ref = oracle::quadratic_2d_levels(1.0, 1.0, -0.3, 22);
  ASSERT_EQ(c.oracle.size(), 22u);
  for (std::size_t n = 0; n < 22; ++n) EXPECT_NEAR(c.oracle[n], ref[n], 1e-12);
  EXPECT_NEAR(ref[0], 0.5 * (std::sqrt(0.7) + std::sqrt(1.3)), 1e-12);
  EXPECT_NEAR(ref[1], ref[0] + std::sqrt(0.7), 1e-12);
  const RVector e = grid_levels(c, 2);
  EXPECT_NEAR(e(0), ref[0], 1e-8);
  EXPECT_NEAR(e(1), ref[1], 1e-8);
  EXPECT_GT(boundary_potential_min(c), 2.0 * ref[21]);
}

TEST(DoubleWell, PotentialAndInitialState) {
  const auto c = double_well_2d();
  const std::vector<double> a{1.0, 2.0}, b{2.0, 2.0};
  EXPECT_NEAR(c.system.potential(a) - c.system.potential(b), -60.0, 1e-12);
  const StateVector psi = c.initial_state(c.grid);
  EXPECT_NEAR(psi.coefficients.squaredNorm() * c.grid.weight(), 1.0, 1e-6);
  // <T> from the packet widths plus <V> by midpoint quadrature over +-8 widths.
  const double kinetic = (25.0 + 50.0) / (2.0 * 200.0);
  double potential = 0.0;
  const int m = 400;
  const double hx = 1.6 / m, hy = 8.0 * std::sqrt(0.005) * 2.0 / m;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const std::vector<double> p{2.1 - 0.8 + (i + 0.5) * hx, 2.05 - 8.0 * std::sqrt(0.005) + (j + 0.5) * hy};
      const double dx = p[0] - 2.1, dy = p[1] - 2.05;
      potential += c.system.potential(p) * std::exp(-2.0 * dx * dx / 0.04 - 2.0 * dy * dy / 0.02);
    }
  potential *= hx * hy * (2.0 / oracle::pi) / std::sqrt(0.04 * 0.02);
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const double mean_energy = (psi.coefficients.dot(CVector(h.apply(psi.coefficients))) * c.grid.weight()).real();
  EXPECT_NEAR(mean_energy, kinetic + potential, 1e-6 * mean_energy);
  EXPECT_EQ(c.grid.total_points(), 2304);
}

TEST(Cases, LookupByName) {
  for (const auto& name : case_names()) EXPECT_EQ(case_by_name(name).name, name);
  EXPECT_THROW(case_by_name("nope"), Error);
}

TEST(Cases, RecommendedLatticesAreWellConditioned) {
  for (const auto& name : case_names()) {
    const auto c = case_by_name(name);
    const BasisPair bp = build_basis_pair(c.make_lattice_nd());
    EXPECT_EQ(bp.size(), c.grid.total_points()) << name;
    EXPECT_LT(bp.condition, 1e4) << name;
  }
}
