#pragma once

// Periodic von Neumann lattice of Gaussians collocated on a Fourier grid, the
// biorthogonal dual basis, overlaps, and full-basis coordinate changes.

#include "pvb/fourier_grid.hpp"

namespace pvb {

/// One-axis phase-space lattice. Cell (a, b) has flat index a*Np + b, a over
/// positions, b over momenta.
struct Lattice {
  Grid1D grid;
  Index nx = 0;
  Index np = 0;
  double sigma_x = 0.0;
  double sigma_p = 0.0;
  double hbar = kHbar;
  // Position centers sit this fraction of a sample spacing past a sample point.
  // 0 puts them on samples, which leaves S singular when Nx and Np are both even.
  double center_shift = 0.5;

  Index size() const { return nx * np; }
  double dx() const { return grid.length / static_cast<double>(nx); }
  double dp() const { return 2.0 * kPi * hbar * static_cast<double>(grid.size / np) / grid.length; }
  Index samples_per_cell() const { return grid.size / nx; }

  double x_center(Index a) const {
    return grid.sample(a * samples_per_cell()) + center_shift * grid.spacing();
  }
  /// Spectral index n of the momentum row b; spacing N/Np = Nx.
  Index momentum_index(Index b) const { return (b - (np - 1) / 2) * nx; }
  double p_center(Index b) const { return hbar * 2.0 * kPi * static_cast<double>(momentum_index(b)) / grid.length; }

  Index flat(Index a, Index b) const { return a * np + b; }
  std::pair<Index, Index> cell(Index i) const { return {i / np, i % np}; }
  std::pair<double, double> center(Index i) const {
    auto [a, b] = cell(i);
    return {x_center(a), p_center(b)};
  }
};

inline Lattice make_lattice(const Grid1D& grid, Index nx, Index np, double sigma_scale = 1.0,
                            double center_shift = 0.5) {
  if (nx < 1 || np < 1 || nx * np != grid.size)
    throw Error("make_lattice: Nx*Np = " + std::to_string(nx * np) + " does not match N = " + std::to_string(grid.size));
  if (!(sigma_scale > 0.0)) throw Error("make_lattice: sigma_scale must be positive");
  if (!(center_shift >= 0.0) || !(center_shift < 1.0)) throw Error("make_lattice: center_shift must lie in [0, 1)");
  Lattice lat;
  lat.grid = grid;
  lat.nx = nx;
  lat.np = np;
  lat.center_shift = center_shift;
  lat.sigma_x = sigma_scale * std::sqrt(lat.hbar * lat.dx() / (2.0 * lat.dp()));
  lat.sigma_p = lat.hbar / (2.0 * lat.sigma_x);
  return lat;
}

/// Tensor product of per-axis lattices; flat index row-major over axes.
struct LatticeND {
  std::vector<Lattice> axes;

  LatticeND() = default;
  explicit LatticeND(std::vector<Lattice> a) : axes(std::move(a)) {
    if (axes.empty()) throw Error("LatticeND: at least one axis required");
  }
  LatticeND(const Lattice& l) : axes{l} {}  // NOLINT

  GridND grid() const {
    std::vector<Grid1D> g;
    for (const auto& l : axes) g.push_back(l.grid);
    return GridND(std::move(g));
  }
  Index size() const {
    Index n = 1;
    for (const auto& l : axes) n *= l.size();
    return n;
  }
  std::vector<Index> extents() const {
    std::vector<Index> e;
    for (const auto& l : axes) e.push_back(l.size());
    return e;
  }
  std::vector<Index> unflatten(Index flat) const {
    std::vector<Index> idx(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      idx[a] = flat % axes[a].size();
      flat /= axes[a].size();
    }
    return idx;
  }
};

/// Sampled cyclic Gaussian for lattice cell i (unscaled, unit L2 norm up to wrap-around tails).
inline CVector gaussian_samples(const Lattice& lat, Index i) {
  if (i < 0 || i >= lat.size()) throw Error("gaussian_mod: index out of range");
  const auto [xc, pc] = lat.center(i);
  const double s2 = lat.sigma_x * lat.sigma_x;
  const double pref = std::pow(2.0 * kPi * s2, -0.25);
  CVector v(lat.grid.size);
  for (Index j = 0; j < v.size(); ++j) {
    const double d = lat.grid.wrap(lat.grid.sample(j) - xc);
    v(j) = pref * std::exp(-d * d / (4.0 * s2)) * std::exp(kI * (pc * d / lat.hbar));
  }
  return v;
}

inline StateVector gaussian_mod(const Lattice& lat, Index i) {
  return {Representation::Theta, gaussian_samples(lat, i), GridND(lat.grid)};
}

/// N-D lattice Gaussian: tensor product of the per-axis ones.
inline StateVector gaussian_mod(const LatticeND& lat, Index i) {
  const auto idx = lat.unflatten(i);
  CVector v = gaussian_samples(lat.axes[0], idx[0]);
  for (std::size_t a = 1; a < lat.axes.size(); ++a) {
    const CVector w = gaussian_samples(lat.axes[a], idx[a]);
    CVector next(v.size() * w.size());
    for (Index p = 0; p < v.size(); ++p) next.segment(p * w.size(), w.size()) = v(p) * w;
    v = std::move(next);
  }
  return {Representation::Theta, std::move(v), lat.grid()};
}

/// Per-axis factors of a basis pair. Columns of G are sqrt(w)-scaled sampled Gaussians.
struct AxisBasis {
  CMatrix G, B, S, S_inv;
  double condition = 1.0;
};

inline AxisBasis build_axis_basis(const Lattice& lat, double cap = kDefaultConditionCap) {
  AxisBasis ax;
  const Index n = lat.size();
  ax.G.resize(lat.grid.size, n);
  const double sw = std::sqrt(lat.grid.weight());
  for (Index i = 0; i < n; ++i) ax.G.col(i) = sw * gaussian_samples(lat, i);
  ax.S = ax.G.adjoint() * ax.G;
  ax.S = 0.5 * (ax.S + ax.S.adjoint()).eval();
  ax.condition = hermitian_condition(ax.S);
  if (!(ax.condition <= cap)) throw ConditioningError("build_basis_pair: overlap matrix S", ax.condition);
  HermitianSolver solver(ax.S, std::numeric_limits<double>::infinity(), "overlap matrix S");
  ax.S_inv = solver.inverse();
  ax.S_inv = 0.5 * (ax.S_inv + ax.S_inv.adjoint()).eval();
  ax.B = ax.G * ax.S_inv;
  return ax;
}

struct BasisPair {
  LatticeND lattice;
  std::vector<AxisBasis> axes;
  CMatrix G, B, S, S_inv;
  double condition = 1.0;

  GridND grid() const { return lattice.grid(); }
  Index size() const { return G.cols(); }
  double weight() const { return grid().weight(); }

  std::vector<CMatrix> factors(CMatrix AxisBasis::*m) const {
    std::vector<CMatrix> f;
    for (const auto& a : axes) f.push_back(a.*m);
    return f;
  }
  /// G*X, B*X, G^dag*X, B^dag*X using the Kronecker factors.
  CMatrix apply_G(const CMatrix& x) const { return kron_apply(factors(&AxisBasis::G), x); }
  CMatrix apply_B(const CMatrix& x) const { return kron_apply(factors(&AxisBasis::B), x); }
  CMatrix apply_G_adjoint(const CMatrix& x) const { return kron_apply(factors(&AxisBasis::G), x, true); }
  CMatrix apply_B_adjoint(const CMatrix& x) const { return kron_apply(factors(&AxisBasis::B), x, true); }
};

/// Assembles G, B, S, S^-1. Multi-axis matrices are Kronecker products of the
/// per-axis ones; the condition number of S is the product of per-axis values.
inline BasisPair build_basis_pair(const LatticeND& lattice, double cap = kDefaultConditionCap) {
  BasisPair bp;
  bp.lattice = lattice;
  for (const auto& l : lattice.axes) {
    bp.axes.push_back(build_axis_basis(l, std::numeric_limits<double>::infinity()));
    bp.condition *= bp.axes.back().condition;
  }
  if (!(bp.condition <= cap)) throw ConditioningError("build_basis_pair: overlap matrix S", bp.condition);
  bp.G = bp.axes[0].G;
  bp.B = bp.axes[0].B;
  bp.S = bp.axes[0].S;
  bp.S_inv = bp.axes[0].S_inv;
  for (std::size_t a = 1; a < bp.axes.size(); ++a) {
    bp.G = kron(bp.G, bp.axes[a].G);
    bp.B = kron(bp.B, bp.axes[a].B);
    bp.S = kron(bp.S, bp.axes[a].S);
    bp.S_inv = kron(bp.S_inv, bp.axes[a].S_inv);
  }
  return bp;
}

inline BasisPair build_basis_pair(const Lattice& lattice, double cap = kDefaultConditionCap) {
  return build_basis_pair(LatticeND(lattice), cap);
}

/// psi_B = (<g_k|psi>)_k.
inline StateVector to_pvb(const StateVector& psi, const BasisPair& basis) {
  require(psi, Representation::Theta, "to_pvb");
  if (!(psi.grid == basis.grid())) throw Error("to_pvb: grid mismatch");
  const double sw = std::sqrt(basis.weight());
  return {Representation::B, basis.apply_G_adjoint(sw * psi.coefficients), psi.grid};
}

/// psi = sum_j (psi_B)_j b_j.
inline StateVector from_pvb(const StateVector& psi_b, const BasisPair& basis) {
  require(psi_b, Representation::B, "from_pvb");
  const double sw = std::sqrt(basis.weight());
  return {Representation::Theta, basis.apply_B(psi_b.coefficients) / sw, basis.grid()};
}

/// psi_G = S^-1 psi_B, coefficients in the Gaussian expansion psi = sum_j (psi_G)_j g_j.
inline StateVector to_gaussian_coefficients(const StateVector& psi_b, const BasisPair& basis) {
  require(psi_b, Representation::B, "to_gaussian_coefficients");
  return {Representation::G, basis.S_inv * psi_b.coefficients, psi_b.grid};
}

/// |<g_(a,b)|psi>| laid out as an Nx x Np matrix (1D lattices only).
inline RMatrix pvb_heatmap(const StateVector& psi, const BasisPair& basis) {
  if (basis.lattice.axes.size() != 1) throw Error("pvb_heatmap: 1D lattices only");
  const Lattice& lat = basis.lattice.axes[0];
  const CVector c = to_pvb(psi, basis).coefficients;
  RMatrix h(lat.nx, lat.np);
  for (Index a = 0; a < lat.nx; ++a)
    for (Index b = 0; b < lat.np; ++b) h(a, b) = std::abs(c(lat.flat(a, b)));
  return h;
}

}  // namespace pvb
