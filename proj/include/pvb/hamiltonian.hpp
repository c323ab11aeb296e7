#pragma once

// Grid Hamiltonian H = T + V and its full-basis and reduced-basis matrix forms.

#include "pvb/reduction.hpp"

#include <concepts>
#include <optional>

namespace pvb {

using Potential = std::function<double(std::span<const double>)>;

struct SystemSpec {
  std::size_t dimension = 1;
  std::vector<double> mass;  // per axis
  Potential potential;
  double hbar = kHbar;
  // Analytic bound-state energies, ascending, when known.
  std::function<std::vector<double>(std::size_t)> spectrum_oracle;
};

/// Anything that maps a block of Theta-sample columns to H times that block.
template <class Op>
concept ThetaOperator = requires(const Op& op, const CMatrix& x) {
  { op.apply(x) } -> std::convertible_to<CMatrix>;
  { op.size() } -> std::convertible_to<Index>;
};

/// Kinetic matrix on one axis: F^-1 diag(hbar^2 k^2 / 2m) F.
inline CMatrix kinetic_matrix(const Grid1D& g, double mass, double hbar = kHbar) {
  const CMatrix f = spectral_matrix(g);
  const CMatrix fi = synthesis_matrix(g);
  RVector t(g.size);
  for (Index s = 0; s < g.size; ++s) t(s) = hbar * hbar * g.wavenumber(s) * g.wavenumber(s) / (2.0 * mass);
  CMatrix k = fi * t.asDiagonal() * f;
  return 0.5 * (k + k.adjoint());
}

/// Structured Fourier-grid Hamiltonian: per-axis kinetic factors plus a diagonal potential.
class FgHamiltonian {
 public:
  FgHamiltonian() = default;
  FgHamiltonian(GridND grid, std::vector<CMatrix> kinetic, RVector potential)
      : grid_(std::move(grid)), kinetic_(std::move(kinetic)), potential_(std::move(potential)) {
    real_ = true;
    for (const auto& t : kinetic_) real_ = real_ && max_abs(t.imag()) < 1e-13 * std::max(1.0, max_abs(t.real()));
  }

  Index size() const { return potential_.size(); }
  const GridND& grid() const { return grid_; }
  const RVector& potential() const { return potential_; }
  const std::vector<CMatrix>& kinetic() const { return kinetic_; }
  bool is_real() const { return real_; }

  CMatrix apply(const CMatrix& x) const {
    if (x.rows() != size()) throw Error("FgHamiltonian::apply: dimension mismatch");
    CMatrix y = potential_.asDiagonal() * x;
    const std::size_t d = kinetic_.size();
    for (std::size_t a = 0; a < d; ++a) {
      std::vector<CMatrix> f;
      for (std::size_t b = 0; b < d; ++b)
        f.push_back(b == a ? kinetic_[b] : CMatrix::Identity(kinetic_[b].rows(), kinetic_[b].cols()));
      y += d == 1 ? CMatrix(kinetic_[0] * x) : kron_apply(f, x);
    }
    return y;
  }

  CMatrix dense() const { return apply(CMatrix::Identity(size(), size())); }

 private:
  GridND grid_;
  std::vector<CMatrix> kinetic_;
  RVector potential_;
  bool real_ = false;
};

static_assert(ThetaOperator<FgHamiltonian>);

struct OperatorRep {
  CMatrix matrix;
  Representation input = Representation::Theta;
  Representation output = Representation::Theta;
  std::string provenance;

  Index size() const { return matrix.rows(); }
};

inline FgHamiltonian assemble_fg_hamiltonian(const SystemSpec& sys, const GridND& grid) {
  if (grid.dimension() != sys.dimension) throw Error("assemble_fg_hamiltonian: grid dimension does not match system");
  if (sys.mass.size() != sys.dimension) throw Error("assemble_fg_hamiltonian: one mass per axis required");
  std::vector<CMatrix> kin;
  for (std::size_t a = 0; a < sys.dimension; ++a) {
    if (!(sys.mass[a] > 0.0)) throw Error("assemble_fg_hamiltonian: masses must be positive");
    kin.push_back(kinetic_matrix(grid.axes[a], sys.mass[a], sys.hbar));
  }
  RVector v(grid.total_points());
  for (Index j = 0; j < v.size(); ++j) {
    const auto x = grid.point(j);
    v(j) = sys.potential(x);
    if (!std::isfinite(v(j))) throw Error("assemble_fg_hamiltonian: non-finite potential at grid point " + std::to_string(j));
  }
  return FgHamiltonian(grid, std::move(kin), std::move(v));
}

inline OperatorRep theta_rep(const FgHamiltonian& h) {
  return {h.dense(), Representation::Theta, Representation::Theta, "T+V on samples"};
}

struct FullForms {
  OperatorRep BB, GB, BG, GG;
};

/// H_BB = G^dag H B, H_GB = B^dag H B, H_BG = G^dag H G, H_GG = B^dag H G.
template <ThetaOperator Op>
FullForms full_basis_forms(const Op& h, const BasisPair& basis) {
  const CMatrix hb = h.apply(basis.B);
  const CMatrix hg = h.apply(basis.G);
  FullForms f;
  f.BB = {basis.apply_G_adjoint(hb), Representation::B, Representation::B, "G^dag H B"};
  f.GB = {basis.apply_B_adjoint(hb), Representation::B, Representation::G, "B^dag H B"};
  f.BG = {basis.apply_G_adjoint(hg), Representation::G, Representation::B, "G^dag H G"};
  f.GG = {basis.apply_B_adjoint(hg), Representation::G, Representation::G, "B^dag H G"};
  return f;
}

enum class HForm { H1, H2, H3, H4 };

inline std::string_view to_string(HForm f) {
  switch (f) {
    case HForm::H1: return "H1";
    case HForm::H2: return "H2";
    case HForm::H3: return "H3";
    case HForm::H4: return "H4";
  }
  return "?";
}

inline HForm parse_form(std::string_view s) {
  if (s == "H1") return HForm::H1;
  if (s == "H2") return HForm::H2;
  if (s == "H3") return HForm::H3;
  if (s == "H4") return HForm::H4;
  throw Error("unknown Hamiltonian form '" + std::string(s) + "'");
}

/// Basis in which a form's input coefficients live.
inline Representation input_basis(HForm f) {
  return (f == HForm::H1 || f == HForm::H2) ? Representation::BTilde : Representation::BCheck;
}

/// H1 = G~^dag H B~.
template <ThetaOperator Op>
OperatorRep reduced_H1(const Op& h, const ReducedBases& red) {
  return {red.G_tilde.adjoint() * h.apply(red.B_tilde), Representation::BTilde, Representation::BTilde, "G~^dag H B~"};
}

/// H1 = S~ (B~^dag H B~).
template <ThetaOperator Op>
OperatorRep reduced_H1_gram(const Op& h, const ReducedBases& red) {
  return {red.S_tilde * (red.B_tilde.adjoint() * h.apply(red.B_tilde)), Representation::BTilde,
          Representation::BTilde, "S~ B~^dag H B~"};
}

/// H1 = S~ (R^dag S^-1 G^dag H G S^-1 R), from the Gaussian-basis matrix.
template <ThetaOperator Op>
OperatorRep reduced_H1_on_the_fly(const Op& h, const BasisPair& basis, const ReducedBases& red) {
  const CMatrix sr = take_columns(basis.S_inv, red.selection.kept);
  const CMatrix ghg = basis.apply_G_adjoint(h.apply(basis.G));
  return {red.S_tilde * (sr.adjoint() * ghg * sr), Representation::BTilde, Representation::BTilde,
          "S~ R^dag S^-1 G^dag H G S^-1 R"};
}

/// H2 = G^^dag H B~.
template <ThetaOperator Op>
OperatorRep reduced_H2(const Op& h, const ReducedBases& red) {
  return {red.G_check.adjoint() * h.apply(red.B_tilde), Representation::BTilde, Representation::BTilde, "G^^dag H B~"};
}

/// H2 = R^dag G^dag H G S^-1 R.
template <ThetaOperator Op>
OperatorRep reduced_H2_selector(const Op& h, const BasisPair& basis, const ReducedBases& red) {
  const CMatrix sr = take_columns(basis.S_inv, red.selection.kept);
  const CMatrix ghg_rows = take_columns(basis.apply_G_adjoint(h.apply(basis.G)), red.selection.kept).adjoint();
  // ghg_rows = R^dag (G^dag H G)^dag = R^dag G^dag H G for Hermitian H.
  return {ghg_rows * sr, Representation::BTilde, Representation::BTilde, "R^dag G^dag H G S^-1 R"};
}

/// H3 = G~^dag H B^.
template <ThetaOperator Op>
OperatorRep reduced_H3(const Op& h, const ReducedBases& red) {
  return {red.G_tilde.adjoint() * h.apply(red.B_check), Representation::BCheck, Representation::BTilde, "G~^dag H B^"};
}

/// H4 = G^^dag H B^.
template <ThetaOperator Op>
OperatorRep reduced_H4(const Op& h, const ReducedBases& red) {
  return {red.G_check.adjoint() * h.apply(red.B_check), Representation::BCheck, Representation::BCheck, "G^^dag H B^"};
}

/// H4 = (G^^dag H G^) S^^-1.
template <ThetaOperator Op>
OperatorRep reduced_H4_gram(const Op& h, const ReducedBases& red) {
  HermitianSolver s(red.S_check, std::numeric_limits<double>::infinity(), "S^");
  const CMatrix ghg = red.G_check.adjoint() * h.apply(red.G_check);
  return {s.solve(ghg.adjoint()).adjoint(), Representation::BCheck, Representation::BCheck, "G^^dag H G^ S^^-1"};
}

template <ThetaOperator Op>
OperatorRep reduced_form(HForm f, const Op& h, const ReducedBases& red) {
  switch (f) {
    case HForm::H1: return reduced_H1(h, red);
    case HForm::H2: return reduced_H2(h, red);
    case HForm::H3: return reduced_H3(h, red);
    case HForm::H4: return reduced_H4(h, red);
  }
  throw Error("reduced_form: bad form");
}

/// Precomputes B^dag H B, G^dag H B and G^dag H G once so every reduced form is
/// a submatrix gather plus one Hermitian solve of size N~.
class ReducedHamiltonianFactory {
 public:
  template <ThetaOperator Op>
  ReducedHamiltonianFactory(const Op& h, const BasisPair& basis) : basis_(&basis) {
    const CMatrix hb = h.apply(basis.B);
    bhb_ = basis.apply_B_adjoint(hb);
    ghb_ = basis.apply_G_adjoint(hb);
    ghg_ = basis.apply_G_adjoint(h.apply(basis.G));
  }

  const BasisPair& basis() const { return *basis_; }
  /// Full H_BB = G^dag H B.
  const CMatrix& H_BB() const { return ghb_; }

  OperatorRep make(HForm f, const Selection& sel, double cap = kDefaultConditionCap) const {
    const auto& k = sel.kept;
    switch (f) {
      case HForm::H1: {
        HermitianSolver s(take_block(basis_->S_inv, k, k), cap, "S~^-1");
        return {s.solve(take_block(bhb_, k, k)), Representation::BTilde, Representation::BTilde, "S~ (B^dag H B)_kk"};
      }
      case HForm::H2:
        return {take_block(ghb_, k, k), Representation::BTilde, Representation::BTilde, "(G^dag H B)_kk"};
      case HForm::H3: {
        HermitianSolver st(take_block(basis_->S_inv, k, k), cap, "S~^-1");
        HermitianSolver sc(take_block(basis_->S, k, k), cap, "S^");
        const CMatrix bhg = take_block(ghb_, k, k).adjoint();  // (B^dag H G)_kk
        return {st.solve(sc.solve(bhg.adjoint()).adjoint()), Representation::BCheck, Representation::BTilde,
                "S~ (B^dag H G)_kk S^^-1"};
      }
      case HForm::H4: {
        HermitianSolver sc(take_block(basis_->S, k, k), cap, "S^");
        return {sc.solve(take_block(ghg_, k, k).adjoint()).adjoint(), Representation::BCheck,
                Representation::BCheck, "(G^dag H G)_kk S^^-1"};
      }
    }
    throw Error("ReducedHamiltonianFactory: bad form");
  }

  /// <g_j|H|psi> for every lattice cell, psi given by reduced B~ coefficients on `sel`.
  CVector gaussian_matrix_elements(const Selection& sel, const CVector& psi_tilde) const {
    CVector out = CVector::Zero(ghb_.rows());
    for (Index c = 0; c < sel.size(); ++c) out += ghb_.col(sel.kept[static_cast<std::size_t>(c)]) * psi_tilde(c);
    return out;
  }

 private:
  const BasisPair* basis_;
  CMatrix bhb_, ghb_, ghg_;
};

}  // namespace pvb
