#pragma once

// Reduced subspaces: the span of selected dual vectors (B~, G~), the span of the
// matching Gaussians (G^, B^), the complement, and projector representations.
// Matrices carry the sqrt(w) column scaling of BasisPair.

#include "pvb/vn_basis.hpp"

#include <json.hpp>

#include <iostream>
#include <numeric>
#include <optional>

namespace pvb {

struct Selection {
  Index n_total = 0;
  std::vector<Index> kept;        // descending amplitude, ascending index on ties
  std::vector<Index> complement;  // ascending

  Index size() const { return static_cast<Index>(kept.size()); }

  /// N x N~ selector with R(kept[c], c) = 1.
  CMatrix R() const {
    CMatrix r = CMatrix::Zero(n_total, size());
    for (Index c = 0; c < size(); ++c) r(kept[c], c) = 1.0;
    return r;
  }
  CMatrix R_complement() const {
    CMatrix r = CMatrix::Zero(n_total, static_cast<Index>(complement.size()));
    for (std::size_t c = 0; c < complement.size(); ++c) r(complement[c], static_cast<Index>(c)) = 1.0;
    return r;
  }
  std::vector<Index> sorted() const {
    auto s = kept;
    std::sort(s.begin(), s.end());
    return s;
  }
  bool same_set(const Selection& o) const { return n_total == o.n_total && sorted() == o.sorted(); }
};

/// Builds a selection from an explicit index list, keeping the given order.
inline Selection make_selection(Index n_total, std::vector<Index> kept) {
  Selection s;
  s.n_total = n_total;
  std::vector<char> used(static_cast<std::size_t>(n_total), 0);
  for (Index k : kept) {
    if (k < 0 || k >= n_total) throw Error("make_selection: index out of range");
    if (used[static_cast<std::size_t>(k)]) throw Error("make_selection: duplicate index " + std::to_string(k));
    used[static_cast<std::size_t>(k)] = 1;
  }
  if (kept.empty()) throw Error("make_selection: empty selection");
  s.kept = std::move(kept);
  for (Index k = 0; k < n_total; ++k)
    if (!used[static_cast<std::size_t>(k)]) s.complement.push_back(k);
  return s;
}

inline nlohmann::json to_json(const Selection& s) { return nlohmann::json(s.sorted()); }

inline Selection selection_from_json(const nlohmann::json& j, Index n_total) {
  return make_selection(n_total, j.get<std::vector<Index>>());
}

/// Indices ordered by descending score; ties broken by ascending index.
inline std::vector<Index> rank_by_score(const RVector& score) {
  std::vector<Index> order(static_cast<std::size_t>(score.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) > score(b); });
  return order;
}

inline Selection select_top_count(const RVector& score, Index count) {
  count = std::clamp<Index>(count, 1, score.size());
  auto order = rank_by_score(score);
  order.resize(static_cast<std::size_t>(count));
  return make_selection(score.size(), std::move(order));
}

inline Index fraction_count(double fraction, Index n) {
  if (!(fraction > 0.0) || !(fraction <= 1.0)) throw Error("select_top_fraction: fraction must lie in (0, 1]");
  // Guard against 0.3*N landing a hair above an integer.
  return std::clamp<Index>(static_cast<Index>(std::ceil(fraction * static_cast<double>(n) - 1e-9)), 1, n);
}

inline Selection select_by_threshold(const CVector& psi_b, double cutoff) {
  if (!(cutoff >= 0.0)) throw Error("select_by_threshold: cutoff must be non-negative");
  const RVector amp = psi_b.cwiseAbs();
  if (cutoff > 0.0 && amp.maxCoeff() == 0.0)
    std::cerr << "pvb: warning: select_by_threshold on an all-zero state, keeping index 0\n";
  Index count = 0;
  for (Index i = 0; i < amp.size(); ++i)
    if (amp(i) >= cutoff) ++count;
  return select_top_count(amp, std::max<Index>(count, 1));
}

inline Selection select_by_threshold(const StateVector& psi_b, double cutoff) {
  require(psi_b, Representation::B, "select_by_threshold");
  return select_by_threshold(psi_b.coefficients, cutoff);
}

inline Selection select_top_fraction(const CVector& psi_b, double fraction) {
  return select_top_count(psi_b.cwiseAbs(), fraction_count(fraction, psi_b.size()));
}

inline Selection select_top_fraction(const StateVector& psi_b, double fraction) {
  require(psi_b, Representation::B, "select_top_fraction");
  return select_top_fraction(psi_b.coefficients, fraction);
}

template <class M>
CMatrix take_columns(const M& m, const std::vector<Index>& cols) {
  CMatrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = m.col(cols[c]);
  return out;
}

template <class M>
CMatrix take_block(const M& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  CMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < rows.size(); ++r)
      out(static_cast<Index>(r), static_cast<Index>(c)) = m(rows[r], cols[c]);
  return out;
}

template <class V>
CVector take_rows(const V& v, const std::vector<Index>& rows) {
  CVector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = v(rows[r]);
  return out;
}

struct ComplementBases {
  CMatrix G_bar, B_bar;
};

struct ReducedBases {
  Selection selection;
  CMatrix B_tilde, G_tilde, S_tilde, S_tilde_inv;
  CMatrix G_check, B_check, S_check;
  double cond_s_tilde_inv = 1.0;
  double cond_s_check = 1.0;
  std::optional<ComplementBases> complement;

  Index size() const { return selection.size(); }
};

struct ReductionOptions {
  double condition_cap = kDefaultConditionCap;
  bool with_check = true;
  bool with_complement = false;
};

inline ComplementBases build_complement(const BasisPair& basis, const Selection& sel,
                                        double cap = kDefaultConditionCap) {
  ComplementBases c;
  if (sel.complement.empty()) {
    c.G_bar.resize(basis.size(), 0);
    c.B_bar.resize(basis.size(), 0);
    return c;
  }
  c.G_bar = take_columns(basis.G, sel.complement);
  const CMatrix gram = take_block(basis.S, sel.complement, sel.complement);
  HermitianSolver solver(gram, cap, "complement Gram matrix");
  c.B_bar = solver.solve(c.G_bar.adjoint()).adjoint();
  return c;
}

inline ReducedBases build_reduced(const BasisPair& basis, const Selection& sel, const ReductionOptions& opt = {}) {
  if (sel.n_total != basis.size()) throw Error("build_reduced: selection does not match basis size");
  ReducedBases red;
  red.selection = sel;
  const auto& k = sel.kept;
  red.B_tilde = take_columns(basis.B, k);
  red.S_tilde_inv = take_block(basis.S_inv, k, k);
  HermitianSolver s_tilde_inv(red.S_tilde_inv, opt.condition_cap, "build_reduced: S~^-1");
  red.cond_s_tilde_inv = s_tilde_inv.condition();
  red.S_tilde = s_tilde_inv.inverse();
  red.S_tilde = 0.5 * (red.S_tilde + red.S_tilde.adjoint()).eval();
  red.G_tilde = red.B_tilde * red.S_tilde;
  if (opt.with_check) {
    red.G_check = take_columns(basis.G, k);
    red.S_check = take_block(basis.S, k, k);
    HermitianSolver s_check(red.S_check, opt.condition_cap, "build_reduced: S^");
    red.cond_s_check = s_check.condition();
    red.B_check = s_check.solve(red.G_check.adjoint()).adjoint();
  }
  if (opt.with_complement) red.complement = build_complement(basis, sel, opt.condition_cap);
  return red;
}

/// P~ = B~ G~^dag on the (scaled) sampling representation.
inline CMatrix projector_theta(const ReducedBases& red) { return red.B_tilde * red.G_tilde.adjoint(); }

/// P^ = G^ B^^dag, projector onto the span of the kept Gaussians.
inline CMatrix projector_check(const ReducedBases& red) { return red.G_check * red.B_check.adjoint(); }

/// P-bar = B-bar G-bar^dag; requires the complement pair.
inline CMatrix projector_complement(const ReducedBases& red) {
  if (!red.complement) throw Error("projector_complement: reduced bases were built without the complement");
  return red.complement->B_bar * red.complement->G_bar.adjoint();
}

/// Y^+ P X, with Y^+ = (Y^dag Y)^-1 Y^dag the left pseudo-inverse.
inline CMatrix projector_rep(const CMatrix& P, const CMatrix& X, const CMatrix& Y,
                             double cap = kDefaultConditionCap) {
  if (P.rows() != P.cols() || X.rows() != P.cols() || Y.rows() != P.rows())
    throw Error("projector_rep: dimension mismatch");
  if (Y.cols() > Y.rows()) throw Error("projector_rep: output basis has more columns than rows");
  HermitianSolver gram(Y.adjoint() * Y, cap, "projector_rep: output basis Gram matrix (rank deficient?)");
  return gram.solve(Y.adjoint() * (P * X));
}

/// g_k - sum_{j in complement} <g_j|g_k> b-bar_j, scaled like a column of G.
inline CVector deformed_gaussian_column(const BasisPair& basis, const ReducedBases& red, Index k) {
  if (std::find(red.selection.kept.begin(), red.selection.kept.end(), k) == red.selection.kept.end())
    throw Error("deformed_gaussian_oracle: index " + std::to_string(k) + " is not kept");
  const ComplementBases comp = red.complement ? *red.complement : build_complement(basis, red.selection);
  const CVector g = basis.G.col(k);
  if (comp.G_bar.cols() == 0) return g;
  return g - comp.B_bar * (comp.G_bar.adjoint() * g);
}

inline StateVector deformed_gaussian_oracle(const BasisPair& basis, const ReducedBases& red, Index k) {
  return {Representation::Theta, deformed_gaussian_column(basis, red, k) / std::sqrt(basis.weight()), basis.grid()};
}

/// Closest state in the reduced subspace, psi_B~ = G~^dag B psi_B.
inline StateVector project_state(const StateVector& psi_b, const BasisPair& basis, const ReducedBases& red) {
  require(psi_b, Representation::B, "project_state");
  const CVector theta = basis.apply_B(psi_b.coefficients);
  return {Representation::BTilde, red.G_tilde.adjoint() * theta, psi_b.grid};
}

/// Reduced coordinates back to samples: psi = B~ psi_B~.
inline StateVector lift(const StateVector& psi, const BasisPair& basis, const ReducedBases& red) {
  if (psi.representation == Representation::BTilde)
    return {Representation::Theta, red.B_tilde * psi.coefficients / std::sqrt(basis.weight()), basis.grid()};
  if (psi.representation == Representation::BCheck)
    return {Representation::Theta, red.B_check * psi.coefficients / std::sqrt(basis.weight()), basis.grid()};
  if (psi.representation == Representation::B) return from_pvb(psi, basis);
  if (psi.representation == Representation::Theta) return psi;
  throw Error("lift: unsupported representation " + std::string(to_string(psi.representation)));
}

}  // namespace pvb
