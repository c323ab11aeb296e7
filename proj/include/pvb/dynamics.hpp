#pragma once

// Time-independent and time-dependent solvers in full and reduced bases.

#include "pvb/hamiltonian.hpp"

#include <functional>

namespace pvb {

struct EigenResult {
  Eigen::VectorXcd eigenvalues;  // ascending real part
  CMatrix vectors;               // columns, in `basis` coordinates
  RVector residuals;             // ||H v - lambda v|| (or the generalized analogue)
  Representation basis = Representation::Theta;
  double max_imag = 0.0;

  RVector energies() const { return eigenvalues.real(); }
  Index count() const { return eigenvalues.size(); }
};

/// Rotates each column so its largest-magnitude entry is real and positive.
inline void fix_phases(CMatrix& v) {
  for (Index c = 0; c < v.cols(); ++c) {
    Index imax = 0;
    v.col(c).cwiseAbs().maxCoeff(&imax);
    const Complex z = v(imax, c);
    if (std::abs(z) > 0.0) v.col(c) *= std::conj(z) / std::abs(z);
  }
}

/// Normalizes columns to v^dag M v = 1 (M = identity when empty).
inline void normalize_columns(CMatrix& v, const CMatrix& metric) {
  for (Index c = 0; c < v.cols(); ++c) {
    const double n2 = metric.size() ? (v.col(c).adjoint() * metric * v.col(c))(0).real() : v.col(c).squaredNorm();
    if (n2 > 0.0) v.col(c) /= std::sqrt(n2);
  }
}

/// `count` eigenpairs of lowest real part of a general (possibly non-Hermitian)
/// matrix. `metric`, if given, is the Gram matrix used to normalize eigenvectors.
inline EigenResult solve_tise(const OperatorRep& h, Index count, const CMatrix& metric = {}) {
  const Index n = h.matrix.rows();
  if (h.matrix.cols() != n) throw Error("solve_tise: operator must be square");
  if (count < 1 || count > n) throw Error("solve_tise: count out of range");
  Eigen::ComplexEigenSolver<CMatrix> es(h.matrix, true);
  if (es.info() != Eigen::Success) throw Error("solve_tise: eigen-solver did not converge");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const auto& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ev(a).real() < ev(b).real(); });
  EigenResult r;
  r.basis = h.input;
  r.eigenvalues.resize(count);
  r.vectors.resize(n, count);
  for (Index c = 0; c < count; ++c) {
    r.eigenvalues(c) = ev(order[static_cast<std::size_t>(c)]);
    r.vectors.col(c) = es.eigenvectors().col(order[static_cast<std::size_t>(c)]);
  }
  normalize_columns(r.vectors, metric);
  fix_phases(r.vectors);
  r.residuals.resize(count);
  const double scale = std::max(1.0, r.eigenvalues.cwiseAbs().maxCoeff());
  for (Index c = 0; c < count; ++c) {
    r.residuals(c) = (h.matrix * r.vectors.col(c) - r.eigenvalues(c) * r.vectors.col(c)).norm();
    if (!std::isfinite(r.residuals(c)) || r.residuals(c) > 1e-6 * scale * std::max(1.0, r.vectors.col(c).norm()))
      throw Error("solve_tise: eigenpair " + std::to_string(c) + " did not converge (residual " +
                  std::to_string(r.residuals(c)) + ")");
  }
  r.max_imag = r.eigenvalues.imag().cwiseAbs().maxCoeff();
  return r;
}

/// Hermitian eigenproblem; uses a real solver when the matrix is real.
inline EigenResult solve_tise_hermitian(const CMatrix& h, Index count, Representation basis = Representation::Theta) {
  const Index n = h.rows();
  if (count < 1 || count > n) throw Error("solve_tise_hermitian: count out of range");
  EigenResult r;
  r.basis = basis;
  if (max_abs(h.imag()) == 0.0) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(h.real());
    if (es.info() != Eigen::Success) throw Error("solve_tise_hermitian: eigen-solver did not converge");
    r.eigenvalues = es.eigenvalues().head(count).cast<Complex>();
    r.vectors = es.eigenvectors().leftCols(count).cast<Complex>();
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    if (es.info() != Eigen::Success) throw Error("solve_tise_hermitian: eigen-solver did not converge");
    r.eigenvalues = es.eigenvalues().head(count).cast<Complex>();
    r.vectors = es.eigenvectors().leftCols(count);
  }
  fix_phases(r.vectors);
  r.residuals.resize(count);
  for (Index c = 0; c < count; ++c)
    r.residuals(c) = (h * r.vectors.col(c) - r.eigenvalues(c) * r.vectors.col(c)).norm();
  return r;
}

/// A v = lambda M v with A Hermitian and M Hermitian positive definite; v^dag M v = 1.
inline EigenResult solve_tise_generalized(const CMatrix& a, const CMatrix& m, Index count,
                                          Representation basis = Representation::BTilde) {
  const Index n = a.rows();
  if (count < 1 || count > n) throw Error("solve_tise_generalized: count out of range");
  const CMatrix ah = 0.5 * (a + a.adjoint());
  const CMatrix mh = 0.5 * (m + m.adjoint());
  Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> es(ah, mh);
  if (es.info() != Eigen::Success) throw Error("solve_tise_generalized: eigen-solver failed (metric not positive definite?)");
  EigenResult r;
  r.basis = basis;
  r.eigenvalues = es.eigenvalues().head(count).cast<Complex>();
  r.vectors = es.eigenvectors().leftCols(count);
  normalize_columns(r.vectors, mh);
  fix_phases(r.vectors);
  r.residuals.resize(count);
  for (Index c = 0; c < count; ++c)
    r.residuals(c) = (ah * r.vectors.col(c) - r.eigenvalues(c) * (mh * r.vectors.col(c))).norm();
  return r;
}

/// Reduced H1 eigenpairs via (B~^dag H B~) v = lambda S~^-1 v.
template <ThetaOperator Op>
EigenResult solve_tise_h1_generalized(const Op& h, const ReducedBases& red, Index count) {
  const CMatrix a = red.B_tilde.adjoint() * h.apply(red.B_tilde);
  return solve_tise_generalized(a, red.S_tilde_inv, count, Representation::BTilde);
}

/// 1 - |<a,b>|^2 / (||a||^2 ||b||^2) on the sampling representation.
inline double infidelity(const StateVector& a, const StateVector& b) {
  require(a, Representation::Theta, "infidelity");
  require(b, Representation::Theta, "infidelity");
  if (!(a.grid == b.grid)) throw Error("infidelity: grid mismatch");
  const double na = a.coefficients.squaredNorm(), nb = b.coefficients.squaredNorm();
  if (na == 0.0 || nb == 0.0) throw Error("infidelity: zero-norm state");
  const double ov = std::norm(a.coefficients.dot(b.coefficients));
  return std::max(0.0, 1.0 - ov / (na * nb));
}

// ---------------------------------------------------------------------------
// Time propagation

/// Dormand-Prince 5(4): fifth-order solution, embedded fourth-order error
/// estimate, local extrapolation. Steps scale like tol^(1/(embedded+1)), so the
/// global error scales like tol^(order/(embedded+1)), i.e. linearly.
inline constexpr int kIntegratorOrder = 5;
inline constexpr int kEmbeddedOrder = 4;

inline constexpr double tolerance_exponent() {
  return static_cast<double>(kIntegratorOrder) / (kEmbeddedOrder + 1);
}

struct PropagationControls {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 picks one from the operator scale
  double min_step = 1e-14;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

struct SelectionEvent {
  double t = 0.0;
  Selection selection;
};

struct PropagationResult {
  std::vector<double> times;
  std::vector<CVector> states;           // reduced coordinates at each sample
  std::vector<std::size_t> selection_of;  // index into `selections` per sample
  std::vector<SelectionEvent> selections;
  std::vector<double> norms;
  Representation basis = Representation::BTilde;
  long accepted_steps = 0;
  long rejected_steps = 0;
};

using Rhs = std::function<CVector(const CVector&)>;

/// One adaptive DOPRI5 integrator state; advance() takes a single accepted step
/// no longer than `limit`.
class Dopri5 {
 public:
  Dopri5(Rhs f, CVector y, double t, const PropagationControls& c, double scale)
      : f_(std::move(f)), y_(std::move(y)), t_(t), c_(c) {
    k1_ = f_(y_);
    h_ = c_.initial_step > 0.0 ? c_.initial_step : 0.1 / std::max(scale, 1e-8);
    h_ = std::min(h_, c_.max_step);
  }

  const CVector& y() const { return y_; }
  double t() const { return t_; }
  long accepted() const { return accepted_; }
  long rejected() const { return rejected_; }

  /// Swaps the right-hand side and state (after a basis change).
  void reset(Rhs f, CVector y) {
    f_ = std::move(f);
    y_ = std::move(y);
    k1_ = f_(y_);
  }

  void advance(double limit) {
    static constexpr double a21 = 1.0 / 5, a31 = 3.0 / 40, a32 = 9.0 / 40, a41 = 44.0 / 45, a42 = -56.0 / 15,
                            a43 = 32.0 / 9, a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729, a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656, b1 = 35.0 / 384, b3 = 500.0 / 1113,
                            b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84, e1 = 71.0 / 57600,
                            e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                            e7 = -1.0 / 40;
    while (true) {
      if (accepted_ + rejected_ >= c_.max_steps) throw Error("propagate: step budget exhausted");
      const bool clipped = h_ >= limit;
      const double h = clipped ? limit : h_;
      const CVector k2 = f_(y_ + h * a21 * k1_);
      const CVector k3 = f_(y_ + h * (a31 * k1_ + a32 * k2));
      const CVector k4 = f_(y_ + h * (a41 * k1_ + a42 * k2 + a43 * k3));
      const CVector k5 = f_(y_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4));
      const CVector k6 = f_(y_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      CVector y1 = y_ + h * (b1 * k1_ + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const CVector k7 = f_(y1);
      const CVector err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double acc = 0.0;
      for (Index i = 0; i < err.size(); ++i) {
        const double sc = c_.atol + c_.rtol * std::max(std::abs(y_(i)), std::abs(y1(i)));
        acc += std::norm(err(i)) / (sc * sc);
      }
      const double en = std::sqrt(acc / static_cast<double>(std::max<Index>(1, err.size())));
      if (!std::isfinite(en)) throw Error("propagate: non-finite state");
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -1.0 / kIntegratorOrder), 0.2, 5.0);
      if (en <= 1.0) {
        y_ = std::move(y1);
        k1_ = k7;
        t_ += h;
        ++accepted_;
        // A clipped step says nothing about the natural step size.
        if (!clipped || fac < 1.0) h_ = std::min(h * fac, c_.max_step);
        return;
      }
      ++rejected_;
      h_ = h * std::max(fac, 0.2);
      if (h_ < c_.min_step) throw Error("propagate: step size underflow at t = " + std::to_string(t_));
    }
  }

 private:
  Rhs f_;
  CVector y_, k1_;
  double t_ = 0.0, h_ = 0.0;
  PropagationControls c_;
  long accepted_ = 0, rejected_ = 0;
};

inline void check_times(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw Error("propagate: empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw Error("propagate: time grid must be strictly increasing");
}

inline double metric_norm(const CVector& v, const CMatrix& metric) {
  if (metric.size() == 0) return v.norm();
  return std::sqrt(std::max(0.0, (v.adjoint() * metric * v)(0).real()));
}

/// Integrates i hbar d(psi)/dt = H psi with a fixed matrix H. The first entry of
/// `t_grid` is the initial time. Norms are measured under `metric`.
inline PropagationResult propagate(const StateVector& psi0, const OperatorRep& h, const std::vector<double>& t_grid,
                                   const PropagationControls& controls = {}, const CMatrix& metric = {},
                                   double hbar = kHbar) {
  check_times(t_grid);
  if (psi0.coefficients.size() != h.matrix.cols()) throw Error("propagate: state does not match operator");
  if (psi0.representation != h.input) throw Error("propagate: state representation does not match operator input");
  const CMatrix& a = h.matrix;
  const Complex pre = -kI / hbar;
  Rhs f = [&a, pre](const CVector& y) -> CVector { return pre * (a * y); };
  const double scale = a.size() ? a.cwiseAbs().colwise().sum().maxCoeff() / hbar : 0.0;

  PropagationResult r;
  r.basis = psi0.representation;
  r.selections.push_back({t_grid.front(), Selection{}});
  Dopri5 solver(f, psi0.coefficients, t_grid.front(), controls, scale);
  for (double t : t_grid) {
    while (solver.t() < t) solver.advance(t - solver.t());
    r.times.push_back(t);
    r.states.push_back(solver.y());
    r.selection_of.push_back(0);
    r.norms.push_back(metric_norm(solver.y(), metric));
  }
  r.accepted_steps = solver.accepted();
  r.rejected_steps = solver.rejected();
  return r;
}

struct AdaptivePolicy {
  enum class Rule { Fraction, Threshold };
  Rule rule = Rule::Fraction;
  double value = 1.0;       // fraction in (0,1] or amplitude cutoff
  int recheck_steps = 10;   // accepted steps between re-selections
  double recheck_interval = 0.0;  // if positive, re-select on elapsed time instead
  HForm form = HForm::H1;
  // Scores cells outside the current selection by the amplitude the Hamiltonian
  // feeds into them over one re-check interval, |<g_j|H|psi>| * dt / hbar.
  bool growth = true;
  double condition_cap = kDefaultConditionCap;
};

namespace detail {

inline Selection select_with_policy(const AdaptivePolicy& p, const RVector& score) {
  if (p.rule == AdaptivePolicy::Rule::Fraction) return select_top_count(score, fraction_count(p.value, score.size()));
  Index count = 0;
  for (Index i = 0; i < score.size(); ++i)
    if (score(i) >= p.value) ++count;
  return select_top_count(score, std::max<Index>(count, 1));
}

}  // namespace detail

/// Propagates with a reduced basis that is re-selected every `recheck_steps`
/// accepted steps. States are stored as B~ coefficients on the selection active
/// at each sample time.
inline PropagationResult propagate_adaptive(const StateVector& psi0, const ReducedHamiltonianFactory& factory,
                                            const AdaptivePolicy& policy, const std::vector<double>& t_grid,
                                            const PropagationControls& controls = {}, double hbar = kHbar) {
  check_times(t_grid);
  if (policy.form != HForm::H1 && policy.form != HForm::H2)
    throw Error("propagate_adaptive: only H1 and H2 act on B~ coordinates");
  if (policy.recheck_steps < 1 || !(policy.recheck_interval >= 0.0))
    throw Error("propagate_adaptive: recheck interval must be positive");
  const BasisPair& basis = factory.basis();
  const Index n = basis.size();
  if (psi0.representation != Representation::Theta && psi0.representation != Representation::B)
    throw Error("propagate_adaptive: initial state must be given on samples or in B coordinates");
  const CVector psi_b =
      psi0.representation == Representation::B ? psi0.coefficients : to_pvb(psi0, basis).coefficients;

  Selection sel = detail::select_with_policy(policy, psi_b.cwiseAbs());
  CMatrix s_inv_kk = take_block(basis.S_inv, sel.kept, sel.kept);
  CVector y;
  {
    HermitianSolver s(s_inv_kk, policy.condition_cap, "S~^-1");
    y = s.solve(take_rows(basis.S_inv * psi_b, sel.kept));
  }
  CMatrix a = factory.make(policy.form, sel, policy.condition_cap).matrix;
  const Complex pre = -kI / hbar;
  auto make_rhs = [&a, pre]() -> Rhs { return [&a, pre](const CVector& v) -> CVector { return pre * (a * v); }; };
  const double scale = factory.H_BB().cwiseAbs().colwise().sum().maxCoeff() / hbar;

  PropagationResult r;
  r.selections.push_back({t_grid.front(), sel});
  Dopri5 solver(make_rhs(), y, t_grid.front(), controls, scale);
  double last_check = t_grid.front();
  long steps_since = 0;

  auto reselect = [&]() {
    const CVector& cur = solver.y();
    RVector score = RVector::Zero(n);
    for (Index c = 0; c < sel.size(); ++c) score(sel.kept[static_cast<std::size_t>(c)]) = std::abs(cur(c));
    if (policy.growth) {
      const double tau = std::max(solver.t() - last_check, 0.0) / hbar;
      const CVector hg = factory.gaussian_matrix_elements(sel, cur);
      for (Index j : sel.complement) score(j) = tau * std::abs(hg(j));
    }
    Selection next = detail::select_with_policy(policy, score);
    last_check = solver.t();
    steps_since = 0;
    if (next.size() == 1 && n > 1)
      throw Error("propagate_adaptive: selection collapsed to a single cell at t = " + std::to_string(solver.t()));
    if (next.same_set(sel)) return;
    // Re-project: psi_B~' = S~' (S^-1 R psi_B~)_kept'.
    const CVector full = take_columns(basis.S_inv, sel.kept) * cur;
    CMatrix s_next = take_block(basis.S_inv, next.kept, next.kept);
    HermitianSolver s(s_next, policy.condition_cap, "S~^-1");
    CVector y_next = s.solve(take_rows(full, next.kept));
    sel = std::move(next);
    s_inv_kk = std::move(s_next);
    a = factory.make(policy.form, sel, policy.condition_cap).matrix;
    r.selections.push_back({solver.t(), sel});
    solver.reset(make_rhs(), std::move(y_next));
  };

  for (double t : t_grid) {
    while (solver.t() < t) {
      solver.advance(t - solver.t());
      ++steps_since;
      const bool due = policy.recheck_interval > 0.0 ? solver.t() - last_check >= policy.recheck_interval - 1e-12
                                                     : steps_since >= policy.recheck_steps;
      if (due) reselect();
    }
    r.times.push_back(t);
    r.states.push_back(solver.y());
    r.selection_of.push_back(r.selections.size() - 1);
    r.norms.push_back(metric_norm(solver.y(), s_inv_kk));
  }
  r.accepted_steps = solver.accepted();
  r.rejected_steps = solver.rejected();
  return r;
}

/// Samples of a reduced state stored in a PropagationResult.
inline StateVector lift_sample(const PropagationResult& r, std::size_t i, const BasisPair& basis) {
  const Selection& sel = r.selections[r.selection_of[i]].selection;
  if (sel.kept.empty()) {
    if (r.basis == Representation::B) return from_pvb({Representation::B, r.states[i], basis.grid()}, basis);
    if (r.basis == Representation::Theta) return {Representation::Theta, r.states[i], basis.grid()};
    throw Error("lift_sample: fixed-basis result in reduced coordinates needs its ReducedBases");
  }
  const CVector theta = take_columns(basis.B, sel.kept) * r.states[i] / std::sqrt(basis.weight());
  return {Representation::Theta, theta, basis.grid()};
}

/// Exact full-grid evolution from the eigendecomposition of H.
class FullReference {
 public:
  explicit FullReference(const FgHamiltonian& h, double hbar = kHbar) : grid_(h.grid()), hbar_(hbar) {
    const CMatrix d = h.dense();
    if (h.is_real()) {
      Eigen::SelfAdjointEigenSolver<RMatrix> es(d.real());
      if (es.info() != Eigen::Success) throw Error("FullReference: eigen-solver failed");
      energies_ = es.eigenvalues();
      real_vectors_ = es.eigenvectors();
      real_ = true;
    } else {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(d);
      if (es.info() != Eigen::Success) throw Error("FullReference: eigen-solver failed");
      energies_ = es.eigenvalues();
      vectors_ = es.eigenvectors();
    }
  }

  const RVector& energies() const { return energies_; }

  CVector eigenvector(Index k) const { return real_ ? CVector(real_vectors_.col(k).cast<Complex>()) : CVector(vectors_.col(k)); }

  StateVector evolve(const StateVector& psi0, double t) const {
    require(psi0, Representation::Theta, "FullReference::evolve");
    CVector c = adjoint_apply(psi0.coefficients);
    for (Index k = 0; k < c.size(); ++k) c(k) *= std::exp(-kI * (energies_(k) * t / hbar_));
    return {Representation::Theta, apply(c), grid_};
  }

 private:
  CVector adjoint_apply(const CVector& v) const {
    if (!real_) return vectors_.adjoint() * v;
    CVector out(v.size());
    out.real() = real_vectors_.transpose() * v.real();
    out.imag() = real_vectors_.transpose() * v.imag();
    return out;
  }
  CVector apply(const CVector& c) const {
    if (!real_) return vectors_ * c;
    CVector out(c.size());
    out.real() = real_vectors_ * c.real();
    out.imag() = real_vectors_ * c.imag();
    return out;
  }

  GridND grid_;
  double hbar_;
  RVector energies_;
  RMatrix real_vectors_;
  CMatrix vectors_;
  bool real_ = false;
};

}  // namespace pvb
