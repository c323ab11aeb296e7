#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pvb {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Action constant. Everything in this library works in atomic units.
inline constexpr double kHbar = 1.0;

/// Default cap on the condition number of any Gram matrix we invert.
inline constexpr double kDefaultConditionCap = 1e12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a Gram/overlap matrix is too ill-conditioned to invert.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double condition)
      : Error(what + ": condition number " + std::to_string(condition) + " exceeds cap"),
        condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

/// max |A - 1| over all entries.
template <class Derived>
double max_abs_from_identity(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Plain = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  return max_abs(m - Plain::Identity(m.rows(), m.cols()));
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Row-major strides for a tensor with the given extents (first axis slowest).
inline std::vector<Index> row_major_strides(std::span<const Index> extents) {
  std::vector<Index> strides(extents.size(), 1);
  for (std::size_t a = extents.size(); a-- > 1;) strides[a - 1] = strides[a] * extents[a];
  return strides;
}

/// Applies (M_0 ⊗ M_1 ⊗ ... ⊗ M_{d-1}) to every column of `x` without forming the
/// Kronecker product. Factor `a` acts on axis `a` of the row-major flattened index.
/// Pass `adjoint = true` to apply the conjugate transpose of every factor.
inline CMatrix kron_apply(std::span<const CMatrix> factors, const CMatrix& x, bool adjoint = false) {
  if (factors.size() == 1) return adjoint ? CMatrix(factors[0].adjoint() * x) : CMatrix(factors[0] * x);

  std::vector<Index> in_ext, out_ext;
  for (const auto& f : factors) {
    in_ext.push_back(adjoint ? f.rows() : f.cols());
    out_ext.push_back(adjoint ? f.cols() : f.rows());
  }
  Index in_total = 1;
  for (Index e : in_ext) in_total *= e;
  if (x.rows() != in_total) throw Error("kron_apply: row count does not match factor sizes");

  // Mode products, one axis at a time; `cur` holds the current tensor extents.
  std::vector<Index> cur = in_ext;
  CMatrix data = x;
  for (std::size_t a = 0; a < factors.size(); ++a) {
    const CMatrix m = adjoint ? CMatrix(factors[a].adjoint()) : factors[a];
    Index outer = 1, inner = 1;
    for (std::size_t b = 0; b < a; ++b) outer *= cur[b];
    for (std::size_t b = a + 1; b < cur.size(); ++b) inner *= cur[b];
    const Index n_in = cur[a], n_out = m.rows();
    CMatrix next(outer * n_out * inner, data.cols());
    for (Index col = 0; col < data.cols(); ++col) {
      for (Index o = 0; o < outer; ++o) {
        // View the (n_in x inner) slab as a matrix and left-multiply by m.
        Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> slab(
            data.col(col).data() + o * n_in * inner, n_in, inner);
        Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dst(
            next.col(col).data() + o * n_out * inner, n_out, inner);
        dst.noalias() = m * slab;
      }
    }
    data = std::move(next);
    cur[a] = n_out;
  }
  return data;
}

/// Result of inverting a Hermitian positive-definite matrix.
struct HermitianInverse {
  CMatrix inverse;
  double condition = 1.0;
};

/// Exact spectral condition number of a Hermitian matrix (ratio of extreme |eigenvalues|).
inline double hermitian_condition(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  const RVector ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return ev.maxCoeff() / lo;
}

/// Cholesky factorization of an HPD matrix with a cheap condition estimate.
/// Throws ConditioningError naming `what` if the matrix is not numerically HPD or
/// the estimated condition number exceeds `cap`.
class HermitianSolver {
 public:
  HermitianSolver() = default;
  HermitianSolver(const CMatrix& a, double cap, const std::string& what) : llt_(a) {
    if (llt_.info() != Eigen::Success)
      throw ConditioningError(what + " is not positive definite", std::numeric_limits<double>::infinity());
    const double rc = llt_.rcond();
    condition_ = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (!(condition_ <= cap)) throw ConditioningError(what, condition_);
  }

  template <class Rhs>
  CMatrix solve(const Rhs& rhs) const {
    return llt_.solve(rhs);
  }
  CMatrix inverse() const { return llt_.solve(CMatrix::Identity(llt_.rows(), llt_.cols())); }
  double condition() const noexcept { return condition_; }
  Index size() const noexcept { return llt_.rows(); }

 private:
  Eigen::LLT<CMatrix> llt_;
  double condition_ = 1.0;
};

/// Numerical rank: number of singular values above `tol * largest`.
inline Index numerical_rank(const CMatrix& a, double tol) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  const RVector s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

}  // namespace pvb
