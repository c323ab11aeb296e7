#pragma once

// Periodic band-limited Hilbert space sampled on an equidistant grid: sample
// points, plane-wave (spectral) and periodic-sinc (pseudo-spectral) bases,
// quadrature inner product and collocation.
//
// Conventions used throughout the library:
//  * indices are 0-based; sample j sits at origin + offset + L*j/N;
//  * spectral slot s in [0, N) holds wavenumber k = 2*pi*n/L, n = s - N/2 + 1;
//  * Theta-state vectors hold raw samples f(x_j); inner products carry the
//    quadrature weight L/N per axis;
//  * multi-D grids flatten row-major, first axis slowest.

#include "pvb/core.hpp"

#include <functional>
#include <initializer_list>
#include <string_view>

namespace pvb {

struct Grid1D {
  double length = 0.0;
  Index size = 0;
  double offset = 0.0;  // x0, in [0, L/N)
  double origin = 0.0;  // left edge of the periodic cell

  double spacing() const { return length / static_cast<double>(size); }
  double weight() const { return spacing(); }
  double sample(Index j) const { return origin + offset + length * static_cast<double>(j) / static_cast<double>(size); }
  RVector samples() const {
    RVector x(size);
    for (Index j = 0; j < size; ++j) x(j) = sample(j);
    return x;
  }

  Index n_max() const { return size / 2; }
  Index spectral_index(Index slot) const { return slot - size / 2 + 1; }
  double wavenumber(Index slot) const { return 2.0 * kPi * static_cast<double>(spectral_index(slot)) / length; }
  RVector wavenumbers() const {
    RVector k(size);
    for (Index s = 0; s < size; ++s) k(s) = wavenumber(s);
    return k;
  }
  /// Band limit K = pi*N/L.
  double band_limit() const { return kPi * static_cast<double>(size) / length; }

  /// Wraps a displacement into [-L/2, L/2).
  double wrap(double d) const {
    double r = std::fmod(d + 0.5 * length, length);
    if (r < 0.0) r += length;
    return r - 0.5 * length;
  }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

inline Grid1D make_grid(double length, Index size, double offset = 0.0, double origin = 0.0) {
  if (!(length > 0.0) || !std::isfinite(length)) throw Error("make_grid: length must be positive");
  if (size < 2 || size % 2 != 0) throw Error("make_grid: point count must be even and >= 2, got " + std::to_string(size));
  if (!(offset >= 0.0) || !(offset < length / static_cast<double>(size)))
    throw Error("make_grid: offset must lie in [0, L/N)");
  if (!std::isfinite(origin)) throw Error("make_grid: origin must be finite");
  return Grid1D{length, size, offset, origin};
}

/// Tensor-product grid. Flattened index is row-major over `axes`.
struct GridND {
  std::vector<Grid1D> axes;

  GridND() = default;
  explicit GridND(std::vector<Grid1D> a) : axes(std::move(a)) {
    if (axes.empty()) throw Error("GridND: at least one axis required");
  }
  GridND(std::initializer_list<Grid1D> a) : GridND(std::vector<Grid1D>(a)) {}
  GridND(const Grid1D& g) : axes{g} {}  // NOLINT: a 1D grid is a 1-axis GridND

  std::size_t dimension() const { return axes.size(); }
  Index total_points() const {
    Index n = 1;
    for (const auto& g : axes) n *= g.size;
    return n;
  }
  std::vector<Index> extents() const {
    std::vector<Index> e;
    for (const auto& g : axes) e.push_back(g.size);
    return e;
  }
  double weight() const {
    double w = 1.0;
    for (const auto& g : axes) w *= g.weight();
    return w;
  }
  std::vector<Index> unflatten(Index flat) const {
    std::vector<Index> idx(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      idx[a] = flat % axes[a].size;
      flat /= axes[a].size;
    }
    return idx;
  }
  std::vector<double> point(Index flat) const {
    const auto idx = unflatten(flat);
    std::vector<double> x(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a) x[a] = axes[a].sample(idx[a]);
    return x;
  }

  friend bool operator==(const GridND&, const GridND&) = default;
};

enum class Representation { Theta, B, G, BTilde, GTilde, BCheck, GCheck };

inline std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::Theta: return "Theta";
    case Representation::B: return "B";
    case Representation::G: return "G";
    case Representation::BTilde: return "BTilde";
    case Representation::GTilde: return "GTilde";
    case Representation::BCheck: return "BCheck";
    case Representation::GCheck: return "GCheck";
  }
  return "?";
}

inline bool is_reduced(Representation r) {
  return r == Representation::BTilde || r == Representation::GTilde || r == Representation::BCheck ||
         r == Representation::GCheck;
}

/// A coefficient vector tagged with the basis it is expressed in.
struct StateVector {
  Representation representation = Representation::Theta;
  CVector coefficients;
  GridND grid;

  StateVector() = default;
  StateVector(Representation rep, CVector c, GridND g)
      : representation(rep), coefficients(std::move(c)), grid(std::move(g)) {
    if (!is_reduced(representation) && coefficients.size() != grid.total_points())
      throw Error("StateVector: coefficient length does not match the grid");
    if (is_reduced(representation) && coefficients.size() > grid.total_points())
      throw Error("StateVector: reduced state longer than the full basis");
  }

  Index size() const { return coefficients.size(); }
};

inline void require(const StateVector& s, Representation rep, const char* where) {
  if (s.representation != rep)
    throw Error(std::string(where) + ": expected representation " + std::string(to_string(rep)) + ", got " +
                std::string(to_string(s.representation)));
}

/// Periodic sinc function theta_m(x); equals delta_{mn} on sample points.
inline Complex theta_value(const Grid1D& grid, Index m, double x) {
  if (m < 0 || m >= grid.size) throw Error("theta_value: index out of range");
  const double d = grid.wrap(x - grid.sample(m));
  const double alpha = 2.0 * kPi * d / grid.length;
  if (std::abs(alpha) < 1e-12) return {1.0, 0.0};
  const double n = static_cast<double>(grid.size);
  const double ratio = std::sin(0.5 * n * alpha) / (n * std::sin(0.5 * alpha));
  return std::exp(kI * (kPi * d / grid.length)) * ratio;
}

/// Quadrature inner product <u, v> = w * sum_j conj(u_j) v_j; exact for band-limited functions.
inline Complex inner_product(const StateVector& u, const StateVector& v) {
  require(u, Representation::Theta, "inner_product");
  require(v, Representation::Theta, "inner_product");
  if (!(u.grid == v.grid)) throw Error("inner_product: states live on different grids");
  return u.grid.weight() * u.coefficients.dot(v.coefficients);
}

inline double norm(const StateVector& u) { return std::sqrt(std::max(0.0, inner_product(u, u).real())); }

using Function1D = std::function<Complex(double)>;
using FunctionND = std::function<Complex(std::span<const double>)>;

/// Sampling vector (f(x_1), ..., f(x_N)).
inline StateVector collocate(const FunctionND& f, const GridND& grid) {
  CVector v(grid.total_points());
  for (Index j = 0; j < v.size(); ++j) {
    const auto x = grid.point(j);
    v(j) = f(x);
    if (!std::isfinite(v(j).real()) || !std::isfinite(v(j).imag()))
      throw Error("collocate: non-finite sample at index " + std::to_string(j));
  }
  return {Representation::Theta, std::move(v), grid};
}

inline StateVector collocate(const Function1D& f, const Grid1D& grid) {
  return collocate([&f](std::span<const double> x) { return f(x[0]); }, GridND(grid));
}

/// Evaluates the band-limited interpolant sum_m f(x_m) theta_m(x) at an off-grid point.
inline Complex interpolate(const StateVector& f, double x) {
  require(f, Representation::Theta, "interpolate");
  if (f.grid.dimension() != 1) throw Error("interpolate: 1D grids only");
  const Grid1D& g = f.grid.axes[0];
  Complex s = 0.0;
  for (Index m = 0; m < g.size; ++m) s += f.coefficients(m) * theta_value(g, m, x);
  return s;
}

/// Matrix mapping samples to spectral coefficients on one axis:
/// F(s, j) = w * conj(phi_s(x_j)) with phi_n = exp(i k_n x)/sqrt(L).
inline CMatrix spectral_matrix(const Grid1D& g) {
  CMatrix f(g.size, g.size);
  const double scale = g.weight() / std::sqrt(g.length);
  for (Index s = 0; s < g.size; ++s)
    for (Index j = 0; j < g.size; ++j) f(s, j) = scale * std::exp(-kI * (g.wavenumber(s) * g.sample(j)));
  return f;
}

/// Inverse of spectral_matrix: samples from spectral coefficients.
inline CMatrix synthesis_matrix(const Grid1D& g) {
  CMatrix f(g.size, g.size);
  const double scale = 1.0 / std::sqrt(g.length);
  for (Index j = 0; j < g.size; ++j)
    for (Index s = 0; s < g.size; ++s) f(j, s) = scale * std::exp(kI * (g.wavenumber(s) * g.sample(j)));
  return f;
}

/// <phi_n, psi> for every spectral slot (tensor product of per-axis slots in N-D).
inline CVector spectral_coefficients(const StateVector& psi) {
  require(psi, Representation::Theta, "spectral_coefficients");
  std::vector<CMatrix> factors;
  for (const auto& g : psi.grid.axes) factors.push_back(spectral_matrix(g));
  return kron_apply(factors, psi.coefficients);
}

inline StateVector from_spectral(const CVector& c, const GridND& grid) {
  if (c.size() != grid.total_points()) throw Error("from_spectral: length mismatch");
  std::vector<CMatrix> factors;
  for (const auto& g : grid.axes) factors.push_back(synthesis_matrix(g));
  return {Representation::Theta, kron_apply(factors, c), grid};
}

/// Sampled plane wave phi_n for spectral index n (not slot).
inline StateVector spectral_function(const Grid1D& g, Index n) {
  return collocate([&](double x) { return std::exp(kI * (2.0 * kPi * static_cast<double>(n) * x / g.length)) / std::sqrt(g.length); }, g);
}

}  // namespace pvb
