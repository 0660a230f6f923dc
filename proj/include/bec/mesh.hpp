#pragma once

// Graded cell-centred grid on [0, L], the regularized weight family
// g_eps = z_eps^alpha, weighted midpoint quadrature and the difference
// operators used by the scheme and the diagnostics.

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace bec {

struct Grid {
  std::vector<double> faces;    ///< N+1 entries, faces.front() == 0, faces.back() == L
  std::vector<double> centers;  ///< N cell midpoints
  std::vector<double> widths;   ///< N cell widths
  double grading_exponent = 1.0;

  [[nodiscard]] std::size_t size() const { return centers.size(); }
  [[nodiscard]] double length() const { return faces.back(); }
};

/// Nonnegative grid function with its time stamp.
struct Field {
  std::vector<double> values;
  double time = 0.0;
};

/// Faces L*(j/N)^grading for j = 0..N; no minimum cell count.
inline std::vector<double> graded_faces(std::size_t N, double grading_exponent, double L) {
  if (N == 0) throw std::invalid_argument("graded_faces: N must be positive");
  if (!(grading_exponent >= 1.0)) throw std::invalid_argument("graded_faces: grading exponent must be >= 1");
  if (!(L > 0.0)) throw std::invalid_argument("graded_faces: L must be positive");
  std::vector<double> faces(N + 1);
  for (std::size_t j = 0; j <= N; ++j) {
    faces[j] = L * std::pow(static_cast<double>(j) / static_cast<double>(N), grading_exponent);
  }
  faces.front() = 0.0;
  faces.back() = L;
  return faces;
}

inline Grid build_grid(std::size_t N, double grading_exponent, double L) {
  if (N < 8) throw std::invalid_argument("build_grid: need at least 8 cells");
  Grid g;
  g.faces = graded_faces(N, grading_exponent, L);
  g.grading_exponent = grading_exponent;
  g.centers.resize(N);
  g.widths.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    g.centers[i] = 0.5 * (g.faces[i] + g.faces[i + 1]);
    g.widths[i] = g.faces[i + 1] - g.faces[i];
    if (!(g.widths[i] > 0.0)) throw std::invalid_argument("build_grid: degenerate cell");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Regularized weights

namespace detail {

inline double smooth_q(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

}  // namespace detail

/// C-infinity step: 0 for t <= 0, 1 for t >= 1, h(t) + h(1-t) = 1.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = detail::smooth_q(t);
  const double b = detail::smooth_q(1.0 - t);
  return a / (a + b);
}

/// Integral of smooth_step over [0, s] for s in [0, 1]. Equals 1/2 at s = 1 by symmetry.
inline double smooth_step_integral(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 0.5;
  if (s > 0.5) return s - 0.5 + smooth_step_integral(1.0 - s);
  // Composite 20-point Gauss on 16 panels: ~1e-15 relative.
  constexpr int panels = 16;
  double r = 0.0;
  for (int k = 0; k < panels; ++k) {
    r += boost::math::quadrature::gauss<double, 20>::integrate([](double t) { return smooth_step(t); },
                                                               s * k / panels, s * (k + 1) / panels);
  }
  return r;
}

/// Cut-off that vanishes at 0 and L and equals 1 on [eps^2, L - eps^2].
inline double zeta_eps(double x, double epsilon, double L) {
  if (x <= 0.0 || x >= L) return 0.0;
  if (epsilon == 0.0) return 1.0;
  const double w = epsilon * epsilon;
  return std::min(smooth_step(x / w), smooth_step((L - x) / w));
}

/// z_eps(x) = eps + int_0^x zeta_eps.
inline double z_eps(double x, double epsilon, double L) {
  if (epsilon == 0.0) return x;
  const double w = epsilon * epsilon;
  x = std::clamp(x, 0.0, L);
  if (x <= w) return epsilon + w * smooth_step_integral(x / w);
  const double left = epsilon + 0.5 * w;  // z at x = w
  if (x <= L - w) return left + (x - w);
  const double z_right = left + (L - 2.0 * w);
  return z_right + w * (0.5 - smooth_step_integral((L - x) / w));
}

inline double g_eps(double x, double epsilon, double alpha, double L) {
  return std::pow(z_eps(x, epsilon, L), alpha);
}

/// Derivative g_eps' = alpha z^{alpha-1} zeta.
inline double gx_eps(double x, double epsilon, double alpha, double L) {
  const double zeta = zeta_eps(x, epsilon, L);
  if (zeta == 0.0) return 0.0;
  return alpha * std::pow(z_eps(x, epsilon, L), alpha - 1.0) * zeta;
}

/// Weight family sampled once at the cell centres of a grid.
class WeightProfiles {
public:
  WeightProfiles(const Grid& grid, double epsilon, double alpha)
      : epsilon_(epsilon), alpha_(alpha), L_(grid.length()) {
    if (epsilon < 0.0) throw std::invalid_argument("WeightProfiles: epsilon must be >= 0");
    if (epsilon > 0.0 && !(epsilon * epsilon < L_ - epsilon * epsilon)) {
      throw std::invalid_argument("WeightProfiles: epsilon must satisfy eps^2 < L - eps^2");
    }
    const std::size_t N = grid.size();
    z_.resize(N);
    g_.resize(N);
    gx_.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      const double x = grid.centers[i];
      z_[i] = z_eps(x, epsilon, L_);
      g_[i] = std::pow(z_[i], alpha);
      gx_[i] = gx_eps(x, epsilon, alpha, L_);
    }
  }

  [[nodiscard]] double epsilon() const { return epsilon_; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double zeta_width() const { return epsilon_ * epsilon_; }

  [[nodiscard]] double z_at(double x) const { return z_eps(x, epsilon_, L_); }
  [[nodiscard]] double g_at(double x) const { return g_eps(x, epsilon_, alpha_, L_); }
  [[nodiscard]] double gx_at(double x) const { return gx_eps(x, epsilon_, alpha_, L_); }

  [[nodiscard]] std::span<const double> z() const { return z_; }
  [[nodiscard]] std::span<const double> g() const { return g_; }
  [[nodiscard]] std::span<const double> gx() const { return gx_; }

private:
  double epsilon_;
  double alpha_;
  double L_;
  std::vector<double> z_, g_, gx_;
};

// ---------------------------------------------------------------------------
// Quadrature

/// Per-cell weights of the midpoint rule for (x + shift)^w. With shift == 0 and
/// w < 0 the first cell is integrated exactly so the singularity at 0 is captured.
inline std::vector<double> cell_weights(const Grid& grid, double w, double shift = 0.0) {
  if (shift < 0.0) throw std::invalid_argument("cell_weights: shift must be >= 0");
  if (shift == 0.0 && !(w > -1.0)) {
    throw std::invalid_argument("cell_weights: weight exponent must exceed -1 without shift");
  }
  const std::size_t N = grid.size();
  std::vector<double> out(N);
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = std::pow(grid.centers[i] + shift, w) * grid.widths[i];
  }
  if (shift == 0.0 && w < 0.0) {
    out[0] = std::pow(grid.faces[1], w + 1.0) / (w + 1.0);
  }
  return out;
}

/// sum_i (x_i + shift)^w u_i dx_i
inline double weighted_integral(const Grid& grid, std::span<const double> u, double w,
                                double shift = 0.0) {
  if (u.size() != grid.size()) throw std::invalid_argument("weighted_integral: size mismatch");
  const auto wts = cell_weights(grid, w, shift);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += wts[i] * u[i];
  return s;
}

// ---------------------------------------------------------------------------
// Difference operators

/// Three-point stencils at the cell centres. Boundary cells use mirror ghost
/// values (u_0 = u_1, u_{N+1} = u_N), i.e. a homogeneous Neumann condition.
class DifferenceOperators {
public:
  explicit DifferenceOperators(const Grid& grid) : N_(grid.size()) {
    const auto& x = grid.centers;
    const double L = grid.length();
    lo_.resize(N_);
    up_.resize(N_);
    l1_.resize(N_);
    u1_.resize(N_);
    face_h_.resize(N_ > 0 ? N_ - 1 : 0);
    inv_w_.resize(N_);
    for (std::size_t i = 0; i < N_; ++i) {
      const double xm = i == 0 ? -x[0] : x[i - 1];
      const double xp = i + 1 == N_ ? 2.0 * L - x[i] : x[i + 1];
      const double hm = x[i] - xm;
      const double hp = xp - x[i];
      lo_[i] = 2.0 / (hm * (hm + hp));
      up_[i] = 2.0 / (hp * (hm + hp));
      l1_[i] = -hp / (hm * (hm + hp));
      u1_[i] = hm / (hp * (hm + hp));
      inv_w_[i] = 1.0 / grid.widths[i];
    }
    for (std::size_t f = 0; f + 1 < N_; ++f) face_h_[f] = x[f + 1] - x[f];
  }

  [[nodiscard]] std::size_t size() const { return N_; }

  /// First derivative at the centres (exact for quadratics). Written in
  /// difference form so constants map to exactly zero.
  void d1(std::span<const double> u, std::span<double> out) const {
    for (std::size_t i = 0; i < N_; ++i) {
      out[i] = l1_[i] * (left(u, i) - u[i]) + u1_[i] * (right(u, i) - u[i]);
    }
  }

  /// Second derivative at the centres (exact for quadratics).
  void d2(std::span<const double> u, std::span<double> out) const {
    for (std::size_t i = 0; i < N_; ++i) {
      out[i] = lo_[i] * (left(u, i) - u[i]) + up_[i] * (right(u, i) - u[i]);
    }
  }

  /// (u_{i+1} - u_i) / (x_{i+1} - x_i) at the N-1 interior faces.
  void face_gradient(std::span<const double> u, std::span<double> out) const {
    for (std::size_t f = 0; f + 1 < N_; ++f) out[f] = (u[f + 1] - u[f]) / face_h_[f];
  }

  /// Flux-difference Laplacian (1/dx_i)(G_{i+1/2} - G_{i-1/2}) with G = face
  /// gradient and G = 0 on both boundary faces. Self-adjoint in the dx-weighted
  /// inner product, and sum_i dx_i (Lap u)_i = 0 identically.
  void laplacian(std::span<const double> u, std::span<double> out) const {
    double g_left = 0.0;
    for (std::size_t i = 0; i < N_; ++i) {
      const double g_right = i + 1 < N_ ? (u[i + 1] - u[i]) / face_h_[i] : 0.0;
      out[i] = (g_right - g_left) * inv_w_[i];
      g_left = g_right;
    }
  }

  [[nodiscard]] std::span<const double> center_spacing() const { return face_h_; }

private:
  static double left(std::span<const double> u, std::size_t i) { return i == 0 ? u[0] : u[i - 1]; }
  double right(std::span<const double> u, std::size_t i) const {
    return i + 1 == N_ ? u[i] : u[i + 1];
  }

  std::size_t N_;
  std::vector<double> lo_, up_;  // d2 stencil
  std::vector<double> l1_, u1_;  // d1 stencil
  std::vector<double> face_h_;
  std::vector<double> inv_w_;
};

inline DifferenceOperators diff_ops(const Grid& grid) { return DifferenceOperators(grid); }

}  // namespace bec
