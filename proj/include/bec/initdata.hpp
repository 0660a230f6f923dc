#pragma once

// Initial data: smooth positive profiles, the concentration family
// u_0(x) + k^theta phi(k x) that drives the shifted moment to infinity while
// mass stays bounded, and the smoothing of rough data into strictly positive
// profiles with compactly supported derivative.

#include "bec/mesh.hpp"
#include "bec/paramspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace bec {

struct ConstantProfile {
  double c = 1.0;
};

/// background + height * exp(1 - 1/(1 - s^2)), s = (x - center)/width.
struct BumpProfile {
  double center = 0.5;
  double width = 0.25;
  double height = 1.0;
  double background = 0.0;
};

/// Two-column (x, u) table, linearly interpolated and held constant outside its range.
struct TableProfile {
  std::vector<double> x;
  std::vector<double> u;
  std::string source;  ///< file the table was read from, if any
};

using BaseProfile = std::variant<ConstantProfile, BumpProfile, TableProfile>;

struct ConcentrationProfile {
  BaseProfile base = ConstantProfile{1.0};
  std::int64_t k = 1;
  double theta = 1.3;
  BumpProfile phi{0.5, 0.25, 1.0, 0.0};
};

using Profile = std::variant<ConstantProfile, BumpProfile, ConcentrationProfile, TableProfile>;

/// C-infinity bump with compact support [center - width, center + width]; max = height.
inline double standard_bump(double x, double center, double width, double height) {
  const double s = (x - center) / width;
  if (std::abs(s) >= 1.0) return 0.0;
  return height * std::exp(1.0 - 1.0 / (1.0 - s * s));
}

/// Rejects bumps whose support touches {0, L}.
inline void validate_bump(const BumpProfile& b, double L) {
  if (!(b.width > 0.0)) throw std::invalid_argument("bump: width must be positive");
  if (!(b.height >= 0.0)) throw std::invalid_argument("bump: height must be nonnegative");
  if (!(b.center - b.width > 0.0 && b.center + b.width < L)) {
    throw std::invalid_argument("bump: support must lie inside (0, L)");
  }
}

inline TableProfile read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table file: " + path);
  TableProfile t;
  t.source = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double a = 0.0;
    double b = 0.0;
    if (!(ss >> a)) continue;
    if (!(ss >> b)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two columns");
    }
    t.x.push_back(a);
    t.u.push_back(b);
  }
  if (t.x.size() < 2) throw std::runtime_error(path + ": table needs at least two rows");
  for (std::size_t i = 1; i < t.x.size(); ++i) {
    if (!(t.x[i] > t.x[i - 1])) throw std::runtime_error(path + ": x column must increase");
  }
  return t;
}

inline double interpolate(const TableProfile& t, double x) {
  if (x <= t.x.front()) return t.u.front();
  if (x >= t.x.back()) return t.u.back();
  const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - t.x.begin());
  const double s = (x - t.x[j - 1]) / (t.x[j] - t.x[j - 1]);
  return (1.0 - s) * t.u[j - 1] + s * t.u[j];
}

inline double evaluate(const BaseProfile& p, double x) {
  return std::visit(
      [x](const auto& q) -> double {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, ConstantProfile>) {
          return q.c;
        } else if constexpr (std::is_same_v<T, BumpProfile>) {
          return q.background + standard_bump(x, q.center, q.width, q.height);
        } else {
          return interpolate(q, x);
        }
      },
      p);
}

/// Admissible theta window (beta + 1 - kappa, beta + 1).
inline bool theta_admissible(double theta, double beta, double kappa) {
  return theta > beta + 1.0 - kappa && theta < beta + 1.0;
}

inline double default_theta(double beta, double kappa) { return beta + 1.0 - 0.5 * kappa; }

struct ConcentrationResult {
  Field field;
  std::vector<std::string> warnings;
};

/// u_0(x_i) + k^theta phi(k x_i) on the grid. Requires theta in
/// (beta + 1 - kappa, beta + 1); with an L^p target also p * theta < 1.
inline ConcentrationResult concentration_family(const Grid& grid, std::span<const double> u0,
                                                std::int64_t k, double theta,
                                                const BumpProfile& phi, double beta, double kappa,
                                                std::optional<double> lp_exponent = std::nullopt) {
  if (u0.size() != grid.size()) throw std::invalid_argument("concentration_family: size mismatch");
  if (k < 1) throw std::invalid_argument("concentration_family: k must be a positive integer");
  if (!theta_admissible(theta, beta, kappa)) {
    throw std::invalid_argument("concentration_family: theta outside (beta+1-kappa, beta+1)");
  }
  if (lp_exponent && !(*lp_exponent * theta < 1.0)) {
    throw std::invalid_argument("concentration_family: need p*theta < 1");
  }
  validate_bump(phi, grid.length());

  const double kd = static_cast<double>(k);
  const double scale = std::pow(kd, theta);
  ConcentrationResult r;
  r.field.values.resize(grid.size());
  std::size_t resolved = 0;
  const double lo = (phi.center - phi.width) / kd;
  const double hi = (phi.center + phi.width) / kd;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.centers[i];
    r.field.values[i] =
        u0[i] + scale * (phi.background + standard_bump(kd * x, phi.center, phi.width, phi.height));
    if (x > lo && x < hi) ++resolved;
  }
  if (resolved < 8) {
    r.warnings.push_back("support of phi(k x) covered by only " + std::to_string(resolved) +
                         " cells (k = " + std::to_string(k) + ")");
  }
  return r;
}

inline Field sample_base(const BaseProfile& p, const Grid& grid) {
  if (const auto* b = std::get_if<BumpProfile>(&p)) validate_bump(*b, grid.length());
  Field f;
  f.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = evaluate(p, grid.centers[i]);
  return f;
}

/// Samples any profile onto the grid. Concentration profiles use the
/// parameters' beta and kappa for the theta window.
inline ConcentrationResult sample_profile(const Profile& p, const Grid& grid,
                                          const ModelParameters& params) {
  ConcentrationResult r = std::visit(
      [&](const auto& q) -> ConcentrationResult {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, ConcentrationProfile>) {
          const Field base = sample_base(q.base, grid);
          return concentration_family(grid, base.values, q.k, q.theta, q.phi, params.beta,
                                      params.kappa);
        } else {
          return {sample_base(BaseProfile{q}, grid), {}};
        }
      },
      p);
  for (double v : r.field.values) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("initial data must be finite and nonnegative");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Regularization of rough initial data

struct RegularizationSchedule {
  std::vector<double> eps_sequence;
  std::vector<double> eta;
  std::vector<double> delta;
  double M = 0.0;   ///< sup u + 1
  double c1 = 0.0;  ///< max_j ( int (x + eps_j)^{-gamma} )^{1/2}
  std::vector<double> achieved_l2;  ///< || v_j - x^{gamma/2} u_x ||_2
  std::vector<double> required_l2;  ///< delta_j / (4 c1)
  std::vector<double> kernel_scale;  ///< mollifier scale in (0, 1]
  std::vector<double> gradient_energy;  ///< int (x + eps_j)^gamma u_jx^2 = int v_j^2
  double target_gradient_energy = 0.0;  ///< int x^gamma u_x^2
};

struct RegularizedData {
  std::vector<Field> fields;
  RegularizationSchedule schedule;
};

class RegularizationError : public std::runtime_error {
public:
  RegularizationError(std::size_t j, double achieved, double required)
      : std::runtime_error("mollifier cannot reach the L2 tolerance for j = " + std::to_string(j) +
                           ": achieved " + std::to_string(achieved) + ", required < " +
                           std::to_string(required)),
        index(j),
        achieved_l2(achieved),
        required_l2(required) {}
  std::size_t index;
  double achieved_l2;
  double required_l2;
};

namespace detail {

/// Gaussian smoothing of face samples followed by a taper to zero near both ends.
/// `scale` in (0, 1] sets the kernel width (5% of L) and the taper width (2% of L).
inline std::vector<double> mollify_faces(std::span<const double> xf, std::span<const double> hf,
                                         std::span<const double> target, double L, double scale) {
  const std::size_t m = xf.size();
  const double sigma = scale * 0.05 * L;
  const double taper = scale * 0.02 * L;
  std::vector<double> v(m);
  for (std::size_t f = 0; f < m; ++f) {
    const double reach = 4.0 * sigma;
    const auto first = std::lower_bound(xf.begin(), xf.end(), xf[f] - reach) - xf.begin();
    const auto last = std::upper_bound(xf.begin(), xf.end(), xf[f] + reach) - xf.begin();
    double num = 0.0;
    double den = 0.0;
    for (auto g = first; g < last; ++g) {
      const double d = (xf[f] - xf[static_cast<std::size_t>(g)]) / sigma;
      const double w = std::exp(-0.5 * d * d) * hf[static_cast<std::size_t>(g)];
      num += w * target[static_cast<std::size_t>(g)];
      den += w;
    }
    v[f] = den > 0.0 ? num / den : target[f];
    v[f] *= smooth_step(xf[f] / taper) * smooth_step((L - xf[f]) / taper);
  }
  return v;
}

}  // namespace detail

/// Builds, for each eps_j, the strictly positive profile
///   u_j(x) = u(0) + delta_j + int_0^x (y + eps_j)^{-gamma/2} v_j(y) dy
/// on the grid. All integrals are face quadratures with the centre spacings as
/// weights, so delta_j/2 <= u_j - u <= 3 delta_j/2 holds exactly at the centres.
inline RegularizedData regularize_initial_data(const Grid& grid, std::span<const double> u,
                                               std::span<const double> eps_sequence, double gamma,
                                               double beta) {
  if (u.size() != grid.size()) throw std::invalid_argument("regularize_initial_data: size mismatch");
  if (!(gamma < 1.0)) throw std::invalid_argument("regularize_initial_data: need gamma < 1");
  if (!(beta > -1.0)) throw std::invalid_argument("regularize_initial_data: need beta > -1");
  if (eps_sequence.empty()) throw std::invalid_argument("regularize_initial_data: empty eps sequence");
  for (std::size_t j = 0; j < eps_sequence.size(); ++j) {
    if (!(eps_sequence[j] > 0.0)) throw std::invalid_argument("regularize_initial_data: eps must be positive");
    if (j > 0 && !(eps_sequence[j] < eps_sequence[j - 1])) {
      throw std::invalid_argument("regularize_initial_data: eps sequence must decrease");
    }
  }
  for (double v : u) {
    if (!(v >= 0.0)) throw std::invalid_argument("regularize_initial_data: u must be nonnegative");
  }

  const std::size_t N = grid.size();
  const double L = grid.length();
  const std::size_t m = N - 1;
  std::vector<double> xf(m), hf(m), target(m), grad(m);
  for (std::size_t f = 0; f < m; ++f) {
    xf[f] = grid.faces[f + 1];
    hf[f] = grid.centers[f + 1] - grid.centers[f];
    grad[f] = (u[f + 1] - u[f]) / hf[f];
    target[f] = std::pow(xf[f], 0.5 * gamma) * grad[f];
  }

  RegularizedData out;
  auto& s = out.schedule;
  s.eps_sequence.assign(eps_sequence.begin(), eps_sequence.end());
  s.M = *std::max_element(u.begin(), u.end()) + 1.0;
  for (std::size_t f = 0; f < m; ++f) s.target_gradient_energy += hf[f] * target[f] * target[f];

  for (double eps : eps_sequence) {
    double sum = 0.0;
    for (std::size_t f = 0; f < m; ++f) sum += hf[f] * std::pow(xf[f] + eps, -gamma);
    s.c1 = std::max(s.c1, std::sqrt(sum));
  }

  for (std::size_t j = 0; j < eps_sequence.size(); ++j) {
    const double eps = eps_sequence[j];
    double shift_norm = 0.0;
    for (std::size_t f = 0; f < m; ++f) {
      const double d = std::pow(xf[f] + eps, -0.5 * gamma) - std::pow(xf[f], -0.5 * gamma);
      shift_norm += hf[f] * d * d;
    }
    const double eta = std::sqrt(shift_norm) * std::sqrt(s.target_gradient_energy);
    double delta = 4.0 * eta;
    if (beta > 0.0) delta = std::max(delta, 2.0 * s.M * std::exp(-std::pow(eps, -beta)));
    const double required = delta / (4.0 * s.c1);

    auto l2_error = [&](const std::vector<double>& v) {
      double e = 0.0;
      for (std::size_t f = 0; f < m; ++f) e += hf[f] * (v[f] - target[f]) * (v[f] - target[f]);
      return std::sqrt(e);
    };
    auto admissible = [&](double err) { return err == 0.0 || err < required; };

    // Largest kernel scale that still meets the tolerance.
    constexpr double min_scale = 1e-3;
    double lo = min_scale;
    std::vector<double> v = detail::mollify_faces(xf, hf, target, L, lo);
    double err = l2_error(v);
    if (!admissible(err)) throw RegularizationError(j, err, required);
    std::vector<double> v_hi = detail::mollify_faces(xf, hf, target, L, 1.0);
    if (const double e_hi = l2_error(v_hi); admissible(e_hi)) {
      lo = 1.0;
      v = std::move(v_hi);
      err = e_hi;
    } else {
      double hi = 1.0;
      for (int it = 0; it < 30; ++it) {
        const double mid = std::sqrt(lo * hi);
        auto vm = detail::mollify_faces(xf, hf, target, L, mid);
        const double em = l2_error(vm);
        if (admissible(em)) {
          lo = mid;
          v = std::move(vm);
          err = em;
        } else {
          hi = mid;
        }
      }
    }

    Field f;
    f.values.resize(N);
    f.values[0] = u[0] + delta;
    double energy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      f.values[k + 1] = f.values[k] + hf[k] * std::pow(xf[k] + eps, -0.5 * gamma) * v[k];
      energy += hf[k] * v[k] * v[k];
    }

    s.eta.push_back(eta);
    s.delta.push_back(delta);
    s.achieved_l2.push_back(err);
    s.required_l2.push_back(required);
    s.kernel_scale.push_back(lo);
    s.gradient_energy.push_back(energy);
    out.fields.push_back(std::move(f));
  }
  return out;
}

/// Face-quadrature value of int (x + shift)^gamma u_x^2 for a grid function.
inline double weighted_gradient_energy(const Grid& grid, std::span<const double> u, double gamma,
                                       double shift) {
  double e = 0.0;
  for (std::size_t f = 0; f + 1 < grid.size(); ++f) {
    const double h = grid.centers[f + 1] - grid.centers[f];
    const double d = (u[f + 1] - u[f]) / h;
    e += h * std::pow(grid.faces[f + 1] + shift, gamma) * d * d;
  }
  return e;
}

}  // namespace bec
