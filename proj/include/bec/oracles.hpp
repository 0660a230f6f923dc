#pragma once

// Numeric oracles for the weighted interpolation inequalities that underpin
// the blow-up argument, evaluated on piecewise-linear nonnegative functions,
// plus the random corpus used to fuzz them.

#include "bec/paramspace.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bec {

/// Continuous nonnegative function, linear between knots; knots span [0, L].
struct PiecewiseLinear {
  std::vector<double> x;
  std::vector<double> u;

  [[nodiscard]] double operator()(double s) const {
    if (s <= x.front()) return u.front();
    if (s >= x.back()) return u.back();
    const auto j = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), s) - x.begin());
    const double t = (s - x[j - 1]) / (x[j] - x[j - 1]);
    return (1.0 - t) * u[j - 1] + t * u[j];
  }
};

inline PiecewiseLinear sample_function(const std::function<double(double)>& f, double L,
                                       std::size_t segments) {
  PiecewiseLinear p;
  p.x.resize(segments + 1);
  p.u.resize(segments + 1);
  for (std::size_t k = 0; k <= segments; ++k) {
    p.x[k] = L * static_cast<double>(k) / static_cast<double>(segments);
    p.u[k] = f(p.x[k]);
  }
  return p;
}

namespace detail {

/// sum over segments of int_{x_k}^{x_{k+1}} h(x, u(x), u_x) dx, clipped to [a, b],
/// with 20-point Gauss-Legendre per segment.
template <typename Integrand>
double integrate_segments(const PiecewiseLinear& f, double a, double b, Integrand h) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < f.x.size(); ++k) {
    const double lo = std::max(a, f.x[k]);
    const double hi = std::min(b, f.x[k + 1]);
    if (!(hi > lo)) continue;
    const double slope = (f.u[k + 1] - f.u[k]) / (f.x[k + 1] - f.x[k]);
    total += Rule::integrate(
        [&](double s) {
          const double us = f.u[k] + slope * (s - f.x[k]);
          return h(s, std::max(us, 0.0), slope);
        },
        lo, hi);
  }
  return total;
}

/// Exact int_a^b x^p (c0 + c1 x) dx for p > -1.
inline double weighted_linear(double a, double b, double p, double c0, double c1) {
  auto prim = [&](double s) {
    return c0 * std::pow(s, p + 1.0) / (p + 1.0) + c1 * std::pow(s, p + 2.0) / (p + 2.0);
  };
  return prim(b) - prim(a);
}

}  // namespace detail

/// Exact int_0^L x^p u for piecewise-linear u, p > -1.
inline double weighted_mass(const PiecewiseLinear& f, double p) {
  if (!(p > -1.0)) throw std::invalid_argument("weighted_mass: need p > -1");
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < f.x.size(); ++k) {
    const double slope = (f.u[k + 1] - f.u[k]) / (f.x[k + 1] - f.x[k]);
    const double c0 = f.u[k] - slope * f.x[k];
    s += detail::weighted_linear(f.x[k], f.x[k + 1], p, c0, slope);
  }
  return s;
}

struct PointwiseResult {
  double x0 = 0.0;
  double value = 0.0;  ///< u(x0)
  double bound = 0.0;  ///< C int x^beta u
  bool ok = false;
};

/// There is x0 in (L/2, L) with u(x0) <= C int x^beta u, C = (int_{L/2}^L x^beta)^{-1}.
/// The minimum of a piecewise-linear function over [L/2, L] sits at a knot or an end.
inline PointwiseResult oracle_pointwise(const PiecewiseLinear& f, double beta) {
  const double L = f.x.back();
  const double C = 1.0 / detail::weighted_linear(L / 2.0, L, beta, 1.0, 0.0);
  PointwiseResult r;
  r.bound = C * weighted_mass(f, beta);
  r.x0 = L / 2.0;
  r.value = f(L / 2.0);
  for (std::size_t k = 0; k < f.x.size(); ++k) {
    if (f.x[k] > L / 2.0 && f.x[k] <= L && f.u[k] < r.value) {
      r.value = f.u[k];
      r.x0 = f.x[k];
    }
  }
  r.ok = r.value <= r.bound * (1.0 + 1e-12) + 1e-300;
  return r;
}

struct InequalityResult {
  double lhs = 0.0;
  double rhs = 0.0;             ///< right side with the needed constant set to 1
  double needed_constant = 0.0; ///< smallest C making the inequality hold for this function
  bool ok = false;              ///< needed constant finite
};

/// int x^{beta-kappa} u <= C int x^beta u + C (int chi x^{alpha-kappa-2} u^{n-1} u_x^2)^{1/(n+1)}.
inline InequalityResult oracle_moment_interpolation(const PiecewiseLinear& f, const ModelParameters& p) {
  const double bound = std::min({p.alpha - 3.0, p.beta + 1.0,
                                 (-p.alpha + (p.n + 1.0) * p.beta + p.n + 4.0) / p.n});
  if (!(p.kappa < bound) || !(p.n > -1.0)) {
    throw std::invalid_argument("oracle_moment_interpolation: kappa violates the admissibility bound");
  }
  const double L = f.x.back();
  InequalityResult r;
  r.lhs = weighted_mass(f, p.beta - p.kappa);
  const double B = weighted_mass(f, p.beta);
  const double G = detail::integrate_segments(f, 0.0, L, [&](double x, double u, double ux) {
    return u > 0.0 ? std::pow(x, p.alpha - p.kappa - 2.0) * std::pow(u, p.n - 1.0) * ux * ux : 0.0;
  });
  r.rhs = B + std::pow(G, 1.0 / (p.n + 1.0));
  r.needed_constant = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
  r.ok = std::isfinite(r.needed_constant);
  return r;
}

/// int x^{alpha-4} u^n <= eta int chi x^alpha u^{n-4} u_x^4 + C(eta) (int x^beta u)^n.
inline InequalityResult oracle_power_absorption(const PiecewiseLinear& f, const ModelParameters& p,
                                       double eta) {
  if (!(p.beta <= beta_upper(p))) throw std::invalid_argument("oracle_power_absorption: need beta <= (alpha-n-3)/n");
  if (!(eta > 0.0)) throw std::invalid_argument("oracle_power_absorption: eta must be positive");
  const double L = f.x.back();
  InequalityResult r;
  r.lhs = detail::integrate_segments(f, 0.0, L, [&](double x, double u, double) {
    return std::pow(x, p.alpha - 4.0) * std::pow(u, p.n);
  });
  const double Q = detail::integrate_segments(f, 0.0, L, [&](double x, double u, double ux) {
    return u > 0.0 ? std::pow(x, p.alpha) * std::pow(u, p.n - 4.0) * std::pow(ux, 4.0) : 0.0;
  });
  const double Bn = std::pow(weighted_mass(f, p.beta), p.n);
  r.rhs = eta * Q + Bn;
  const double excess = r.lhs - eta * Q;
  r.needed_constant = excess <= 0.0 ? 0.0 : (Bn > 0.0 ? excess / Bn : std::numeric_limits<double>::infinity());
  r.ok = std::isfinite(r.needed_constant);
  return r;
}

/// On [a, b]: int u^p <= C { (int u)^{(n+3p)/(n+3)} (int chi u^{n-4} u_x^4)^{(p-1)/(n+3)} + (int u)^p }.
inline InequalityResult oracle_local_lp(const PiecewiseLinear& f, double n, double p, double a,
                                       double b) {
  if (!(p > 1.0) || !(n > 0.0)) throw std::invalid_argument("oracle_local_lp: need p > 1, n > 0");
  if (!(b > a)) throw std::invalid_argument("oracle_local_lp: empty subinterval");
  InequalityResult r;
  r.lhs = detail::integrate_segments(f, a, b, [&](double, double u, double) { return std::pow(u, p); });
  const double U = detail::integrate_segments(f, a, b, [](double, double u, double) { return u; });
  const double Q = detail::integrate_segments(f, a, b, [&](double, double u, double ux) {
    return u > 0.0 ? std::pow(u, n - 4.0) * std::pow(ux, 4.0) : 0.0;
  });
  r.rhs = std::pow(U, (n + 3.0 * p) / (n + 3.0)) * std::pow(Q, (p - 1.0) / (n + 3.0)) + std::pow(U, p);
  r.needed_constant = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
  r.ok = std::isfinite(r.needed_constant);
  return r;
}

// ---------------------------------------------------------------------------
// Fuzz corpus

/// Random nonnegative piecewise-linear functions on [0, L]: rough random knots
/// with occasional zero stretches, sums of smooth bumps, and profiles
/// concentrated near the origin.
inline std::vector<PiecewiseLinear> fuzz_corpus(std::size_t count, double L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PiecewiseLinear> corpus;
  corpus.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const int kind = static_cast<int>(c % 3);
    PiecewiseLinear f;
    if (kind == 0) {
      const std::size_t knots = 8 + static_cast<std::size_t>(unit(rng) * 40.0);
      f.x.push_back(0.0);
      for (std::size_t k = 1; k + 1 < knots; ++k) f.x.push_back(L * unit(rng));
      f.x.push_back(L);
      std::sort(f.x.begin(), f.x.end());
      f.x.erase(std::unique(f.x.begin(), f.x.end()), f.x.end());
      for (std::size_t k = 0; k < f.x.size(); ++k) {
        f.u.push_back(unit(rng) < 0.2 ? 0.0 : std::exp(4.0 * (unit(rng) - 0.5)));
      }
    } else if (kind == 1) {
      const int bumps = 1 + static_cast<int>(unit(rng) * 4.0);
      std::vector<double> centers, widths, heights;
      for (int q = 0; q < bumps; ++q) {
        centers.push_back(L * unit(rng));
        widths.push_back(L * (0.02 + 0.3 * unit(rng)));
        heights.push_back(std::exp(3.0 * (unit(rng) - 0.5)));
      }
      const double floor = unit(rng) < 0.5 ? 0.0 : 0.1 * unit(rng);
      f = sample_function(
          [&](double x) {
            double v = floor;
            for (int q = 0; q < bumps; ++q) {
              const double s = (x - centers[q]) / widths[q];
              if (std::abs(s) < 1.0) v += heights[q] * (1.0 - s * s) * (1.0 - s * s);
            }
            return v;
          },
          L, 64);
    } else {
      const double k = std::pow(2.0, 1.0 + 5.0 * unit(rng));
      const double height = std::pow(k, 0.5 + unit(rng));
      const double base = 0.05 + unit(rng);
      f = sample_function(
          [&](double x) {
            const double s = (k * x - 0.5 * L) / (0.25 * L);
            return base + (std::abs(s) < 1.0 ? height * (1.0 - s * s) * (1.0 - s * s) : 0.0);
          },
          L, 256);
    }
    corpus.push_back(std::move(f));
  }
  return corpus;
}

struct OracleRow {
  std::size_t id = 0;
  std::string inequality;
  double lhs = 0.0;
  double rhs = 0.0;
  double needed_constant = 0.0;
  bool ok = false;
};

struct FuzzSummary {
  std::vector<OracleRow> rows;
  std::size_t pointwise_violations = 0;
  double moment_max = 0.0;
  double absorption_max = 0.0;
  double local_max = 0.0;
  bool all_finite = true;
};

struct FuzzOptions {
  std::size_t count = 1000;
  std::uint64_t seed = 20140101;
  double eta = 1.0;      ///< eta of the absorption inequality
  double p_local = 2.0;      ///< exponent p of the local inequality
  double sub_a = 0.25;   ///< local-inequality subinterval as fractions of L
  double sub_b = 0.75;
};

inline FuzzSummary fuzz_oracles(const ModelParameters& p, const FuzzOptions& opt = {}) {
  FuzzSummary s;
  const auto corpus = fuzz_corpus(opt.count, p.L, opt.seed);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& f = corpus[i];
    const auto r99 = oracle_pointwise(f, p.beta);
    if (!r99.ok) ++s.pointwise_violations;
    s.rows.push_back({i, "pointwise", r99.value, r99.bound, 0.0, r99.ok});

    const auto r50 = oracle_moment_interpolation(f, p);
    const auto r20 = oracle_power_absorption(f, p, opt.eta);
    const auto r51 = oracle_local_lp(f, p.n, opt.p_local, opt.sub_a * p.L, opt.sub_b * p.L);
    s.rows.push_back({i, "moment", r50.lhs, r50.rhs, r50.needed_constant, r50.ok});
    s.rows.push_back({i, "absorption", r20.lhs, r20.rhs, r20.needed_constant, r20.ok});
    s.rows.push_back({i, "local", r51.lhs, r51.rhs, r51.needed_constant, r51.ok});
    s.all_finite = s.all_finite && r50.ok && r20.ok && r51.ok;
    s.moment_max = std::max(s.moment_max, r50.needed_constant);
    s.absorption_max = std::max(s.absorption_max, r20.needed_constant);
    s.local_max = std::max(s.local_max, r51.needed_constant);
  }
  return s;
}

inline void write_oracle_csv(std::ostream& os, const FuzzSummary& s) {
  os.precision(17);
  os << "id,inequality,lhs,rhs,needed_constant,ok\n";
  for (const auto& r : s.rows) {
    os << r.id << ',' << r.inequality << ',' << r.lhs << ',' << r.rhs << ',' << r.needed_constant << ','
       << (r.ok ? 1 : 0) << '\n';
  }
}

}  // namespace bec
