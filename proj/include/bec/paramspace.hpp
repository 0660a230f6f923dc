#pragma once

// Model parameters of the degenerate fourth-order condensation equation
//
//   u_t = x^{-beta} ( x^alpha u^{n+2} (1/u)_xx )_xx   on (0, L)
//
// and the admissibility windows under which local existence of entropy
// solutions and finite-time blow-up are known to hold.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bec {

struct ModelParameters {
  double n = 2.0;       ///< nonlinearity exponent
  double alpha = 6.5;   ///< energy-weight exponent
  double beta = 0.5;    ///< measure-weight exponent
  std::optional<double> gamma;  ///< Sobolev weight of the initial data
  double kappa = 0.4;   ///< moment shift
  double L = 1.0;       ///< domain length
  double epsilon = 1e-3;  ///< regularization, 0 selects the limit problem
};

enum class AdmissibilityMode { existence, blowup };

struct Violation {
  std::string constraint;  ///< e.g. "alpha>n+4"
  double value;            ///< offending value of the constrained quantity
};

struct AdmissibilityReport {
  bool existence_ok = false;
  bool blowup_ok = false;
  double kappa_max = 0.0;
  AdmissibilityMode mode = AdmissibilityMode::existence;
  std::vector<Violation> violated;

  [[nodiscard]] bool ok() const {
    return mode == AdmissibilityMode::existence ? existence_ok : blowup_ok;
  }
};

/// Value of the cubic n^3 + 5n^2 + 16n - 40 whose positive root bounds n from below.
constexpr double nstar_polynomial(double n) {
  return ((n + 5.0) * n + 16.0) * n - 40.0;
}

/// Unique positive root of n^3 + 5n^2 + 16n - 40, by bisection on [1, 2].
/// The cubic is strictly increasing on (0, inf), so the bracket is unique.
inline double compute_nstar() {
  double lo = 1.0;
  double hi = 2.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double p = nstar_polynomial(mid);
    if (p == 0.0) return mid;
    if (p < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(nstar_polynomial(lo)) <= std::abs(nstar_polynomial(hi)) ? lo : hi;
}

/// Upper bound for the moment shift kappa:
/// min{(alpha-3)/2, alpha-n-4, beta+1, (-alpha+(n+1)beta+n+4)/n}.
inline double kappa_upper_bound(const ModelParameters& p) {
  if (p.n == 0.0) throw std::invalid_argument("kappa_upper_bound: n must be nonzero");
  return std::min({(p.alpha - 3.0) / 2.0, p.alpha - p.n - 4.0, p.beta + 1.0,
                   (-p.alpha + (p.n + 1.0) * p.beta + p.n + 4.0) / p.n});
}

/// Upper end (closed) of the beta window shared by the existence and blow-up checks.
inline double beta_upper(const ModelParameters& p) { return (p.alpha - p.n - 3.0) / p.n; }

/// Open lower end of the beta window required for blow-up.
inline double beta_lower_blowup(const ModelParameters& p) {
  return (p.alpha - p.n - 4.0) / (p.n + 1.0);
}

namespace detail {

struct ConstraintSink {
  std::vector<Violation>* out;
  bool all = true;
  void require(bool holds, const char* name, double value) {
    if (!holds) {
      all = false;
      if (out != nullptr) out->push_back({name, value});
    }
  }
};

inline void check_common(const ModelParameters& p, ConstraintSink& s) {
  s.require(p.L > 0.0, "L>0", p.L);
  s.require(p.epsilon >= 0.0, "epsilon>=0", p.epsilon);
  const double eps0 = p.L > 0.0 ? std::min(1.0, std::sqrt(p.L / 2.0)) : 0.0;
  s.require(p.epsilon < eps0, "epsilon<eps0", p.epsilon);
}

inline void check_existence(const ModelParameters& p, double nstar, ConstraintSink& s) {
  s.require(p.n > nstar, "n>n*", p.n);
  s.require(p.n < 3.0, "n<3", p.n);
  s.require(p.alpha > 3.0, "alpha>3", p.alpha);
  s.require(p.beta > -1.0, "beta>-1", p.beta);
  s.require(p.n != 0.0 && p.beta <= beta_upper(p), "beta<=(alpha-n-3)/n", p.beta);
  if (p.gamma) {
    s.require(*p.gamma > 5.0 - p.alpha + p.beta, "gamma>5-alpha+beta", *p.gamma);
    s.require(*p.gamma < 1.0, "gamma<1", *p.gamma);
  } else {
    s.require(false, "gamma required", std::nan(""));
  }
}

inline void check_blowup(const ModelParameters& p, double nstar, double kappa_max,
                         ConstraintSink& s) {
  s.require(p.n > nstar, "n>n*", p.n);
  s.require(p.n < 3.0, "n<3", p.n);
  s.require(p.alpha > p.n + 4.0, "alpha>n+4", p.alpha);
  s.require(p.beta > beta_lower_blowup(p), "beta>(alpha-n-4)/(n+1)", p.beta);
  s.require(p.n != 0.0 && p.beta <= beta_upper(p), "beta<=(alpha-n-3)/n", p.beta);
  s.require(p.kappa > 0.0, "kappa>0", p.kappa);
  s.require(p.kappa < kappa_max, "kappa<kappa_max", p.kappa);
  // gamma only matters when the solution is to be extended up to blow-up.
  if (p.gamma) {
    s.require(*p.gamma > 5.0 - p.alpha + p.beta, "gamma>5-alpha+beta", *p.gamma);
    s.require(*p.gamma < 1.0, "gamma<1", *p.gamma);
  }
}

}  // namespace detail

/// Lists every violated constraint of the requested regime. Never throws.
inline AdmissibilityReport check_admissibility(const ModelParameters& p, AdmissibilityMode mode) {
  AdmissibilityReport r;
  r.mode = mode;
  const double nstar = compute_nstar();
  r.kappa_max = p.n != 0.0 ? kappa_upper_bound(p) : std::nan("");

  std::vector<Violation> common, existence, blowup;
  detail::ConstraintSink c{&common};
  detail::check_common(p, c);
  detail::ConstraintSink e{&existence};
  detail::check_existence(p, nstar, e);
  detail::ConstraintSink b{&blowup};
  detail::check_blowup(p, nstar, r.kappa_max, b);

  r.existence_ok = c.all && e.all;
  r.blowup_ok = c.all && b.all;
  r.violated = std::move(common);
  const auto& specific = mode == AdmissibilityMode::existence ? existence : blowup;
  r.violated.insert(r.violated.end(), specific.begin(), specific.end());
  return r;
}

inline const char* to_string(AdmissibilityMode m) {
  return m == AdmissibilityMode::existence ? "existence" : "blowup";
}

}  // namespace bec
