#pragma once

// Functionals tracked along a run (mass, energy, entropy, entropy production,
// the shifted moment y), the nonlinear Gronwall blow-up predictor and a probe
// for the super-linear integral inequality satisfied by y.

#include "bec/mesh.hpp"
#include "bec/paramspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace bec {

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  double mass = 0.0;                ///< sum (x+eps)^beta u dx
  double energy = 0.0;              ///< sum (x+eps)^{beta+1} u dx
  double entropy = 0.0;             ///< -sum (x+eps)^beta ln u dx, +inf if u touches the floor
  double entropy_production = 0.0;  ///< sum chi g u^{n-4} (u u_xx - 2 u_x^2)^2 dx
  double moment_y = 0.0;            ///< sum x^{beta-kappa} u dx
  double sup_norm = 0.0;
};

struct RecordSettings {
  double floor = 0.0;  ///< entropy is +inf if any u_i <= floor
  double u_tau = 0.0;  ///< cells with u <= u_tau do not contribute to the entropy production
};

/// g u^{n-4} (u u_xx - 2 u_x^2)^2 at one point.
inline double entropy_production_density(double g, double u, double ux, double uxx, double n) {
  const double s = u * uxx - 2.0 * ux * ux;
  return g * std::pow(u, n - 4.0) * s * s;
}

/// Evaluates all functionals of one grid function. Pure.
inline DiagnosticsRecord record(const Grid& grid, const WeightProfiles& weights,
                                const DifferenceOperators& ops, const ModelParameters& p,
                                std::span<const double> u, double t, double dt = 0.0,
                                RecordSettings settings = {}) {
  for (double v : u) {
    if (!(v >= 0.0)) throw std::invalid_argument("record: u must be nonnegative");
  }
  const double eps = p.epsilon;
  DiagnosticsRecord r;
  r.t = t;
  r.dt = dt;
  const auto w_mass = cell_weights(grid, p.beta, eps);
  const auto w_energy = cell_weights(grid, p.beta + 1.0, eps);
  const auto w_moment = cell_weights(grid, p.beta - p.kappa, 0.0);

  bool degenerate = false;
  double entropy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    r.mass += w_mass[i] * u[i];
    r.energy += w_energy[i] * u[i];
    r.moment_y += w_moment[i] * u[i];
    r.sup_norm = std::max(r.sup_norm, u[i]);
    if (u[i] <= settings.floor || u[i] <= 0.0) {
      degenerate = true;
    } else {
      entropy -= w_mass[i] * std::log(u[i]);
    }
  }
  r.entropy = degenerate ? std::numeric_limits<double>::infinity() : entropy;

  std::vector<double> ux(u.size()), uxx(u.size());
  ops.d1(u, ux);
  ops.d2(u, uxx);
  const auto g = weights.g();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] > settings.u_tau && u[i] > 0.0) {
      r.entropy_production +=
          grid.widths[i] * entropy_production_density(g[i], u[i], ux[i], uxx[i], p.n);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Nonlinear Gronwall lemma

/// y(t) >= a + b int_0^t (y - d)_+^m ds on [0, T] forces T < 2^m / ((m-1) b a^{m-1}).
struct GronwallInputs {
  double a = 1.0;
  double b = 1.0;
  double d = 0.0;
  double m = 2.0;
};

inline void validate(const GronwallInputs& g) {
  if (!(g.a > 0.0)) throw std::invalid_argument("gronwall: need a > 0");
  if (!(g.b > 0.0)) throw std::invalid_argument("gronwall: need b > 0");
  if (!(g.d >= 0.0)) throw std::invalid_argument("gronwall: need d >= 0");
  if (!(g.m > 1.0)) throw std::invalid_argument("gronwall: need m > 1");
  if (!(g.a > 2.0 * g.d)) throw std::invalid_argument("gronwall: hypothesis a > 2d violated");
}

inline double gronwall_bound(const GronwallInputs& g) {
  validate(g);
  return std::pow(2.0, g.m) / ((g.m - 1.0) * g.b * std::pow(g.a, g.m - 1.0));
}

/// Integrates the comparison problem z' = 2^{-m} b z^m, z(0) = a with RK4 and
/// returns the time at which z first exceeds `z_cap`. The step is
/// min(dt, 0.05 z / z') so the final approach takes O(log z_cap) steps.
inline double gronwall_ode_oracle(const GronwallInputs& g, double dt, double z_cap = 1e12) {
  validate(g);
  if (!(dt > 0.0)) throw std::invalid_argument("gronwall_ode_oracle: dt must be positive");
  const double c = std::pow(2.0, -g.m) * g.b;
  auto rate = [&](double z) { return c * std::pow(z, g.m); };
  double t = 0.0;
  double z = g.a;
  for (long step = 0; step < 100000000L; ++step) {
    const double h = std::min(dt, 0.05 * z / rate(z));
    const double k1 = rate(z);
    const double k2 = rate(z + 0.5 * h * k1);
    const double k3 = rate(z + 0.5 * h * k2);
    const double k4 = rate(z + h * k3);
    const double z_next = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(z_next) || z_next >= z_cap) {
      if (!std::isfinite(z_next)) return t + h;
      return t + h * (z_cap - z) / (z_next - z);
    }
    z = z_next;
    t += h;
  }
  throw std::runtime_error("gronwall_ode_oracle: no crossing within step budget");
}

// ---------------------------------------------------------------------------
// Moment inequality probe

struct MomentMonitorReport {
  double a_hat = 0.0;    ///< y(0) - offset: effective constant term
  double c3b_hat = 0.0;  ///< threshold C3 B used inside (y - C3 B)_+^{n+1}
  double c2_hat = 0.0;   ///< least-squares coefficient of the cumulative integral
  double offset = 0.0;   ///< smallest offset making y - y0 >= c2 I - offset on the window
  bool satisfied = false;
  bool monotone = false;  ///< y nondecreasing over the window
  bool convex = false;    ///< mean second difference of y positive
  std::size_t samples = 0;
};

/// Fits y(t) - y(0) ~ C2 int_0^t (y - C3B)_+^{n+1} ds - offset over the samples
/// with t in [t_begin, t_end]. C3B = c3b_multiple * mass(0). The cumulative
/// integral runs from the first record by the trapezoid rule. `satisfied`
/// means the needed offset is at most offset_tolerance * (1 + |y(0)|).
inline MomentMonitorReport moment_inequality_monitor(std::span<const DiagnosticsRecord> traj,
                                                     double n, double t_begin, double t_end,
                                                     double c3b_multiple = 1.0,
                                                     double offset_tolerance = 0.05) {
  if (traj.empty()) throw std::invalid_argument("moment monitor: empty trajectory");
  MomentMonitorReport r;
  r.c3b_hat = c3b_multiple * traj.front().mass;
  const double y0 = traj.front().moment_y;

  std::vector<double> cumulative(traj.size(), 0.0);
  auto integrand = [&](double y) { return std::pow(std::max(0.0, y - r.c3b_hat), n + 1.0); };
  for (std::size_t i = 1; i < traj.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + 0.5 * (traj[i].t - traj[i - 1].t) *
                                            (integrand(traj[i].moment_y) + integrand(traj[i - 1].moment_y));
  }

  std::vector<double> I, dy, tt;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj[i].t >= t_begin && traj[i].t <= t_end) {
      I.push_back(cumulative[i]);
      dy.push_back(traj[i].moment_y - y0);
      tt.push_back(traj[i].t);
    }
  }
  r.samples = I.size();
  if (r.samples < 10) throw std::invalid_argument("moment monitor: window needs at least 10 samples");

  const double k = static_cast<double>(r.samples);
  double mi = 0.0, md = 0.0;
  for (std::size_t i = 0; i < I.size(); ++i) {
    mi += I[i] / k;
    md += dy[i] / k;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < I.size(); ++i) {
    sxx += (I[i] - mi) * (I[i] - mi);
    sxy += (I[i] - mi) * (dy[i] - md);
  }
  r.c2_hat = sxx > 0.0 ? std::max(0.0, sxy / sxx) : 0.0;
  r.offset = 0.0;
  for (std::size_t i = 0; i < I.size(); ++i) r.offset = std::max(r.offset, r.c2_hat * I[i] - dy[i]);
  r.a_hat = y0 - r.offset;
  r.satisfied = r.offset <= offset_tolerance * (1.0 + std::abs(y0));

  r.monotone = true;
  for (std::size_t i = 1; i < dy.size(); ++i) {
    if (dy[i] < dy[i - 1]) r.monotone = false;
  }
  double second = 0.0;
  for (std::size_t i = 1; i + 1 < dy.size(); ++i) {
    const double h1 = tt[i] - tt[i - 1];
    const double h2 = tt[i + 1] - tt[i];
    second += ((dy[i + 1] - dy[i]) / h2 - (dy[i] - dy[i - 1]) / h1) / (0.5 * (h1 + h2));
  }
  r.convex = second > 0.0;
  return r;
}

}  // namespace bec
