#pragma once

// Mass-conservative implicit finite-volume scheme for the regularized problem
//
//   u_t = (x+eps)^{-beta} J_xx,   J = g_eps u^{n+2} (1/u)_xx
//                                   = -g_eps u^n u_xx + 2 g_eps u^{n-1} u_x^2,
//   u_x = u_xxx = 0 and J_x = 0 on both ends,
//
// with damped Newton on a colored finite-difference Jacobian, step-doubling
// time adaptivity and blow-up detection.

#include "bec/diagnostics.hpp"
#include "bec/mesh.hpp"
#include "bec/paramspace.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bec {

enum class FluxForm {
  entropic,  ///< g u^{n+2} Lap(1/u): the discrete entropy is dissipated exactly
  expanded,  ///< -g u^n D2u + 2 g u^{n-1} (D1u)^2
};

enum class TimeScheme { implicit_euler, trapezoidal };

enum class StepFailure { none, newton_divergence, positivity };

enum class BlowupTrigger { supnorm_exceeded, dt_underflow, newton_divergence };

inline const char* to_string(BlowupTrigger t) {
  switch (t) {
    case BlowupTrigger::supnorm_exceeded: return "supnorm_exceeded";
    case BlowupTrigger::dt_underflow: return "dt_underflow";
    case BlowupTrigger::newton_divergence: return "newton_divergence";
  }
  return "unknown";
}

inline const char* to_string(StepFailure f) {
  switch (f) {
    case StepFailure::none: return "none";
    case StepFailure::newton_divergence: return "newton_divergence";
    case StepFailure::positivity: return "positivity";
  }
  return "unknown";
}

struct SolverSettings {
  FluxForm flux = FluxForm::entropic;
  TimeScheme scheme = TimeScheme::implicit_euler;
  double newton_tolerance = 1e-10;  ///< residual max-norm <= tol * (1 + sup|u|)
  int max_newton_iterations = 30;
  double positivity_floor = 1e-12;  ///< absolute floor; steps undershooting it are rejected
};

struct State {
  Field u;
  double dt = 0.0;
  std::int64_t step_count = 0;

  [[nodiscard]] double t() const { return u.time; }
};

struct StepOutcome {
  bool accepted = false;
  int newton_iterations = 0;
  double residual = 0.0;
  double dt_next = 0.0;
  StepFailure failure = StepFailure::none;
};

struct StepResult {
  StepOutcome outcome;
  State state;  ///< the input state unchanged when the step is rejected
};

struct BlowupEvent {
  bool detected = false;
  double t_event = 0.0;
  BlowupTrigger trigger = BlowupTrigger::supnorm_exceeded;
  double sup_norm_at_event = 0.0;
  double argmax_x = 0.0;  ///< location of the maximum at the event (logged only)
};

/// Spatial discretization bound to one grid and parameter set.
class Discretization {
public:
  Discretization(Grid grid, const ModelParameters& params, SolverSettings settings = {})
      : grid_(std::move(grid)),
        params_(params),
        settings_(settings),
        weights_(grid_, params.epsilon, params.alpha),
        ops_(grid_),
        mass_weights_(cell_weights(grid_, params.beta, params.epsilon)) {
    inv_density_.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) inv_density_[i] = grid_.widths[i] / mass_weights_[i];
  }

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const ModelParameters& params() const { return params_; }
  [[nodiscard]] const SolverSettings& settings() const { return settings_; }
  [[nodiscard]] const WeightProfiles& weights() const { return weights_; }
  [[nodiscard]] const DifferenceOperators& ops() const { return ops_; }
  [[nodiscard]] std::span<const double> mass_weights() const { return mass_weights_; }
  [[nodiscard]] std::size_t size() const { return grid_.size(); }

  /// Expanded flux -g u^n D2u + 2 g u^{n-1} (D1u)^2 at the centres.
  void flux_expanded(std::span<const double> u, std::span<double> J) const {
    const std::size_t N = size();
    std::vector<double> ux(N), uxx(N);
    ops_.d1(u, ux);
    ops_.d2(u, uxx);
    const auto g = weights_.g();
    const double n = params_.n;
    for (std::size_t i = 0; i < N; ++i) {
      J[i] = -g[i] * std::pow(u[i], n) * uxx[i] + 2.0 * g[i] * std::pow(u[i], n - 1.0) * ux[i] * ux[i];
    }
  }

  /// Entropy-structured flux g u^{n+2} Lap(1/u) at the centres.
  void flux_entropic(std::span<const double> u, std::span<double> J) const {
    const std::size_t N = size();
    std::vector<double> w(N), lw(N);
    for (std::size_t i = 0; i < N; ++i) w[i] = 1.0 / u[i];
    ops_.laplacian(w, lw);
    const auto g = weights_.g();
    const double n = params_.n;
    for (std::size_t i = 0; i < N; ++i) J[i] = g[i] * std::pow(u[i], n + 2.0) * lw[i];
  }

  void flux(std::span<const double> u, std::span<double> J) const {
    if (settings_.flux == FluxForm::entropic) {
      flux_entropic(u, J);
    } else {
      flux_expanded(u, J);
    }
  }

  /// (x+eps)^{-beta} times the flux-difference Laplacian of J with J_x = 0 on
  /// the boundary faces; sum_i mass_weight_i rhs_i vanishes identically.
  void rhs(std::span<const double> u, std::span<double> out) const {
    const std::size_t N = size();
    std::vector<double> J(N);
    flux(u, J);
    ops_.laplacian(J, out);
    for (std::size_t i = 0; i < N; ++i) out[i] *= inv_density_[i];
  }

  [[nodiscard]] std::vector<double> rhs(std::span<const double> u) const {
    std::vector<double> out(size());
    rhs(u, out);
    return out;
  }

  [[nodiscard]] double mass(std::span<const double> u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += mass_weights_[i] * u[i];
    return s;
  }

  /// One theta-scheme step u - dt*theta*rhs(u) = u_old + dt*(1-theta)*rhs(u_old),
  /// solved by damped Newton. Never mutates `state`.
  [[nodiscard]] StepResult implicit_step(const State& state, double dt) const {
    if (!(dt > 0.0)) throw std::invalid_argument("implicit_step: dt must be positive");
    const std::size_t N = size();
    const auto& u_old = state.u.values;
    const double theta = settings_.scheme == TimeScheme::implicit_euler ? 1.0 : 0.5;

    std::vector<double> base(u_old);
    if (theta < 1.0) {
      const auto r_old = rhs(u_old);
      for (std::size_t i = 0; i < N; ++i) base[i] += dt * (1.0 - theta) * r_old[i];
    }

    StepResult res{{}, state};
    res.outcome.dt_next = dt;

    double sup_old = 0.0;
    for (double v : u_old) sup_old = std::max(sup_old, std::abs(v));
    const double tol = settings_.newton_tolerance * (1.0 + sup_old);

    std::vector<double> u(u_old);
    std::vector<double> F(N);
    auto residual = [&](std::span<const double> v, std::span<double> out) {
      rhs(v, out);
      double r = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        out[i] = v[i] - dt * theta * out[i] - base[i];
        if (!std::isfinite(out[i])) return std::numeric_limits<double>::infinity();
        r = std::max(r, std::abs(out[i]));
      }
      return r;
    };

    double r = residual(u, F);
    int it = 0;
    std::vector<double> delta(N), trial(N), F_trial(N);
    while (!(r <= tol)) {
      if (it >= settings_.max_newton_iterations || !std::isfinite(r)) {
        res.outcome.failure = StepFailure::newton_divergence;
        res.outcome.newton_iterations = it;
        res.outcome.residual = r;
        res.outcome.dt_next = 0.5 * dt;
        res.state = state;
        return res;
      }
      ++it;
      if (!newton_direction(u, F, dt * theta, delta)) {
        res.outcome.failure = StepFailure::newton_divergence;
        res.outcome.newton_iterations = it;
        res.outcome.residual = r;
        res.outcome.dt_next = 0.5 * dt;
        return res;
      }
      double lambda = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
        bool positive = true;
        for (std::size_t i = 0; i < N; ++i) {
          trial[i] = u[i] + lambda * delta[i];
          if (!(trial[i] > settings_.positivity_floor)) positive = false;
        }
        if (!positive) continue;
        const double rt = residual(trial, F_trial);
        if (rt <= tol || rt < (1.0 - 1e-4 * lambda) * r) {
          u.swap(trial);
          F.swap(F_trial);
          r = rt;
          moved = true;
          break;
        }
      }
      if (!moved) {
        res.outcome.failure = StepFailure::newton_divergence;
        res.outcome.newton_iterations = it;
        res.outcome.residual = r;
        res.outcome.dt_next = 0.5 * dt;
        return res;
      }
    }

    for (double v : u) {
      if (!(v >= settings_.positivity_floor) || !std::isfinite(v)) {
        res.outcome.failure = StepFailure::positivity;
        res.outcome.newton_iterations = it;
        res.outcome.residual = r;
        res.outcome.dt_next = 0.5 * dt;
        return res;
      }
    }
    res.outcome.accepted = true;
    res.outcome.newton_iterations = it;
    res.outcome.residual = r;
    res.state.u.values = std::move(u);
    res.state.u.time = state.u.time + dt;
    res.state.dt = dt;
    res.state.step_count = state.step_count + 1;
    return res;
  }

  /// Banded Jacobian of rhs by finite differences with five colors; rhs_i
  /// depends on u_{i-2..i+2}.
  [[nodiscard]] Eigen::SparseMatrix<double> rhs_jacobian(std::span<const double> u) const {
    const std::size_t N = size();
    constexpr std::size_t colors = 5;
    constexpr std::size_t half_band = 2;
    const auto r0 = rhs(u);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(N * colors);
    std::vector<double> up(u.begin(), u.end());
    std::vector<double> r1(N);
    std::vector<double> h(N);
    for (std::size_t c = 0; c < colors; ++c) {
      for (std::size_t j = c; j < N; j += colors) {
        h[j] = 1e-7 * std::max(std::abs(u[j]), settings_.positivity_floor);
        up[j] = u[j] + h[j];
        h[j] = up[j] - u[j];
      }
      rhs(up, r1);
      for (std::size_t j = c; j < N; j += colors) {
        const std::size_t lo = j >= half_band ? j - half_band : 0;
        const std::size_t hi = std::min(N - 1, j + half_band);
        for (std::size_t i = lo; i <= hi; ++i) {
          entries.emplace_back(static_cast<int>(i), static_cast<int>(j), (r1[i] - r0[i]) / h[j]);
        }
        up[j] = u[j];
      }
    }
    Eigen::SparseMatrix<double> A(static_cast<int>(N), static_cast<int>(N));
    A.setFromTriplets(entries.begin(), entries.end());
    return A;
  }

private:
  bool newton_direction(std::span<const double> u, std::span<const double> F, double scale,
                        std::span<double> delta) const {
    const int N = static_cast<int>(size());
    Eigen::SparseMatrix<double> A = rhs_jacobian(u);
    A *= -scale;
    for (int i = 0; i < N; ++i) A.coeffRef(i, i) += 1.0;
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) return false;
    Eigen::VectorXd b(N);
    for (int i = 0; i < N; ++i) b[i] = -F[static_cast<std::size_t>(i)];
    const Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success) return false;
    for (int i = 0; i < N; ++i) {
      if (!std::isfinite(x[i])) return false;
      delta[static_cast<std::size_t>(i)] = x[i];
    }
    return true;
  }

  Grid grid_;
  ModelParameters params_;
  SolverSettings settings_;
  WeightProfiles weights_;
  DifferenceOperators ops_;
  std::vector<double> mass_weights_;
  std::vector<double> inv_density_;
};

/// Convenience wrappers matching the operation names of the scheme.
inline std::vector<double> flux_J(const Discretization& d, std::span<const double> u) {
  std::vector<double> J(u.size());
  d.flux_expanded(u, J);
  return J;
}

// ---------------------------------------------------------------------------
// Time integration driver

struct TimeControl {
  double T_end = 1.0;
  double dt_init = 1e-6;
  double dt_min = 1e-12;  ///< absolute
  double dt_max = 0.1;
  double sample_interval = 1e-2;
  double growth = 1.2;            ///< dt factor after an accepted step
  double lte_tolerance = 1e-3;    ///< step-doubling error bound (relative max-norm); 0 disables
  double supnorm_threshold = 1e4; ///< absolute
  std::int64_t max_steps = 10000000;
  bool keep_snapshots = true;
};

struct Snapshot {
  std::int64_t step = 0;
  Field u;
};

struct Trajectory {
  std::vector<DiagnosticsRecord> records;
  std::vector<Snapshot> snapshots;
  std::optional<BlowupEvent> event;
  State final_state;
  std::int64_t accepted_steps = 0;
  std::int64_t rejected_steps = 0;
  std::size_t entropy_violations = 0;  ///< sample pairs where the entropy rose beyond slack
  double max_entropy_excess = 0.0;
  double max_relative_mass_drift = 0.0;  ///< over accepted steps, relative to the initial mass
};

namespace detail {

inline double sup_norm(std::span<const double> u) {
  double s = 0.0;
  for (double v : u) s = std::max(s, v);
  return s;
}

inline double argmax_x(const Grid& g, std::span<const double> u) {
  const auto it = std::max_element(u.begin(), u.end());
  return g.centers[static_cast<std::size_t>(it - u.begin())];
}

}  // namespace detail

/// Advances `initial` to T_end or to a blow-up event. Deterministic.
inline Trajectory run(const Discretization& disc, const Field& initial, const TimeControl& tc,
                      double entropy_slack = 1e-6) {
  if (!(tc.T_end > 0.0) || !(tc.dt_init > 0.0) || !(tc.sample_interval > 0.0)) {
    throw std::invalid_argument("run: T_end, dt_init and sample_interval must be positive");
  }
  if (initial.values.size() != disc.size()) throw std::invalid_argument("run: size mismatch");
  for (double v : initial.values) {
    if (!(v > disc.settings().positivity_floor)) {
      throw std::invalid_argument("run: initial data must exceed the positivity floor");
    }
  }

  const RecordSettings rs{disc.settings().positivity_floor, 10.0 * disc.settings().positivity_floor};
  Trajectory traj;
  State state{initial, tc.dt_init, 0};
  const double mass0 = disc.mass(initial.values);

  auto sample = [&](const State& s, double dt) {
    traj.records.push_back(
        record(disc.grid(), disc.weights(), disc.ops(), disc.params(), s.u.values, s.t(), dt, rs));
    if (tc.keep_snapshots) traj.snapshots.push_back({s.step_count, s.u});
    if (traj.records.size() >= 2) {
      const double prev = traj.records[traj.records.size() - 2].entropy;
      const double cur = traj.records.back().entropy;
      const double excess = cur - prev - entropy_slack * (1.0 + std::abs(prev));
      if (std::isfinite(prev) && std::isfinite(cur) && excess > 0.0) {
        ++traj.entropy_violations;
        traj.max_entropy_excess = std::max(traj.max_entropy_excess, excess);
      }
    }
  };
  sample(state, 0.0);

  auto fire = [&](BlowupTrigger trigger, const State& s) {
    BlowupEvent e;
    e.detected = true;
    e.t_event = s.t();
    e.trigger = trigger;
    e.sup_norm_at_event = detail::sup_norm(s.u.values);
    e.argmax_x = detail::argmax_x(disc.grid(), s.u.values);
    traj.event = e;
  };

  double dt_proposed = tc.dt_init;
  double next_sample = tc.sample_interval;
  const double t_tol = 1e-12 * tc.T_end;

  while (state.t() < tc.T_end - t_tol) {
    if (traj.accepted_steps + traj.rejected_steps >= tc.max_steps) {
      throw std::runtime_error("run: step budget exhausted");
    }
    if (dt_proposed < tc.dt_min) {
      fire(BlowupTrigger::dt_underflow, state);
      break;
    }
    double dt = std::min({dt_proposed, tc.dt_max, next_sample - state.t(), tc.T_end - state.t()});
    const bool clamped = dt < std::min(dt_proposed, tc.dt_max);
    if (dt <= 0.0) dt = std::min(dt_proposed, tc.T_end - state.t());

    StepResult full = disc.implicit_step(state, dt);
    std::optional<State> accepted;
    StepFailure failure = full.outcome.failure;
    if (full.outcome.accepted && tc.lte_tolerance > 0.0) {
      StepResult half1 = disc.implicit_step(state, 0.5 * dt);
      if (half1.outcome.accepted) {
        StepResult half2 = disc.implicit_step(half1.state, 0.5 * dt);
        if (half2.outcome.accepted) {
          double err = 0.0;
          const double scale = 1.0 + detail::sup_norm(half2.state.u.values);
          for (std::size_t i = 0; i < disc.size(); ++i) {
            err = std::max(err, std::abs(half2.state.u.values[i] - full.state.u.values[i]));
          }
          if (err <= tc.lte_tolerance * scale) {
            accepted = half2.state;
            accepted->step_count = state.step_count + 1;
            accepted->u.time = state.t() + dt;
          }
        } else {
          failure = half2.outcome.failure;
        }
      } else {
        failure = half1.outcome.failure;
      }
    } else if (full.outcome.accepted) {
      accepted = full.state;
    }

    if (!accepted) {
      ++traj.rejected_steps;
      const double next = 0.5 * dt;
      if (next < tc.dt_min) {
        fire(failure == StepFailure::newton_divergence ? BlowupTrigger::newton_divergence
                                                       : BlowupTrigger::dt_underflow,
             state);
        break;
      }
      dt_proposed = next;
      continue;
    }

    ++traj.accepted_steps;
    const double drift = std::abs(disc.mass(accepted->u.values) - mass0) / mass0;
    traj.max_relative_mass_drift = std::max(traj.max_relative_mass_drift, drift);
    accepted->dt = dt;
    state = std::move(*accepted);
    if (!clamped) dt_proposed = std::min(dt_proposed * tc.growth, tc.dt_max);

    const bool at_sample = state.t() >= next_sample - t_tol;
    if (at_sample) {
      sample(state, dt);
      while (next_sample <= state.t() + t_tol) next_sample += tc.sample_interval;
    }
    if (detail::sup_norm(state.u.values) > tc.supnorm_threshold) {
      if (!at_sample) sample(state, dt);
      fire(BlowupTrigger::supnorm_exceeded, state);
      break;
    }
  }
  if (!traj.event && traj.records.back().t < state.t()) sample(state, state.dt);
  traj.final_state = state;
  return traj;
}

}  // namespace bec
