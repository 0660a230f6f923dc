#pragma once

// Run orchestration and persistence. A run directory is
//   <output_dir>/<run-id>/{config, trajectory.csv, snapshots/, events.json, oracles/}
// with run-id the hash of the canonical config echo. Sweeps run their members
// in parallel; each member is sequential and owns its directory.

#include "bec/config.hpp"
#include "bec/diagnostics.hpp"
#include "bec/initdata.hpp"
#include "bec/solver.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bec {

namespace fs = std::filesystem;

struct RunArtifacts {
  std::string run_id;
  fs::path directory;
  std::string config_echo;
  fs::path trajectory_csv;
  std::vector<fs::path> snapshots;
  std::vector<BlowupEvent> events;
  std::vector<fs::path> oracle_reports;
  std::vector<std::string> warnings;
  double initial_moment = 0.0;  ///< int x^{beta-kappa} u_0
  double initial_mass = 0.0;    ///< int (x+eps)^beta u_0
  Trajectory trajectory;
};

inline Discretization make_discretization(const RunConfig& c) {
  SolverSettings s;
  s.flux = c.flux;
  s.scheme = c.scheme;
  s.newton_tolerance = c.thresholds.newton_tolerance;
  s.positivity_floor = c.thresholds.positivity_floor;
  return Discretization(build_grid(c.grid.N, c.grid.grading_exponent, c.parameters.L), c.parameters, s);
}

inline TimeControl make_time_control(const RunConfig& c) {
  TimeControl tc;
  tc.T_end = c.time.T_end;
  tc.dt_init = c.time.dt_init;
  tc.dt_min = c.time.dt_min;
  tc.dt_max = c.time.dt_max;
  tc.sample_interval = c.time.sample_interval;
  tc.lte_tolerance = c.time.lte_tolerance;
  tc.max_steps = c.time.max_steps;
  tc.keep_snapshots = c.time.keep_snapshots;
  tc.supnorm_threshold = c.thresholds.supnorm_threshold;
  return tc;
}

/// Copy of `c` whose concentration profile uses parameter k.
inline RunConfig with_k(RunConfig c, std::int64_t k) {
  auto* q = std::get_if<ConcentrationProfile>(&c.initial);
  if (!q) throw std::invalid_argument("k-dependent runs need initial.type = concentration");
  q->k = k;
  return c;
}

inline RunConfig with_epsilon(RunConfig c, double eps) {
  c.parameters.epsilon = eps;
  return c;
}

/// In-memory run without persistence.
inline RunArtifacts simulate(const RunConfig& c) {
  validate(c);
  const Discretization disc = make_discretization(c);
  auto init = sample_profile(c.initial, disc.grid(), c.parameters);
  RunArtifacts a;
  a.config_echo = echo_config(c);
  a.run_id = run_id(c);
  a.warnings = std::move(init.warnings);
  a.initial_moment = weighted_integral(disc.grid(), init.field.values, c.parameters.beta - c.parameters.kappa);
  a.initial_mass = disc.mass(init.field.values);
  a.trajectory = run(disc, init.field, make_time_control(c));
  if (a.trajectory.event) a.events.push_back(*a.trajectory.event);
  return a;
}

// ---------------------------------------------------------------------------
// Serialization

inline const char* trajectory_header() {
  return "t,dt,mass,energy,entropy,entropy_production,moment_y,sup_norm";
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records) {
  os << trajectory_header() << '\n';
  for (const auto& r : records) {
    os << format_double(r.t) << ',' << format_double(r.dt) << ',' << format_double(r.mass) << ','
       << format_double(r.energy) << ',' << format_double(r.entropy) << ','
       << format_double(r.entropy_production) << ',' << format_double(r.moment_y) << ','
       << format_double(r.sup_norm) << '\n';
  }
}

inline void write_snapshot(std::ostream& os, const Grid& grid, const Snapshot& s) {
  os << "# step " << s.step << " t " << format_double(s.u.time) << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    os << format_double(grid.centers[i]) << ' ' << format_double(s.u.values[i]) << '\n';
  }
}

inline nlohmann::ordered_json event_json(const BlowupEvent& e) {
  return {{"t_event", e.t_event},
          {"trigger", to_string(e.trigger)},
          {"sup_norm_at_event", e.sup_norm_at_event},
          {"argmax_x", e.argmax_x}};
}

namespace detail {

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

inline std::string snapshot_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld.txt", static_cast<long long>(step));
  return buf;
}

/// Runs f(i) for i in [0, n) on up to hardware_concurrency threads.
/// f must not throw; callers catch per member.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Writes a finished run below `root`; returns the filled artifact record.
inline void persist(RunArtifacts& a, const RunConfig& c, const fs::path& root) {
  a.directory = root / a.run_id;
  fs::create_directories(a.directory / "snapshots");
  fs::create_directories(a.directory / "oracles");
  detail::write_file(a.directory / "config", a.config_echo);

  std::ostringstream csv;
  write_trajectory_csv(csv, a.trajectory.records);
  a.trajectory_csv = a.directory / "trajectory.csv";
  detail::write_file(a.trajectory_csv, csv.str());

  const Grid grid = build_grid(c.grid.N, c.grid.grading_exponent, c.parameters.L);
  a.snapshots.clear();
  for (const auto& s : a.trajectory.snapshots) {
    std::ostringstream os;
    write_snapshot(os, grid, s);
    auto p = a.directory / "snapshots" / detail::snapshot_name(s.step);
    detail::write_file(p, os.str());
    a.snapshots.push_back(std::move(p));
  }

  const auto& t = a.trajectory;
  nlohmann::ordered_json ev;
  ev["run_id"] = a.run_id;
  ev["events"] = nlohmann::ordered_json::array();
  for (const auto& e : a.events) ev["events"].push_back(event_json(e));
  ev["completed"] = !t.event.has_value();
  ev["t_final"] = t.final_state.t();
  ev["accepted_steps"] = t.accepted_steps;
  ev["rejected_steps"] = t.rejected_steps;
  ev["entropy_violations"] = t.entropy_violations;
  ev["max_relative_mass_drift"] = t.max_relative_mass_drift;
  ev["initial_moment"] = a.initial_moment;
  ev["initial_mass"] = a.initial_mass;
  ev["warnings"] = a.warnings;
  detail::write_file(a.directory / "events.json", ev.dump(2) + "\n");

  a.oracle_reports.clear();
  if (t.records.size() >= 10) {
    const auto m = moment_inequality_monitor(t.records, c.parameters.n, t.records.front().t,
                                             t.records.back().t);
    nlohmann::ordered_json j{{"a_hat", m.a_hat},       {"c3b_hat", m.c3b_hat},
                             {"c2_hat", m.c2_hat},     {"offset", m.offset},
                             {"satisfied", m.satisfied}, {"monotone", m.monotone},
                             {"convex", m.convex},     {"samples", m.samples}};
    auto p = a.directory / "oracles" / "moment_monitor.json";
    detail::write_file(p, j.dump(2) + "\n");
    a.oracle_reports.push_back(std::move(p));
  }
}

inline RunArtifacts run_single(const RunConfig& c) {
  RunArtifacts a = simulate(c);
  persist(a, c, c.output_dir);
  return a;
}

// ---------------------------------------------------------------------------
// Studies

struct StudyMember {
  double parameter = 0.0;  ///< epsilon or k
  std::optional<RunArtifacts> artifacts;
  std::string error;  ///< non-empty when the member failed
  [[nodiscard]] bool ok() const { return artifacts.has_value(); }
};

struct StudyResult {
  fs::path directory;
  fs::path table;
  std::vector<StudyMember> members;
};

namespace detail {

inline std::vector<StudyMember> run_members(const std::vector<RunConfig>& configs,
                                            const std::vector<double>& parameters, bool persist_runs) {
  std::vector<StudyMember> members(configs.size());
  parallel_for(configs.size(), [&](std::size_t i) {
    members[i].parameter = parameters[i];
    try {
      members[i].artifacts = persist_runs ? run_single(configs[i]) : simulate(configs[i]);
      if (!persist_runs) members[i].artifacts->trajectory.snapshots.clear();
    } catch (const std::exception& e) {
      members[i].artifacts.reset();
      members[i].error = e.what();
    }
  });
  return members;
}

inline std::string csv_field(std::string s) {
  for (auto& ch : s) {
    if (ch == ',' || ch == '\n') ch = ';';
  }
  return s;
}

inline fs::path study_directory(const RunConfig& c) {
  const fs::path d = fs::path(c.output_dir) / run_id(c);
  fs::create_directories(d);
  detail::write_file(d / "config", echo_config(c));
  return d;
}

}  // namespace detail

/// One run per epsilon plus eps_study.csv comparing final-time functionals.
inline StudyResult run_eps_study(const RunConfig& c, const std::vector<double>& eps_list) {
  if (eps_list.empty()) throw std::invalid_argument("eps study needs at least one epsilon");
  RunConfig study = c;
  study.mode = RunMode::eps_study;
  study.eps_list = eps_list;
  std::vector<RunConfig> configs;
  for (double e : eps_list) {
    auto m = with_epsilon(c, e);
    m.mode = RunMode::single;
    m.eps_list.clear();
    configs.push_back(std::move(m));
  }
  StudyResult r;
  r.directory = detail::study_directory(study);
  r.members = detail::run_members(configs, eps_list, true);

  std::ostringstream os;
  os << "epsilon,run_id,status,mass_0,mass_T,relative_mass_change,energy_T,entropy_T,moment_y_T,"
        "sup_norm_T,t_final,event\n";
  for (const auto& m : r.members) {
    os << format_double(m.parameter) << ',';
    if (!m.ok()) {
      os << ",failed: " << detail::csv_field(m.error) << ",,,,,,,,,\n";
      continue;
    }
    const auto& t = m.artifacts->trajectory;
    const auto& first = t.records.front();
    const auto& last = t.records.back();
    os << m.artifacts->run_id << ",ok," << format_double(first.mass) << ',' << format_double(last.mass)
       << ',' << format_double((last.mass - first.mass) / first.mass) << ','
       << format_double(last.energy) << ',' << format_double(last.entropy) << ','
       << format_double(last.moment_y) << ',' << format_double(last.sup_norm) << ','
       << format_double(t.final_state.t()) << ','
       << (t.event ? to_string(t.event->trigger) : "none") << '\n';
  }
  r.table = r.directory / "eps_study.csv";
  detail::write_file(r.table, os.str());
  return r;
}

/// One run per k plus k_sweep.csv with the initial moment and blow-up time.
inline StudyResult run_k_sweep(const RunConfig& c, const std::vector<std::int64_t>& k_list) {
  if (k_list.empty()) throw std::invalid_argument("k sweep needs at least one k");
  RunConfig study = c;
  study.mode = RunMode::k_sweep;
  study.k_list = k_list;
  std::vector<RunConfig> configs;
  std::vector<double> ks;
  for (auto k : k_list) {
    auto m = with_k(c, k);
    m.mode = RunMode::single;
    m.k_list.clear();
    configs.push_back(std::move(m));
    ks.push_back(static_cast<double>(k));
  }
  StudyResult r;
  r.directory = detail::study_directory(study);
  r.members = detail::run_members(configs, ks, true);

  std::ostringstream os;
  os << "k,run_id,status,initial_moment,initial_mass,blowup_time,trigger\n";
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    const auto& m = r.members[i];
    os << k_list[i] << ',';
    if (!m.ok()) {
      os << ",failed: " << detail::csv_field(m.error) << ",,,,\n";
      continue;
    }
    const auto& a = *m.artifacts;
    os << a.run_id << ",ok," << format_double(a.initial_moment) << ',' << format_double(a.initial_mass)
       << ',';
    if (a.trajectory.event) {
      os << format_double(a.trajectory.event->t_event) << ',' << to_string(a.trajectory.event->trigger);
    } else {
      os << "none,none";
    }
    os << '\n';
  }
  r.table = r.directory / "k_sweep.csv";
  detail::write_file(r.table, os.str());
  return r;
}

// ---------------------------------------------------------------------------
// Threshold bisection

struct BisectionProbe {
  std::int64_t k = 0;
  bool event = false;
  double t_event = 0.0;
  double initial_moment = 0.0;
};

struct BisectionResult {
  std::int64_t k_star = 0;    ///< smallest k in the bracket whose run emits an event
  double M_estimate = 0.0;    ///< int x^{beta-kappa} u_{0k*}
  double B = 0.0;             ///< int x^beta u_{0k*}
  double D = 0.0;             ///< int x^beta ln_+(1/u_{0k*})
  std::vector<BisectionProbe> probes;
  fs::path table;
};

class BracketError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Integer bisection on k between a quiet run at k_low and an eventful run at k_high.
/// Probe runs are not persisted; the probe table is written to bisect.csv.
inline BisectionResult bisect_blowup_threshold(const RunConfig& c, std::int64_t k_low,
                                               std::int64_t k_high) {
  if (!(k_low >= 1 && k_high > k_low)) throw std::invalid_argument("bisect: need 1 <= k_low < k_high");
  RunConfig base = c;
  base.time.keep_snapshots = false;
  BisectionResult r;
  auto probe = [&](std::int64_t k) {
    const auto a = simulate(with_k(base, k));
    BisectionProbe p{k, a.trajectory.event.has_value(),
                     a.trajectory.event ? a.trajectory.event->t_event : 0.0, a.initial_moment};
    r.probes.push_back(p);
    return p.event;
  };

  std::vector<double> ks{static_cast<double>(k_low), static_cast<double>(k_high)};
  std::vector<RunConfig> cfgs{with_k(base, k_low), with_k(base, k_high)};
  const auto members = detail::run_members(cfgs, ks, false);
  for (const auto& m : members) {
    if (!m.ok()) throw std::runtime_error("bisect: bracket run failed: " + m.error);
    r.probes.push_back({static_cast<std::int64_t>(m.parameter), m.artifacts->trajectory.event.has_value(),
                        m.artifacts->trajectory.event ? m.artifacts->trajectory.event->t_event : 0.0,
                        m.artifacts->initial_moment});
  }
  const bool low_event = r.probes[0].event;
  const bool high_event = r.probes[1].event;
  if (low_event == high_event || low_event) {
    throw BracketError("bracket invalid: run at k_low " + std::string(low_event ? "emits" : "does not emit") +
                       " an event and run at k_high " + (high_event ? "emits" : "does not emit") + " one");
  }

  std::int64_t lo = k_low;
  std::int64_t hi = k_high;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (probe(mid)) hi = mid;
    else lo = mid;
  }
  r.k_star = hi;

  const Grid grid = build_grid(c.grid.N, c.grid.grading_exponent, c.parameters.L);
  const auto init = sample_profile(with_k(base, hi).initial, grid, c.parameters);
  const auto& u = init.field.values;
  r.M_estimate = weighted_integral(grid, u, c.parameters.beta - c.parameters.kappa);
  const auto w = cell_weights(grid, c.parameters.beta);
  for (std::size_t i = 0; i < u.size(); ++i) {
    r.B += w[i] * u[i];
    if (u[i] < 1.0) r.D += w[i] * std::log(1.0 / u[i]);
  }

  RunConfig study = c;
  study.mode = RunMode::m_bisect;
  study.k_low = k_low;
  study.k_high = k_high;
  const fs::path dir = detail::study_directory(study);
  std::ostringstream os;
  os << "k,event,t_event,initial_moment\n";
  auto sorted = r.probes;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  for (const auto& p : sorted) {
    os << p.k << ',' << (p.event ? 1 : 0) << ',' << (p.event ? format_double(p.t_event) : "none") << ','
       << format_double(p.initial_moment) << '\n';
  }
  os << "# k_star " << r.k_star << "\n# M_estimate " << format_double(r.M_estimate) << "\n# B "
     << format_double(r.B) << "\n# D " << format_double(r.D) << '\n';
  r.table = dir / "bisect.csv";
  detail::write_file(r.table, os.str());
  return r;
}

}  // namespace bec
