// becsim: command-line front end.
//   becsim check     <config>
//   becsim run       <config>
//   becsim eps-study <config> [--eps a,b,...]
//   becsim k-sweep   <config> [--k a,b,...]
//   becsim bisect    <config> [--k-low a --k-high b]
//   becsim oracles   <config> [--count N --seed S --eta E --p P]

#include "bec/bec.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_check(const std::string& path) {
  const auto cfg = bec::parse_config_unchecked(slurp(path));
  const auto r = bec::check(cfg);
  const auto& p = cfg.parameters;
  std::cout << "n* = " << bec::format_double(bec::compute_nstar()) << '\n'
            << "kappa_max = " << bec::format_double(r.kappa_max) << '\n'
            << "existence: " << (r.existence_ok ? "ok" : "violated") << '\n'
            << "blowup: " << (r.blowup_ok ? "ok" : "violated") << '\n';
  std::cout << "parameters: n=" << p.n << " alpha=" << p.alpha << " beta=" << p.beta
            << " kappa=" << p.kappa << " L=" << p.L << " epsilon=" << p.epsilon << '\n';
  for (const auto& v : r.violated) {
    std::cout << "violated: " << v.constraint << " (value " << bec::format_double(v.value) << ")\n";
  }
  std::cout << "run-id: " << bec::run_id(cfg) << '\n';
  if (cfg.admissibility == bec::CheckMode::none) return 0;
  return r.ok() ? 0 : 2;
}

void print_run(const bec::RunArtifacts& a) {
  std::cout << "run-id " << a.run_id << "  dir " << a.directory.string() << '\n';
  for (const auto& w : a.warnings) std::cout << "warning: " << w << '\n';
  const auto& t = a.trajectory;
  std::cout << "steps accepted " << t.accepted_steps << " rejected " << t.rejected_steps
            << "  t_final " << bec::format_double(t.final_state.t()) << '\n';
  if (t.event) {
    std::cout << "event " << bec::to_string(t.event->trigger) << " at t = "
              << bec::format_double(t.event->t_event) << "  sup = "
              << bec::format_double(t.event->sup_norm_at_event) << "  x = "
              << bec::format_double(t.event->argmax_x) << '\n';
  } else {
    std::cout << "no event\n";
  }
}

int cmd_run(const std::string& path) {
  print_run(bec::run_single(bec::parse_config(slurp(path))));
  return 0;
}

int report_study(const bec::StudyResult& r) {
  int failed = 0;
  for (const auto& m : r.members) {
    if (m.ok()) continue;
    ++failed;
    std::cerr << "member " << bec::format_double(m.parameter) << " failed: " << m.error << '\n';
  }
  std::cout << "table " << r.table.string() << '\n';
  std::ifstream in(r.table);
  std::cout << in.rdbuf();
  return failed ? 3 : 0;
}

int cmd_eps_study(const std::string& path, std::vector<double> eps) {
  const auto cfg = bec::parse_config(slurp(path));
  if (eps.empty()) eps = cfg.eps_list;
  if (eps.empty()) throw std::invalid_argument("no epsilon list: pass --eps or set study.eps_list");
  return report_study(bec::run_eps_study(cfg, eps));
}

int cmd_k_sweep(const std::string& path, std::vector<std::int64_t> ks) {
  const auto cfg = bec::parse_config(slurp(path));
  if (ks.empty()) ks = cfg.k_list;
  if (ks.empty()) throw std::invalid_argument("no k list: pass --k or set sweep.k_list");
  return report_study(bec::run_k_sweep(cfg, ks));
}

int cmd_bisect(const std::string& path, std::optional<std::int64_t> lo, std::optional<std::int64_t> hi) {
  const auto cfg = bec::parse_config(slurp(path));
  const auto r = bec::bisect_blowup_threshold(cfg, lo.value_or(cfg.k_low), hi.value_or(cfg.k_high));
  std::cout << "k_star " << r.k_star << "\nM_estimate " << bec::format_double(r.M_estimate) << "\nB "
            << bec::format_double(r.B) << "\nD " << bec::format_double(r.D) << "\ntable "
            << r.table.string() << '\n';
  return 0;
}

int cmd_oracles(const std::string& path, const bec::FuzzOptions& opt) {
  const auto cfg = bec::parse_config_unchecked(slurp(path));
  const auto s = bec::fuzz_oracles(cfg.parameters, opt);
  const auto dir = std::filesystem::path(cfg.output_dir) / bec::run_id(cfg) / "oracles";
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "fuzz.csv");
  bec::write_oracle_csv(out, s);
  std::cout << "functions " << opt.count << "\npointwise violations " << s.pointwise_violations
            << "\nmoment max needed constant " << bec::format_double(s.moment_max)
            << "\nabsorption max needed constant " << bec::format_double(s.absorption_max)
            << "\nlocal max needed constant " << bec::format_double(s.local_max) << "\ncsv "
            << (dir / "fuzz.csv").string() << '\n';
  return s.pointwise_violations == 0 && s.all_finite ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for a degenerate fourth-order equation with finite-time concentration"};
  app.require_subcommand(1);

  std::string config;
  auto* check = app.add_subcommand("check", "Report parameter admissibility");
  check->add_option("config", config, "configuration file")->required();

  auto* run = app.add_subcommand("run", "Single run");
  run->add_option("config", config, "configuration file")->required();

  std::vector<double> eps;
  auto* eps_study = app.add_subcommand("eps-study", "One run per epsilon and a comparison table");
  eps_study->add_option("config", config, "configuration file")->required();
  eps_study->add_option("--eps", eps, "epsilon values")->delimiter(',');

  std::vector<std::int64_t> ks;
  auto* k_sweep = app.add_subcommand("k-sweep", "One run per concentration parameter k");
  k_sweep->add_option("config", config, "configuration file")->required();
  k_sweep->add_option("--k", ks, "k values")->delimiter(',');

  std::optional<std::int64_t> k_low, k_high;
  auto* bisect = app.add_subcommand("bisect", "Bisect the smallest k whose run emits an event");
  bisect->add_option("config", config, "configuration file")->required();
  bisect->add_option("--k-low", k_low, "k without event");
  bisect->add_option("--k-high", k_high, "k with event");

  bec::FuzzOptions fuzz;
  auto* oracles = app.add_subcommand("oracles", "Fuzz the interpolation inequalities");
  oracles->add_option("config", config, "configuration file")->required();
  oracles->add_option("--count", fuzz.count, "corpus size");
  oracles->add_option("--seed", fuzz.seed, "corpus seed");
  oracles->add_option("--eta", fuzz.eta, "eta of the absorbed term");
  oracles->add_option("--p", fuzz.p_local, "exponent of the local inequality");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return cmd_check(config);
    if (*run) return cmd_run(config);
    if (*eps_study) return cmd_eps_study(config, eps);
    if (*k_sweep) return cmd_k_sweep(config, ks);
    if (*bisect) return cmd_bisect(config, k_low, k_high);
    if (*oracles) return cmd_oracles(config, fuzz);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
