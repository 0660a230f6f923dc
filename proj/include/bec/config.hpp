#pragma once

// Plain-text key = value run configuration. Parsing is strict: unknown keys,
// duplicates and malformed values are errors carrying line and column.

#include "bec/initdata.hpp"
#include "bec/paramspace.hpp"
#include "bec/solver.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bec {

enum class RunMode { single, eps_study, k_sweep, m_bisect };
enum class CheckMode { blowup, existence, none };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::single: return "single";
    case RunMode::eps_study: return "eps_study";
    case RunMode::k_sweep: return "k_sweep";
    case RunMode::m_bisect: return "m_bisect";
  }
  return "unknown";
}

inline const char* to_string(CheckMode m) {
  switch (m) {
    case CheckMode::blowup: return "blowup";
    case CheckMode::existence: return "existence";
    case CheckMode::none: return "none";
  }
  return "unknown";
}

inline const char* to_string(FluxForm f) { return f == FluxForm::entropic ? "entropic" : "expanded"; }
inline const char* to_string(TimeScheme s) {
  return s == TimeScheme::implicit_euler ? "implicit_euler" : "trapezoidal";
}

struct GridConfig {
  std::size_t N = 256;
  double grading_exponent = 2.0;
};

struct TimeConfig {
  double T_end = 1.0;
  double dt_init = 1e-8;
  double dt_min = 1e-14;
  double dt_max = 0.05;
  double sample_interval = 1e-2;
  double lte_tolerance = 1e-3;
  std::int64_t max_steps = 2000000;
  bool keep_snapshots = true;
};

struct ThresholdConfig {
  double supnorm_threshold = 1e4;
  double newton_tolerance = 1e-10;
  double positivity_floor = 1e-12;
};

struct RunConfig {
  ModelParameters parameters;
  CheckMode admissibility = CheckMode::blowup;
  GridConfig grid;
  Profile initial = ConstantProfile{1.0};
  TimeConfig time;
  ThresholdConfig thresholds;
  FluxForm flux = FluxForm::entropic;
  TimeScheme scheme = TimeScheme::implicit_euler;
  std::string output_dir = "runs";
  RunMode mode = RunMode::single;
  std::vector<double> eps_list;
  std::vector<std::int64_t> k_list;
  std::int64_t k_low = 1;
  std::int64_t k_high = 64;
};

/// Malformed document; `line` and `column` are 1-based, 0 when not tied to a position.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ", column " +
                                      std::to_string(column) + ": " + what
                                : what),
        line_(line),
        column_(column) {}
  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

/// Parameters outside the admissible set for the configured check mode.
class AdmissibilityError : public std::runtime_error {
public:
  explicit AdmissibilityError(AdmissibilityReport report)
      : std::runtime_error(describe(report)), report_(std::move(report)) {}
  [[nodiscard]] const AdmissibilityReport& report() const { return report_; }

private:
  static std::string describe(const AdmissibilityReport& r) {
    std::string s = "inadmissible parameters:";
    for (const auto& v : r.violated) s += " " + v.constraint;
    return s;
  }
  AdmissibilityReport report_;
};

/// 17 significant digits: round-trips every double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Located {
  std::string value;
  std::size_t line = 0;
  std::size_t column = 0;
};

inline double parse_double(const Located& v, const std::string& key) {
  double out = 0.0;
  const char* b = v.value.data();
  const char* e = b + v.value.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc{} || ptr != e || !std::isfinite(out)) {
    throw ConfigError("key '" + key + "': expected a finite number, got '" + v.value + "'", v.line,
                      v.column);
  }
  return out;
}

inline std::int64_t parse_int(const Located& v, const std::string& key) {
  std::int64_t out = 0;
  const char* b = v.value.data();
  const char* e = b + v.value.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc{} || ptr != e) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v.value + "'", v.line, v.column);
  }
  return out;
}

inline bool parse_bool(const Located& v, const std::string& key) {
  if (v.value == "true") return true;
  if (v.value == "false") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v.value + "'", v.line, v.column);
}

template <typename T>
std::vector<T> parse_list(const Located& v, const std::string& key,
                          T (*one)(const Located&, const std::string&)) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= v.value.size()) {
    const std::size_t comma = v.value.find(',', start);
    const std::size_t stop = comma == std::string::npos ? v.value.size() : comma;
    const std::string_view item = trim(std::string_view(v.value).substr(start, stop - start));
    if (item.empty()) throw ConfigError("key '" + key + "': empty list element", v.line, v.column + start);
    out.push_back(one(Located{std::string(item), v.line, v.column + start}, key));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename E>
E parse_enum(const Located& v, const std::string& key, std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (v.value == name) return value;
    names += names.empty() ? name : std::string("|") + name;
  }
  throw ConfigError("key '" + key + "': expected one of " + names + ", got '" + v.value + "'", v.line,
                    v.column);
}

}  // namespace detail

/// Canonical serialization: every key, fixed order, 17 significant digits.
/// parse_config(echo_config(c)) reproduces c and the same echo byte for byte.
inline std::string echo_config(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto num = [&](const std::string& k, double v) { kv(k, format_double(v)); };
  const auto& p = c.parameters;
  num("n", p.n);
  num("alpha", p.alpha);
  num("beta", p.beta);
  if (p.gamma) num("gamma", *p.gamma);
  num("kappa", p.kappa);
  num("L", p.L);
  num("epsilon", p.epsilon);
  kv("admissibility", to_string(c.admissibility));
  kv("grid.N", std::to_string(c.grid.N));
  num("grid.grading_exponent", c.grid.grading_exponent);

  auto base_keys = [&](const auto& q) {
    using T = std::decay_t<decltype(q)>;
    if constexpr (std::is_same_v<T, ConstantProfile>) {
      num("initial.c", q.c);
    } else if constexpr (std::is_same_v<T, BumpProfile>) {
      num("initial.center", q.center);
      num("initial.width", q.width);
      num("initial.height", q.height);
      num("initial.background", q.background);
    } else if constexpr (std::is_same_v<T, TableProfile>) {
      kv("initial.table", q.source);
    }
  };
  auto base_name = [](const auto& q) -> const char* {
    using T = std::decay_t<decltype(q)>;
    if constexpr (std::is_same_v<T, ConstantProfile>) return "constant";
    else if constexpr (std::is_same_v<T, BumpProfile>) return "bump";
    else return "table";
  };
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, ConcentrationProfile>) {
          kv("initial.type", "concentration");
          std::visit([&](const auto& b) { kv("initial.base", base_name(b)); }, q.base);
          std::visit(base_keys, q.base);
          kv("initial.k", std::to_string(q.k));
          num("initial.theta", q.theta);
          num("initial.phi.center", q.phi.center);
          num("initial.phi.width", q.phi.width);
          num("initial.phi.height", q.phi.height);
          num("initial.phi.background", q.phi.background);
        } else {
          kv("initial.type", base_name(q));
          base_keys(q);
        }
      },
      c.initial);

  num("time.T_end", c.time.T_end);
  num("time.dt_init", c.time.dt_init);
  num("time.dt_min", c.time.dt_min);
  num("time.dt_max", c.time.dt_max);
  num("time.sample_interval", c.time.sample_interval);
  num("time.lte_tolerance", c.time.lte_tolerance);
  kv("time.max_steps", std::to_string(c.time.max_steps));
  kv("time.keep_snapshots", c.time.keep_snapshots ? "true" : "false");
  num("thresholds.supnorm_threshold", c.thresholds.supnorm_threshold);
  num("thresholds.newton_tolerance", c.thresholds.newton_tolerance);
  num("thresholds.positivity_floor", c.thresholds.positivity_floor);
  kv("solver.flux", to_string(c.flux));
  kv("solver.scheme", to_string(c.scheme));
  kv("output_dir", c.output_dir);
  kv("mode", to_string(c.mode));
  if (!c.eps_list.empty()) {
    std::string s;
    for (double e : c.eps_list) s += (s.empty() ? "" : ", ") + format_double(e);
    kv("study.eps_list", s);
  }
  if (!c.k_list.empty()) {
    std::string s;
    for (auto k : c.k_list) s += (s.empty() ? "" : ", ") + std::to_string(k);
    kv("sweep.k_list", s);
  }
  kv("bisect.k_low", std::to_string(c.k_low));
  kv("bisect.k_high", std::to_string(c.k_high));
  return os.str();
}

/// 64-bit FNV-1a of the canonical echo, as 16 hex digits. The output
/// directory is not part of the identity.
inline std::string run_id(const RunConfig& c) {
  RunConfig keyed = c;
  keyed.output_dir.clear();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : echo_config(keyed)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline AdmissibilityReport check(const RunConfig& c) {
  const auto mode = c.admissibility == CheckMode::existence ? AdmissibilityMode::existence
                                                            : AdmissibilityMode::blowup;
  return check_admissibility(c.parameters, mode);
}

/// Throws AdmissibilityError unless the configured check mode passes.
inline void validate(const RunConfig& c) {
  if (c.admissibility != CheckMode::none) {
    auto r = check(c);
    if (!r.ok()) throw AdmissibilityError(std::move(r));
  } else if (!(c.parameters.L > 0.0) || !(c.parameters.epsilon >= 0.0)) {
    throw std::invalid_argument("config: L must be positive and epsilon nonnegative");
  }
  if (c.grid.N < 8) throw std::invalid_argument("config: grid.N must be at least 8");
  if (!(c.grid.grading_exponent >= 1.0)) throw std::invalid_argument("config: grid.grading_exponent must be >= 1");
  const auto& t = c.time;
  if (!(t.T_end > 0.0 && t.dt_init > 0.0 && t.dt_min > 0.0 && t.dt_max > 0.0 && t.sample_interval > 0.0)) {
    throw std::invalid_argument("config: time fields must be positive");
  }
  if (!(t.lte_tolerance >= 0.0)) throw std::invalid_argument("config: time.lte_tolerance must be >= 0");
  if (t.max_steps <= 0) throw std::invalid_argument("config: time.max_steps must be positive");
  const auto& h = c.thresholds;
  if (!(h.supnorm_threshold > 0.0 && h.newton_tolerance > 0.0 && h.positivity_floor >= 0.0)) {
    throw std::invalid_argument("config: thresholds must be positive");
  }
  for (double e : c.eps_list) {
    if (!(e >= 0.0)) throw std::invalid_argument("config: study.eps_list entries must be >= 0");
  }
  for (auto k : c.k_list) {
    if (k < 1) throw std::invalid_argument("config: sweep.k_list entries must be >= 1");
  }
  if (c.k_low < 1 || c.k_high <= c.k_low) throw std::invalid_argument("config: need 1 <= bisect.k_low < bisect.k_high");
}

/// Parses and resolves a configuration document. `#` starts a comment.
/// With `check_parameters` the result also passes validate().
inline RunConfig parse_config(std::string_view text, bool check_parameters = true) {
  struct Entry {
    detail::Located value;
    std::size_t key_column = 0;
  };
  std::map<std::string, Entry> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view raw = text.substr(pos, end - pos);
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto content = detail::trim(raw);
    if (!content.empty()) {
      const auto col = [&](std::string_view part) {
        return static_cast<std::size_t>(part.data() - raw.data()) + 1;
      };
      const std::size_t eq = raw.find('=');
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, col(content));
      const auto key = detail::trim(raw.substr(0, eq));
      if (key.empty()) throw ConfigError("missing key before '='", line_no, eq + 1);
      const auto value = detail::trim(raw.substr(eq + 1));
      if (value.empty()) {
        throw ConfigError("key '" + std::string(key) + "': missing value", line_no, eq + 2);
      }
      Entry e{{std::string(value), line_no, col(value)}, col(key)};
      if (!entries.emplace(std::string(key), std::move(e)).second) {
        throw ConfigError("duplicate key '" + std::string(key) + "'", line_no, col(key));
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  std::set<std::string> used;
  auto take = [&](const std::string& key) -> const detail::Located* {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    used.insert(key);
    return &it->second.value;
  };
  auto number = [&](const std::string& key, double& out) {
    if (const auto* v = take(key)) out = detail::parse_double(*v, key);
  };
  auto integer = [&](const std::string& key, auto& out) {
    if (const auto* v = take(key)) {
      const auto x = detail::parse_int(*v, key);
      if constexpr (std::is_unsigned_v<std::decay_t<decltype(out)>>) {
        if (x < 0) throw ConfigError("key '" + key + "': must be nonnegative", v->line, v->column);
      }
      out = static_cast<std::decay_t<decltype(out)>>(x);
    }
  };

  RunConfig c;
  auto& p = c.parameters;
  number("n", p.n);
  number("alpha", p.alpha);
  number("beta", p.beta);
  if (const auto* v = take("gamma")) p.gamma = detail::parse_double(*v, "gamma");
  number("kappa", p.kappa);
  number("L", p.L);
  number("epsilon", p.epsilon);
  if (const auto* v = take("admissibility")) {
    c.admissibility = detail::parse_enum<CheckMode>(
        *v, "admissibility",
        {{"blowup", CheckMode::blowup}, {"existence", CheckMode::existence}, {"none", CheckMode::none}});
  }
  integer("grid.N", c.grid.N);
  number("grid.grading_exponent", c.grid.grading_exponent);

  enum class Kind { constant, bump, table, concentration };
  auto kind_of = [&](const std::string& key, Kind fallback, bool allow_concentration) {
    const auto* v = take(key);
    if (!v) return fallback;
    if (allow_concentration) {
      return detail::parse_enum<Kind>(*v, key,
                                      {{"constant", Kind::constant},
                                       {"bump", Kind::bump},
                                       {"table", Kind::table},
                                       {"concentration", Kind::concentration}});
    }
    return detail::parse_enum<Kind>(
        *v, key, {{"constant", Kind::constant}, {"bump", Kind::bump}, {"table", Kind::table}});
  };
  auto base_profile = [&](Kind k) -> BaseProfile {
    switch (k) {
      case Kind::bump: {
        BumpProfile b;
        number("initial.center", b.center);
        number("initial.width", b.width);
        number("initial.height", b.height);
        number("initial.background", b.background);
        return b;
      }
      case Kind::table: {
        const auto* v = take("initial.table");
        if (!v) throw ConfigError("initial.type table requires initial.table");
        try {
          return read_table(v->value);
        } catch (const std::runtime_error& e) {
          throw ConfigError(std::string("initial.table: ") + e.what(), v->line, v->column);
        }
      }
      default: {
        ConstantProfile q;
        number("initial.c", q.c);
        return q;
      }
    }
  };
  const Kind kind = kind_of("initial.type", Kind::constant, true);
  if (kind == Kind::concentration) {
    ConcentrationProfile q;
    q.base = base_profile(kind_of("initial.base", Kind::constant, false));
    integer("initial.k", q.k);
    q.theta = default_theta(p.beta, p.kappa);
    number("initial.theta", q.theta);
    number("initial.phi.center", q.phi.center);
    number("initial.phi.width", q.phi.width);
    number("initial.phi.height", q.phi.height);
    number("initial.phi.background", q.phi.background);
    c.initial = q;
  } else {
    c.initial = std::visit([](auto&& b) -> Profile { return b; }, base_profile(kind));
  }

  number("time.T_end", c.time.T_end);
  number("time.dt_init", c.time.dt_init);
  number("time.dt_min", c.time.dt_min);
  number("time.dt_max", c.time.dt_max);
  number("time.sample_interval", c.time.sample_interval);
  number("time.lte_tolerance", c.time.lte_tolerance);
  integer("time.max_steps", c.time.max_steps);
  if (const auto* v = take("time.keep_snapshots")) c.time.keep_snapshots = detail::parse_bool(*v, "time.keep_snapshots");
  number("thresholds.supnorm_threshold", c.thresholds.supnorm_threshold);
  number("thresholds.newton_tolerance", c.thresholds.newton_tolerance);
  number("thresholds.positivity_floor", c.thresholds.positivity_floor);
  if (const auto* v = take("solver.flux")) {
    c.flux = detail::parse_enum<FluxForm>(*v, "solver.flux",
                                          {{"entropic", FluxForm::entropic}, {"expanded", FluxForm::expanded}});
  }
  if (const auto* v = take("solver.scheme")) {
    c.scheme = detail::parse_enum<TimeScheme>(
        *v, "solver.scheme",
        {{"implicit_euler", TimeScheme::implicit_euler}, {"trapezoidal", TimeScheme::trapezoidal}});
  }
  if (const auto* v = take("output_dir")) c.output_dir = v->value;
  if (const auto* v = take("mode")) {
    c.mode = detail::parse_enum<RunMode>(*v, "mode",
                                         {{"single", RunMode::single},
                                          {"eps_study", RunMode::eps_study},
                                          {"k_sweep", RunMode::k_sweep},
                                          {"m_bisect", RunMode::m_bisect}});
  }
  if (const auto* v = take("study.eps_list")) c.eps_list = detail::parse_list<double>(*v, "study.eps_list", detail::parse_double);
  if (const auto* v = take("sweep.k_list")) c.k_list = detail::parse_list<std::int64_t>(*v, "sweep.k_list", detail::parse_int);
  integer("bisect.k_low", c.k_low);
  integer("bisect.k_high", c.k_high);

  // Report the first unknown (or inapplicable) key in document order.
  const Entry* unknown = nullptr;
  std::string unknown_key;
  for (const auto& [key, e] : entries) {
    if (used.count(key)) continue;
    if (!unknown || e.value.line < unknown->value.line) {
      unknown = &e;
      unknown_key = key;
    }
  }
  if (unknown) {
    throw ConfigError("unknown key '" + unknown_key + "'", unknown->value.line, unknown->key_column);
  }

  if (check_parameters) validate(c);
  return c;
}

/// parse_config without the validate() step, for admissibility reports.
inline RunConfig parse_config_unchecked(std::string_view text) { return parse_config(text, false); }

}  // namespace bec
