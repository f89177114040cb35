#pragma once

// Experiment orchestration: key-value configs, dispatch to the modules,
// headered CSV tables and one key-value report per run.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "catenoid/constructor.hpp"
#include "catenoid/curvature.hpp"
#include "catenoid/obstruction.hpp"
#include "catenoid/spectral.hpp"

namespace catenoid::harness {

namespace fs = std::filesystem;

enum class Provenance { paper, trivial, derived };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::paper: return "paper";
    case Provenance::trivial: return "trivial";
    case Provenance::derived: return "derived";
  }
  return "?";
}

/// Validation failure tied to one configuration key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& why)
      : std::invalid_argument("config key '" + key + "': " + why), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"verify-expansions", "obstruction-constant", "balance", "demo",
                                             "solve-mode", "construct", "rescale-check"};
  return k;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto r = std::from_chars(first, last, out);
  return r.ec == std::errc() && r.ptr == last && std::isfinite(out);
}

/// Reads `key = value` lines; `#` starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "expected 'key = value' on line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "missing key on line " + std::to_string(lineno));
    if (value.empty()) throw ConfigError(key, "empty value on line " + std::to_string(lineno));
    if (!seen.insert(key).second) throw ConfigError(key, "duplicated on line " + std::to_string(lineno));
    out.emplace_back(key, value);
  }
  return out;
}

}  // namespace detail

struct ExperimentConfig {
  std::string kind;
  std::map<std::string, std::string> params;
  fs::path out_dir = "out";
  std::uint64_t seed = 20240601;
  fs::path base_dir = ".";  // relative file parameters resolve against this

  static ExperimentConfig parse(std::istream& is, const fs::path& base = ".") {
    ExperimentConfig c;
    c.base_dir = base;
    for (auto& [k, v] : detail::read_key_values(is)) c.set(k, v);
    return c;
  }

  static ExperimentConfig load(const fs::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("config", "cannot open '" + file.string() + "'");
    return parse(is, file.parent_path().empty() ? fs::path(".") : file.parent_path());
  }

  /// Later calls override earlier ones (command-line flags over file values).
  void set(const std::string& key, const std::string& value) {
    if (key == "kind") {
      kind = value;
    } else if (key == "out") {
      out_dir = value;
    } else if (key == "seed") {
      std::uint64_t s = 0;
      const auto r = std::from_chars(value.data(), value.data() + value.size(), s);
      if (r.ec != std::errc() || r.ptr != value.data() + value.size())
        throw ConfigError("seed", "not an unsigned integer: '" + value + "'");
      seed = s;
    } else {
      params[key] = value;
    }
  }

  bool has(const std::string& key) const { return params.count(key) > 0; }

  std::string text(const std::string& key, const std::string& def) const {
    const auto it = params.find(key);
    return it == params.end() ? def : it->second;
  }

  double number(const std::string& key, double def) const {
    const auto it = params.find(key);
    if (it == params.end()) return def;
    double x = 0.0;
    if (!detail::parse_double(it->second, x)) throw ConfigError(key, "not a finite number: '" + it->second + "'");
    return x;
  }

  long integer(const std::string& key, long def) const {
    const auto it = params.find(key);
    if (it == params.end()) return def;
    long x = 0;
    const auto& s = it->second;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(key, "not an integer: '" + s + "'");
    return x;
  }

  /// Comma-separated numbers.
  std::vector<double> list(const std::string& key, std::vector<double> def) const {
    const auto it = params.find(key);
    if (it == params.end()) return def;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      double x = 0.0;
      if (!detail::parse_double(detail::trim(item), x))
        throw ConfigError(key, "bad list entry '" + detail::trim(item) + "'");
      out.push_back(x);
    }
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  fs::path file(const std::string& key) const {
    const fs::path p = text(key, "");
    return p.is_absolute() ? p : base_dir / p;
  }

  void validate() const;
};

// ---------------------------------------------------------------------------
// Parameter tables.

namespace detail {

enum class ParamType { real, integer, list, text };

inline const std::map<std::string, ParamType>& param_types() {
  static const std::map<std::string, ParamType> t = {
      {"neck", ParamType::real},       {"necks", ParamType::list},       {"mass", ParamType::real},
      {"masses", ParamType::list},     {"window", ParamType::real},      {"v_max", ParamType::real},
      {"n_v", ParamType::integer},     {"n_u", ParamType::integer},      {"max_iter", ParamType::integer},
      {"omega", ParamType::text},      {"e_amplitude", ParamType::real}, {"e_power", ParamType::real},
      {"amplitude", ParamType::real},  {"j", ParamType::integer},        {"flavor", ParamType::text},
      {"terms", ParamType::integer},   {"j_max", ParamType::integer},    {"dim", ParamType::integer},
      {"q", ParamType::real},          {"tol", ParamType::real},         {"s_max", ParamType::real},
      {"n_s", ParamType::integer},     {"metric", ParamType::text},      {"r0", ParamType::real},
      {"table", ParamType::text},      {"tail_power", ParamType::real},  {"epsilon", ParamType::real},
  };
  return t;
}

inline const std::map<std::string, std::vector<std::string>>& allowed_params() {
  static const std::vector<std::string> construct = {"dim", "neck", "metric", "mass", "r0", "table", "tail_power",
                                                     "q", "tol", "max_iter", "s_max", "n_s", "epsilon"};
  static const std::map<std::string, std::vector<std::string>> a = {
      {"verify-expansions", {"neck", "amplitude", "mass", "e_amplitude", "e_power", "v_max", "n_v", "n_u"}},
      {"obstruction-constant", {"window"}},
      {"balance", {"neck", "mass", "masses", "omega", "v_max", "n_u"}},
      {"demo", {"neck", "necks", "masses", "v_max", "n_v", "n_u", "max_iter"}},
      {"solve-mode", {"j", "flavor", "v_max", "n_v", "terms", "j_max"}},
      {"construct", construct},
      {"rescale-check", construct},
  };
  return a;
}

inline void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ConfigError(key, why);
}

}  // namespace detail

/// Radial metric from keyword (`flat`, `schwarzschild`, `spline`) or from a
/// metric file with keys type, mass, r0, dim, table, tail_power.
inline RadialMetricSpec load_metric(const ExperimentConfig& cfg, int n) {
  const std::string m = cfg.text("metric", "schwarzschild");
  std::string type = m;
  double mass = cfg.number("mass", 2e-3), r0 = cfg.number("r0", 2.0), tail = cfg.number("tail_power", n);
  fs::path table = cfg.has("table") ? cfg.file("table") : fs::path();
  if (m != "flat" && m != "schwarzschild" && m != "spline") {
    const fs::path path = cfg.file("metric");
    std::ifstream is(path);
    if (!is) throw ConfigError("metric", "metric file '" + path.string() + "' not found");
    std::map<std::string, std::string> kv;
    try {
      for (auto& [k, v] : detail::read_key_values(is)) kv[k] = v;
    } catch (const ConfigError& e) {
      throw ConfigError("metric", std::string("in '") + path.string() + "': " + e.what());
    }
    auto num = [&](const std::string& k, double def) {
      if (!kv.count(k)) return def;
      double x = 0.0;
      if (!detail::parse_double(kv[k], x)) throw ConfigError("metric", "field '" + k + "' is not a number");
      return x;
    };
    for (const auto& [k, v] : kv)
      if (k != "type" && k != "mass" && k != "r0" && k != "dim" && k != "table" && k != "tail_power")
        throw ConfigError("metric", "unknown field '" + k + "' in '" + path.string() + "'");
    type = kv.count("type") ? kv["type"] : "";
    mass = num("mass", mass);
    r0 = num("r0", r0);
    tail = num("tail_power", tail);
    if (kv.count("dim") && static_cast<int>(num("dim", n)) != n)
      throw ConfigError("metric", "file dimension " + kv["dim"] + " differs from dim = " + std::to_string(n));
    if (kv.count("table")) {
      const fs::path t = kv["table"];
      table = t.is_absolute() ? t : path.parent_path() / t;
    }
  }
  detail::require(r0 > 0.0, "r0", "must be positive");
  if (type == "flat") return flat_radial_metric(n, r0);
  if (type == "schwarzschild") {
    detail::require(mass >= 0.0, "mass", "must be nonnegative");
    return schwarzschild_radial_metric(mass, n, r0);
  }
  if (type == "spline") {
    detail::require(!table.empty(), "table", "spline metric needs a table file");
    std::ifstream ts(table);
    if (!ts) throw ConfigError("table", "file '" + table.string() + "' not found");
    std::string line;
    std::getline(ts, line);
    std::vector<double> r, h;
    while (std::getline(ts, line)) {
      if (detail::trim(line).empty()) continue;
      const auto comma = line.find(',');
      double a = 0.0, b = 0.0;
      if (comma == std::string::npos || !detail::parse_double(detail::trim(line.substr(0, comma)), a) ||
          !detail::parse_double(detail::trim(line.substr(comma + 1)), b))
        throw ConfigError("table", "malformed row '" + line + "'");
      r.push_back(a);
      h.push_back(b);
    }
    detail::require(tail > 0.0, "tail_power", "must be positive");
    try {
      return spline_radial_metric(n, r0, r, h, tail);
    } catch (const std::exception& e) {
      throw ConfigError("table", e.what());
    }
  }
  throw ConfigError("metric", "type must be flat, schwarzschild or spline (got '" + type + "')");
}

inline void ExperimentConfig::validate() const {
  using detail::require;
  const auto& kinds = experiment_kinds();
  if (kind.empty()) throw ConfigError("kind", "missing");
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw ConfigError("kind", "unknown kind '" + kind + "'");
  const auto& allowed = detail::allowed_params().at(kind);
  for (const auto& [k, v] : params) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError(k, "not a parameter of kind '" + kind + "'");
    switch (detail::param_types().at(k)) {
      case detail::ParamType::real: number(k, 0.0); break;
      case detail::ParamType::integer: integer(k, 0); break;
      case detail::ParamType::list: list(k, {}); break;
      case detail::ParamType::text: break;
    }
  }
  require(!out_dir.empty(), "out", "empty output directory");

  auto positive = [&](const std::string& k) {
    if (has(k)) require(number(k, 1.0) > 0.0, k, "must be positive");
  };
  auto positive_list = [&](const std::string& k) {
    if (has(k))
      for (double x : list(k, {})) require(x > 0.0, k, "entries must be positive");
  };
  for (const char* k : {"neck", "v_max", "s_max", "tol", "e_power", "r0", "tail_power", "epsilon"}) positive(k);
  positive_list("necks");
  positive_list("masses");
  if (has("mass")) require(number("mass", 0.0) >= 0.0, "mass", "must be nonnegative");
  if (has("n_u")) require(integer("n_u", 1) >= 1, "n_u", "must be at least 1");
  if (has("max_iter")) require(integer("max_iter", 1) >= 1, "max_iter", "must be at least 1");
  if (has("n_v")) require(integer("n_v", 5) >= 5, "n_v", "must be at least 5");

  if (kind == "obstruction-constant" && has("window")) require(number("window", 40) > 1.0, "window", "must exceed 1");
  if (kind == "balance") {
    require(!(has("mass") && has("masses")), "masses", "give either mass or masses");
    const std::string om = text("omega", "sech");
    if (om != "zero" && om != "sech")
      require(fs::exists(file("omega")), "omega", "file '" + file("omega").string() + "' not found");
  }
  if (kind == "demo") require(!(has("neck") && has("necks")), "necks", "give either neck or necks");
  if (kind == "solve-mode") {
    require(integer("j", 1) >= 0, "j", "must be nonnegative");
    const std::string fl = text("flavor", "cosine");
    require(fl == "cosine" || fl == "sine", "flavor", "must be cosine or sine");
    require(integer("terms", 3) >= 1, "terms", "must be at least 1");
    require(integer("j_max", 8) >= 1, "j_max", "must be at least 1");
    require(integer("n_v", 2001) % 2 == 1, "n_v", "must be odd");
  }
  if (kind == "construct" || kind == "rescale-check") {
    const int n = static_cast<int>(integer("dim", 3));
    if (n < 3) {
      try {
        check_weight(n, 0.0);
      } catch (const std::exception& e) {
        throw ConfigError("dim", e.what());
      }
    }
    if (has("q")) {
      try {
        check_weight(n, number("q", 0.0));
      } catch (const std::exception& e) {
        throw ConfigError("q", e.what());
      }
    }
    const long ns = integer("n_s", 2001);
    require(ns >= 11 && ns % 2 == 1, "n_s", "must be odd and at least 11");
    const std::string m = text("metric", "schwarzschild");
    if (m != "flat" && m != "schwarzschild" && m != "spline")
      require(fs::exists(file("metric")), "metric", "file '" + file("metric").string() + "' not found");
    if (has("table")) require(fs::exists(file("table")), "table", "file '" + file("table").string() + "' not found");
    RadialMetricSpec g;
    try {
      g = load_metric(*this, n);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("metric", e.what());
    }
    require(number("neck", 4.0) >= 2.0 * g.r0, "neck", "must be at least 2 r0 = " + std::to_string(2.0 * g.r0));
  }
}

// ---------------------------------------------------------------------------
// Report.

struct Check {
  std::string name;
  double measured = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "within": |measured - reference| <= tolerance; "at_most": measured <= reference
  Provenance provenance = Provenance::derived;
  bool pass = false;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<std::pair<std::string, std::string>> values;
  std::vector<Check> checks;
  std::vector<fs::path> artifacts;
  double wall_seconds = 0.0;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  void value(const std::string& k, double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    values.emplace_back(k, os.str());
  }
  void value(const std::string& k, const std::string& s) { values.emplace_back(k, s); }

  void within(const std::string& name, double measured, double reference, double tol, Provenance p) {
    checks.push_back({name, measured, reference, tol, "within", p, std::abs(measured - reference) <= tol});
  }
  void at_most(const std::string& name, double measured, double bound, Provenance p) {
    checks.push_back({name, measured, bound, 0.0, "at_most", p, measured <= bound});
  }
  void holds(const std::string& name, bool b, Provenance p) { within(name, b ? 1.0 : 0.0, 1.0, 0.0, p); }

  void write(std::ostream& os) const {
    os << std::setprecision(17);
    os << "kind = " << config.kind << '\n';
    os << "seed = " << config.seed << '\n';
    os << "out = " << config.out_dir.string() << '\n';
    for (const auto& [k, v] : config.params) os << "config." << k << " = " << v << '\n';
    for (const auto& [k, v] : values) os << "value." << k << " = " << v << '\n';
    for (const auto& c : checks) {
      const std::string p = "check." + c.name + ".";
      os << p << "measured = " << c.measured << '\n'
         << p << "reference = " << c.reference << '\n'
         << p << "tolerance = " << c.tolerance << '\n'
         << p << "relation = " << c.relation << '\n'
         << p << "provenance = " << to_string(c.provenance) << '\n'
         << p << "pass = " << (c.pass ? "true" : "false") << '\n';
    }
    for (const auto& a : artifacts) os << "artifact = " << a.string() << '\n';
    os << "wall_clock_seconds = " << wall_seconds << '\n';
    os << "status = " << (ok() ? "PASS" : "FAIL") << '\n';
  }
};

// ---------------------------------------------------------------------------
// Runners.

namespace detail {

/// Headered CSV with 17 significant digits.
class Csv {
 public:
  Csv(RunReport& rep, const std::string& name, const std::string& header)
      : path_(rep.config.out_dir / name), os_(path_) {
    if (!os_) throw std::runtime_error("cannot write '" + path_.string() + "'");
    os_ << header << '\n' << std::setprecision(17);
    rep.artifacts.push_back(path_);
  }
  std::ostream& os() { return os_; }
  template <class... T>
  void row(const T&... x) {
    bool first = true;
    ((os_ << (first ? "" : ",") << x, first = false), ...);
    os_ << '\n';
  }

 private:
  fs::path path_;
  std::ofstream os_;
};

inline std::string tag(const std::string& k, double x) {
  std::ostringstream os;
  os << k << '=' << x;
  return os.str();
}

inline void run_obstruction_constant(RunReport& rep) {
  const double V = rep.config.number("window", 40.0);
  const auto a = obstruction_constant(V), b = obstruction_constant(2.0 * V);
  rep.value("A", a.value);
  rep.value("scheme1", a.scheme1);
  rep.value("scheme1_tail_bound", a.scheme1_tail);
  rep.value("scheme2", a.scheme2);
  rep.value("relative_agreement", a.relative_agreement);
  rep.value("A_doubled_window", b.value);
  rep.within("two_scheme_agreement", a.relative_agreement, 0.0, 1e-8, Provenance::derived);
  rep.holds("A_positive", a.value > 0.0, Provenance::paper);
  rep.within("window_doubling", std::abs(a.value - b.value) / b.value, 0.0, 1e-8, Provenance::derived);
  Csv t(rep, "obstruction_constant.csv", "window,value,scheme1,scheme1_tail,scheme2,relative_agreement");
  for (const auto& x : {a, b}) t.row(x.window, x.value, x.scheme1, x.scheme1_tail, x.scheme2, x.relative_agreement);
  Csv g(rep, "integrand.csv", "v,integrand");
  for (int i = 0; i <= 400; ++i) g.row(0.025 * i, obstruction_integrand(0.025 * i));
}

/// Rotationally symmetric Omega from a `v,omega,domega,ddomega` table;
/// cubic Hermite in value, linear in the second derivative, zero outside.
inline JetFunction load_omega_profile(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw ConfigError("omega", "cannot open '" + p.string() + "'");
  std::string line;
  std::getline(is, line);
  std::vector<std::array<double, 4>> rows;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::array<double, 4> r{};
    std::string item;
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(ss, item, ',') || !parse_double(trim(item), r[k]))
        throw ConfigError("omega", "malformed row '" + line + "'");
    }
    if (!rows.empty() && !(r[0] > rows.back()[0])) throw ConfigError("omega", "v must increase");
    rows.push_back(r);
  }
  if (rows.size() < 4) throw ConfigError("omega", "need at least 4 rows");
  return [rows](double, double v) -> FieldJet {
    if (v < rows.front()[0] || v > rows.back()[0]) return {};
    auto it = std::upper_bound(rows.begin(), rows.end(), v, [](double x, const auto& r) { return x < r[0]; });
    const std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - rows.begin(), 1), rows.size() - 1) - 1;
    const auto &a = rows[i], &b = rows[i + 1];
    const double h = b[0] - a[0], t = (v - a[0]) / h;
    const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
    const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
    const double d00 = (6 * t * t - 6 * t) / h, d10 = 3 * t * t - 4 * t + 1, d01 = -d00, d11 = 3 * t * t - 2 * t;
    FieldJet j;
    j.value = h00 * a[1] + h10 * h * a[2] + h01 * b[1] + h11 * h * b[2];
    j.dv = d00 * a[1] + d10 * a[2] + d01 * b[1] + d11 * b[2];
    j.dvv = (1 - t) * a[3] + t * b[3];
    return j;
  };
}

inline void run_balance(RunReport& rep) {
  const auto& cfg = rep.config;
  const CatenoidSpec spec(cfg.number("neck", 10.0));
  const auto masses = cfg.has("mass") ? std::vector<double>{cfg.number("mass", 1e-3)}
                                      : cfg.list("masses", {1e-2, 1e-3, 1e-4, 1e-5});
  const std::string om = cfg.text("omega", "sech");
  BalanceOptions opt;
  opt.v_max = cfg.number("v_max", opt.v_max);
  opt.n_u = static_cast<std::size_t>(cfg.integer("n_u", static_cast<long>(opt.n_u)));
  const double A = obstruction_constant().value;
  const JetFunction file_omega = (om == "zero" || om == "sech") ? JetFunction{} : load_omega_profile(cfg.file("omega"));
  rep.value("A", A);
  rep.value("omega", om);

  Csv t(rep, "balance.csv",
        "mass,main_term,main_error,normal_diff,logf_diff,lhs_integral,balance,identity_defect,residual,ratio,verdict");
  std::vector<double> ms, main_err, nd, ld;
  double C = 0.0;
  for (double m : masses) {
    JetFunction omega = file_omega;
    if (om == "sech")
      omega = [m](double, double v) {
        const double s = sech(v), th = std::tanh(v);
        return FieldJet{m * s, 0, -m * s * th, 0, 0, m * s * (2 * th * th - 1)};
      };
    const auto r = balance_decomposition(spec, omega, m, nullptr, opt, A);
    const double err = std::abs(r.main_term + A * m);
    const double residual = 0.25 * std::abs(r.balance);
    t.row(m, r.main_term, err, r.normal_diff, r.logf_diff, r.lhs_integral, r.balance, r.identity_defect, residual,
          m > 0 ? residual / m : 0.0, to_string(r.verdict));
    rep.at_most(tag("identity_defect_m", m), r.identity_defect, 1e-10 * std::max(std::abs(r.balance), 1e-300),
                Provenance::derived);
    if (m > 0) {
      ms.push_back(m);
      main_err.push_back(err);
      nd.push_back(std::abs(r.normal_diff));
      ld.push_back(std::abs(r.logf_diff));
      C = std::max(C, err * spec.neck / (m * m));
    }
    if (om == "zero")
      rep.holds(tag("difference_terms_vanish_m", m), r.normal_diff == 0.0 && r.logf_diff == 0.0, Provenance::paper);
  }
  rep.value("C_main", C);
  if (ms.size() >= 3) {
    const auto f = fit_loglog(ms, main_err);
    rep.value("main_error_slope", f.slope);
    rep.within("main_error_slope", f.slope, 2.0, 0.1, Provenance::paper);
    if (om == "sech") {
      const auto a = fit_loglog(ms, nd), b = fit_loglog(ms, ld);
      rep.within("normal_diff_slope", a.slope, 2.0, 0.1, Provenance::derived);
      rep.within("logf_diff_slope", b.slope, 2.0, 0.1, Provenance::derived);
    }
  }
}

inline void run_demo(RunReport& rep) {
  const auto& cfg = rep.config;
  const auto necks = cfg.has("neck") ? std::vector<double>{cfg.number("neck", 10.0)} : cfg.list("necks", {10.0, 20.0});
  auto masses = cfg.list("masses", {1e-2, 1e-3, 1e-4});
  DemoOptions opt;
  opt.v_max = cfg.number("v_max", opt.v_max);
  opt.n_v = static_cast<std::size_t>(cfg.integer("n_v", static_cast<long>(opt.n_v)));
  opt.n_u = static_cast<std::size_t>(cfg.integer("n_u", static_cast<long>(opt.n_u)));
  opt.max_iter = static_cast<int>(cfg.integer("max_iter", opt.max_iter));
  Csv t(rep, "demo.csv", "neck,mass,residual,ratio,h_norm,h_norm_initial,omega_c2b,iterations,diverged,verdict");
  std::vector<double> sorted = masses;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() > 3) sorted.resize(3);
  for (double c : necks) {
    const auto d = obstruction_demo(c, masses, opt);
    rep.value(tag("A_neck", c), d.A);
    rep.value(tag("c_bar_neck", c), d.c_bar);
    rep.value(tag("C_balance_neck", c), d.C_balance);
    rep.value(tag("fitted_C_neck", c), d.fitted_C);
    rep.value(tag("verdict_neck", c), to_string(d.verdict));
    for (const auto& r : d.rows) {
      t.row(c, r.mass, r.residual, r.ratio, r.h_norm, r.h_norm_initial, r.omega_c2b, r.iterations,
            r.diverged ? 1 : 0, to_string(r.verdict));
      if (std::find(sorted.begin(), sorted.end(), r.mass) != sorted.end())
        rep.within(tag("ratio_neck", c) + tag("_m", r.mass), r.ratio, d.A, 0.1 * d.A, Provenance::derived);
    }
    rep.holds(tag("obstructed_neck", c), d.verdict == Verdict::obstructed, Provenance::paper);
  }
}

inline void run_verify_expansions(RunReport& rep) {
  const auto& cfg = rep.config;
  const CatenoidSpec spec(cfg.number("neck", 10.0));
  const double a = cfg.number("amplitude", 1.0);
  // a sech v (1 + cos(u) / 2)
  const JetFunction omega = [a](double u, double v) {
    const double s = sech(v), th = std::tanh(v), cu = std::cos(u), su = std::sin(u), w = 1 + 0.5 * cu;
    return FieldJet{a * s * w, -0.5 * a * s * su, -a * s * th * w, -0.5 * a * s * cu, 0.5 * a * s * th * su,
                    a * s * (2 * th * th - 1) * w};
  };
  ExpansionOptions opt;
  opt.v_max = cfg.number("v_max", opt.v_max);
  opt.n_v = static_cast<std::size_t>(cfg.integer("n_v", static_cast<long>(opt.n_v)));
  opt.n_u = static_cast<std::size_t>(cfg.integer("n_u", static_cast<long>(opt.n_u)));
  Metric3 g(cfg.number("mass", 0.01), 1e-3);
  const double ea = cfg.number("e_amplitude", 0.0);
  if (ea != 0.0) g.with_radial_power(ea, cfg.number("e_power", 2.0));
  const auto r = verify_expansion_orders(spec, omega, &g, opt);
  rep.value("h_slope", r.h_fit.slope);
  rep.value("a2_slope", r.a2_fit.slope);
  rep.value("m_slope", r.m_fit.slope);
  rep.value("weighted_metric_residual", r.weighted_metric_residual);
  rep.value("conformal_discrepancy", r.conformal_discrepancy);
  rep.within("h_remainder_slope", r.h_fit.slope, 2.0, 0.1, Provenance::derived);
  rep.within("a2_remainder_slope", r.a2_fit.slope, 2.0, 0.1, Provenance::derived);
  rep.within("m_remainder_slope", r.m_fit.slope, 2.0, 0.1, Provenance::derived);
  if (ea == 0.0) rep.within("conformal_route", r.conformal_discrepancy, 0.0, 1e-8, Provenance::trivial);
  Csv t(rep, "expansions.csv", "series,x,remainder");
  for (std::size_t i = 0; i < r.t.size(); ++i) t.row("H_t", r.t[i], r.h_remainder[i]);
  for (std::size_t i = 0; i < r.t.size(); ++i) t.row("A2_t", r.t[i], r.a2_remainder[i]);
  for (std::size_t i = 0; i < r.m.size(); ++i) t.row("H_m", r.m[i], r.hm_remainder[i]);
  Csv w(rep, "weighted_residual.csv", "v,weighted_residual");
  for (std::size_t i = 0; i < r.weighted_profile.size(); ++i)
    w.row(-opt.v_max + 2.0 * opt.v_max * i / (opt.n_v - 1), r.weighted_profile[i]);
}

inline void run_solve_mode(RunReport& rep) {
  const auto& cfg = rep.config;
  const int j = static_cast<int>(cfg.integer("j", 1));
  const auto flavor = cfg.text("flavor", "cosine") == "sine" ? ModeFlavor::sine : ModeFlavor::cosine;
  const double V = cfg.number("v_max", 20.0);
  const auto n_v = static_cast<std::size_t>(cfg.integer("n_v", 2001));
  const int terms = static_cast<int>(cfg.integer("terms", 3));
  const int j_max = static_cast<int>(cfg.integer("j_max", 8));
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), width(0.5, 2.0), centre(-3.0, 3.0);

  // manufactured Omega = sum a exp(-b (v - v0)^2), Gamma = Omega'' - j^2 Omega
  struct Bump {
    double a, b, v0;
  };
  std::vector<Bump> bumps;
  for (int k = 0; k < terms; ++k) {
    const double x = amp(rng), y = width(rng), z = centre(rng);
    bumps.push_back({x, y, z});
  }
  auto exact = [bumps](double v) {
    double s = 0.0;
    for (const auto& b : bumps) s += b.a * std::exp(-b.b * (v - b.v0) * (v - b.v0));
    return s;
  };
  auto gamma = [bumps, j](double v) {
    double s = 0.0;
    for (const auto& b : bumps) {
      const double x = v - b.v0, g = b.a * std::exp(-b.b * x * x);
      s += (4 * b.b * b.b * x * x - 2 * b.b - j * j) * g;
    }
    return s;
  };
  const auto p = ModeProblem::from_function(j, gamma, V, n_v, flavor);
  const ModeSolution sol = j == 0 ? solve_mode_zero(p).solution : solve_mode_j(p);
  double err = 0.0;
  Csv t(rep, "mode_solution.csv", "v,omega,exact,gamma");
  for (std::size_t i = 0; i < sol.v.size(); ++i) {
    err = std::max(err, std::abs(sol.omega[i] - exact(sol.v[i])));
    t.row(sol.v[i], sol.omega[i], exact(sol.v[i]), gamma(sol.v[i]));
  }
  rep.value("manufactured_error", err);
  rep.value("ode_residual", sol.ode_residual);
  rep.within("manufactured_solution", err, 0.0, 1e-8, Provenance::derived);

  // random band-limited field for Parseval
  const CylinderGrid grid(6.0, 121, 2 * static_cast<std::size_t>(j_max) + 4);
  std::vector<double> ca(j_max + 1), sa(j_max + 1);
  for (int k = 0; k <= j_max; ++k) {
    ca[k] = amp(rng);
    sa[k] = k == 0 ? 0.0 : amp(rng);
  }
  const auto field = PerturbationField::sample(grid, [&](double u, double v) {
    double s = 0.0;
    for (int k = 0; k <= j_max; ++k) s += ca[k] * std::cos(k * u) + sa[k] * std::sin(k * u);
    return s * std::exp(-0.5 * v * v);
  });
  const auto spec_modes = fourier_decompose(field, j_max);
  const double pd = parseval_defect(field, spec_modes), rec = reconstruction_error(field, spec_modes);
  rep.value("parseval_defect", pd);
  rep.value("reconstruction_error", rec);
  rep.within("parseval", pd, 0.0, 1e-10, Provenance::derived);
  rep.within("reconstruction", rec, 0.0, 1e-10, Provenance::derived);

  // integration by parts against psi0: decaying field and psi0 itself
  const CatenoidSpec spec(1.0);
  const JetFunction decaying = [](double u, double v) {
    const double sh = sech(v), th = std::tanh(v), p = std::pow(sh, 0.9), cu = std::cos(u), w = 1 + 0.5 * cu;
    const double dp = -0.9 * th * p, ddp = p * (0.81 * th * th - 0.9 * sh * sh);
    return FieldJet{p * w, -0.5 * p * std::sin(u), dp * w, -0.5 * p * cu, -0.5 * dp * std::sin(u), ddp * w};
  };
  const JetFunction psi = [](double, double v) {
    const double th = std::tanh(v), sh = sech(v), s2 = sh * sh;  // 1 - tanh^2 cancels badly
    return FieldJet{psi0(v), 0, -th - v * s2, 0, 0, -2 * s2 + 2 * v * th * s2};
  };
  const auto d = integration_by_parts_check(spec, decaying);
  const auto q = integration_by_parts_check(spec, psi);
  Csv ib(rep, "integration_by_parts.csv", "field,window,residual,boundary");
  for (std::size_t i = 0; i < d.windows.size(); ++i) ib.row("decaying", d.windows[i], d.residuals[i], d.boundary[i]);
  for (std::size_t i = 0; i < q.windows.size(); ++i) ib.row("psi0", q.windows[i], q.residuals[i], q.boundary[i]);
  rep.value("ibp_decaying_rate", d.residual_rate);
  rep.value("ibp_psi0_message", q.message);
  rep.holds("ibp_decaying_converges", d.converges_to_zero, Provenance::derived);
  rep.holds("ibp_psi0_hypothesis_flagged", !q.hypothesis_ok, Provenance::derived);
}

inline ConstructOptions construct_options(const ExperimentConfig& cfg, int n) {
  ConstructOptions opt;
  opt.q = cfg.number("q", default_weight(n));
  opt.tol = cfg.number("tol", opt.tol);
  opt.max_iter = static_cast<int>(cfg.integer("max_iter", opt.max_iter));
  opt.s_max = cfg.number("s_max", opt.s_max);
  opt.n_s = static_cast<std::size_t>(cfg.integer("n_s", static_cast<long>(opt.n_s)));
  opt.epsilon = cfg.number("epsilon", opt.epsilon);
  return opt;
}

inline void run_construct(RunReport& rep) {
  const auto& cfg = rep.config;
  const int n = static_cast<int>(cfg.integer("dim", 3));
  const double c = cfg.number("neck", 4.0);
  const RadialMetricSpec g = load_metric(cfg, n);
  const auto opt = construct_options(cfg, n);
  const auto r = newton_construct(n, g, c, opt);
  rep.value("metric_kind", g.kind);
  rep.value("metric_norm", r.metric_norm);
  rep.value("q", r.q);
  rep.value("iterations", r.iterations);
  rep.value("converged", r.converged ? "true" : "false");
  rep.value("residual_H", r.residual_H);
  rep.value("residual_H_conformal", r.residual_H_conformal);
  rep.value("discretization_floor", r.discretization_floor);
  rep.value("contraction_max",
            r.contraction.empty() ? 0.0 : *std::max_element(r.contraction.begin(), r.contraction.end()));
  rep.value("quadratic_ratio_max", r.quadratic_ratio_max);
  rep.value("decay_rate", r.decay_rate);
  rep.value("message", r.message);
  if (!r.warning.empty()) rep.value("warning", r.warning);
  {
    Csv t(rep, "omega.csv", "s,omega,domega,ddomega");
    for (std::size_t i = 0; i < r.s.size(); ++i) t.row(r.s[i], r.omega[i], r.domega[i], r.ddomega[i]);
  }
  {
    Csv h(rep, "newton_history.csv", "iteration,residual_H");
    for (std::size_t k = 0; k < r.newton_history.size(); ++k) h.row(k, r.newton_history[k]);
  }
  rep.holds("converged", r.converged, g.flat() ? Provenance::trivial : Provenance::derived);
  rep.at_most("residual_H", r.residual_H, opt.tol, g.flat() ? Provenance::trivial : Provenance::derived);
  if (g.flat()) {
    rep.within("iterations", r.iterations, 1.0, 0.0, Provenance::trivial);
  } else {
    rep.at_most("discretization_floor", r.discretization_floor, opt.tol, Provenance::derived);
    rep.within("decay_rate", r.decay_rate, -0.5 * (n - 2), 0.5 * (n - 2), Provenance::derived);
    rep.holds("smallness", r.smallness_ok, Provenance::paper);
  }
}

inline void run_rescale_check(RunReport& rep) {
  const auto& cfg = rep.config;
  const int n = static_cast<int>(cfg.integer("dim", 3));
  const double c = cfg.number("neck", 4.0);
  const RadialMetricSpec g = load_metric(cfg, n);
  const auto opt = construct_options(cfg, n);
  const auto rc = rescale_check(n, g, c, opt);
  const auto red = rescale_reduce(g, c);
  rep.value("factor", rc.factor);
  rep.value("canonical_neck", red.canonical_neck);
  rep.value("rescaled_metric_norm", red.metric.norm_Mk);
  rep.value("sup_difference", rc.sup_difference);
  rep.within("round_trip", rc.sup_difference, 0.0, 1e-7, Provenance::derived);
  rep.at_most("rescaled_smallness", effective_metric_norm(g, c), opt.epsilon, Provenance::paper);
  Csv t(rep, "rescale.csv", "s,omega_direct,omega_canonical_over_factor");
  for (std::size_t i = 0; i < rc.direct.s.size(); ++i) t.row(rc.direct.s[i], rc.direct.omega[i], rc.canonical.omega[i] / rc.factor);
}

}  // namespace detail

/// Validates, dispatches, writes CSV tables and `report.txt` under out_dir.
/// Module failures are rethrown with the experiment kind as context.
inline RunReport run(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  rep.config = cfg;
  fs::create_directories(cfg.out_dir);
  try {
    if (cfg.kind == "obstruction-constant") detail::run_obstruction_constant(rep);
    else if (cfg.kind == "balance") detail::run_balance(rep);
    else if (cfg.kind == "demo") detail::run_demo(rep);
    else if (cfg.kind == "verify-expansions") detail::run_verify_expansions(rep);
    else if (cfg.kind == "solve-mode") detail::run_solve_mode(rep);
    else if (cfg.kind == "construct") detail::run_construct(rep);
    else if (cfg.kind == "rescale-check") detail::run_rescale_check(rep);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("experiment '" + cfg.kind + "': " + e.what());
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const fs::path rp = cfg.out_dir / "report.txt";
  rep.artifacts.push_back(rp);
  std::ofstream os(rp);
  if (!os) throw std::runtime_error("cannot write '" + rp.string() + "'");
  rep.write(os);
  return rep;
}

}  // namespace catenoid::harness
