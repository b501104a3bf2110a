#pragma once

// Lab configuration (JSON in) and verification reports (JSON out).

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "contactlab/lutz.hpp"
#include "contactlab/structures.hpp"
#include "contactlab/turbulisation.hpp"

namespace contactlab {

using json = nlohmann::ordered_json;

inline std::string report_schema_version() { return "v1"; }

/// Raised for malformed or invalid configuration; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a report declares a schema other than report_schema_version().
class SchemaVersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabConfig {
  std::string suite = "all";  // turbulisation | lutz | all
  turbulisation::ProfileParams profile;
  double delta = 0.125;
  double z0 = 1.0;
  std::vector<double> s_values = turbulisation::SuiteConfig::default_s_values();
  GridConfig grid;
  std::string report_path = "contactlab-report.json";
  std::string figure_dir = ".";

  [[nodiscard]] bool runs(const std::string& name) const { return suite == "all" || suite == name; }

  [[nodiscard]] turbulisation::SuiteConfig turbulisation_config() const { return {profile, s_values, grid}; }
  [[nodiscard]] lutz::SuiteConfig lutz_config() const { return {delta, z0, grid}; }
};

namespace detail {

// Line and column (1-based) of a byte offset.
inline std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config: " + (path_.empty() ? std::string("<root>") : path_) + ": " + msg);
  }

  [[noreturn]] static void fail_at(const std::string& field, const std::string& msg) {
    throw ConfigError("config: " + field + ": " + msg);
  }

  void only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        throw ConfigError("config: unknown field '" + field(k) + "'");
    }
  }

  [[nodiscard]] const json* get(const std::string& key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) const {
    if (const json* v = get(key)) {
      if (!v->is_number()) fail_at(field(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail_at(field(key), "must be finite");
    }
  }

  void count(const std::string& key, std::size_t& out, std::size_t min) const {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) fail_at(field(key), "expected an integer");
      const auto n = v->get<std::int64_t>();
      if (n < static_cast<std::int64_t>(min))
        fail_at(field(key), "must be an integer >= " + std::to_string(min) + " (got " + std::to_string(n) + ")");
      out = static_cast<std::size_t>(n);
    }
  }

  void text(const std::string& key, std::string& out) const {
    if (const json* v = get(key)) {
      if (!v->is_string()) fail_at(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  [[nodiscard]] Reader child(const std::string& key) const {
    const json* v = get(key);
    return Reader(v ? *v : empty(), field(key));
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  const json& j_;
  std::string path_;
};

inline void positive(const std::string& field, double v) {
  if (!(v > 0.0)) Reader::fail_at(field, "must be positive");
}

}  // namespace detail

/// Builds a LabConfig from parsed JSON. Missing fields keep their defaults.
inline LabConfig config_from_json(const json& j) {
  using detail::Reader;
  LabConfig c;
  const Reader root(j, "");
  root.only({"suite", "seed", "profile", "lutz", "s_values", "grid", "tolerances", "output"});

  root.text("suite", c.suite);
  if (c.suite != "all" && c.suite != "turbulisation" && c.suite != "lutz")
    Reader::fail_at("suite", "expected one of turbulisation, lutz, all (got '" + c.suite + "')");

  if (const json* s = root.get("seed")) {
    if (!s->is_number_unsigned()) Reader::fail_at("seed", "expected a non-negative integer");
    c.grid.seed = s->get<std::uint64_t>();
  }

  const Reader prof = root.child("profile");
  prof.only({"amplitude", "support", "r_star"});
  prof.number("amplitude", c.profile.amplitude);
  detail::positive("profile.amplitude", c.profile.amplitude);
  if (const json* s = prof.get("support")) {
    if (!s->is_array() || s->size() != 2 || !(*s)[0].is_number() || !(*s)[1].is_number())
      Reader::fail_at("profile.support", "expected [lo, hi]");
    c.profile.support_lo = (*s)[0].get<double>();
    c.profile.support_hi = (*s)[1].get<double>();
    if (!(c.profile.support_lo > 0.0 && c.profile.support_lo < c.profile.support_hi && c.profile.support_hi < 1.0))
      Reader::fail_at("profile.support", "need 0 < lo < hi < 1");
  }
  prof.number("r_star", c.profile.r_star);
  if (!(c.profile.r_star > 0.0 && c.profile.r_star < 1.0)) Reader::fail_at("profile.r_star", "must lie in (0, 1)");

  const Reader lz = root.child("lutz");
  lz.only({"delta", "z0"});
  lz.number("delta", c.delta);
  if (!(c.delta > 0.0 && c.delta <= 0.125)) Reader::fail_at("lutz.delta", "must lie in (0, 1/8]");
  lz.number("z0", c.z0);

  if (const json* s = root.get("s_values")) {
    if (!s->is_array() || s->empty()) Reader::fail_at("s_values", "expected a non-empty array");
    c.s_values.clear();
    for (std::size_t i = 0; i < s->size(); ++i) {
      const std::string f = "s_values[" + std::to_string(i) + "]";
      if (!(*s)[i].is_number()) Reader::fail_at(f, "expected a number");
      const double v = (*s)[i].get<double>();
      if (!(v >= 0.0 && v <= 1.0)) Reader::fail_at(f, "must lie in [0, 1]");
      c.s_values.push_back(v);
    }
  }

  const Reader grid = root.child("grid");
  grid.only({"n2", "n3", "n4", "polar_exclusion", "random_points"});
  grid.count("n2", c.grid.n2, 2);
  grid.count("n3", c.grid.n3, 2);
  grid.count("n4", c.grid.n4, 2);
  grid.count("random_points", c.grid.random_points, 1);
  grid.number("polar_exclusion", c.grid.polar_exclusion);
  if (!(c.grid.polar_exclusion >= 0.0 && c.grid.polar_exclusion < 0.25))
    Reader::fail_at("grid.polar_exclusion", "must lie in [0, 1/4)");

  const Reader tol = root.child("tolerances");
  tol.only({"contact", "even", "transversality", "leafwise", "rank", "integrability", "tangency", "legendrian",
            "frame_overlap"});
  auto& t = c.grid.tol;
  const std::pair<const char*, double*> tols[] = {
      {"contact", &t.contact},       {"even", &t.even},
      {"transversality", &t.transversality}, {"leafwise", &t.leafwise},
      {"rank", &t.rank},             {"integrability", &t.integrability},
      {"tangency", &t.tangency},     {"legendrian", &t.legendrian},
      {"frame_overlap", &t.frame_overlap}};
  for (const auto& [k, p] : tols) {
    tol.number(k, *p);
    detail::positive(std::string("tolerances.") + k, *p);
  }

  const Reader out = root.child("output");
  out.only({"report", "figures"});
  out.text("report", c.report_path);
  out.text("figures", c.figure_dir);
  return c;
}

/// Parses config text. Syntax errors carry line and column.
inline LabConfig parse_config(const std::string& text) {
  json j;
  try {
    j = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError("config: " + detail::locate(text, e.byte) + ": " + msg);
  }
  return config_from_json(j);
}

inline LabConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// The resolved configuration, every field spelled out.
inline json to_json(const LabConfig& c) {
  const auto& t = c.grid.tol;
  json j;
  j["suite"] = c.suite;
  j["seed"] = c.grid.seed;
  j["profile"] = {{"amplitude", c.profile.amplitude},
                  {"support", {c.profile.support_lo, c.profile.support_hi}},
                  {"r_star", c.profile.r_star}};
  j["lutz"] = {{"delta", c.delta}, {"z0", c.z0}};
  j["s_values"] = c.s_values;
  j["grid"] = {{"n2", c.grid.n2},
               {"n3", c.grid.n3},
               {"n4", c.grid.n4},
               {"polar_exclusion", c.grid.polar_exclusion},
               {"random_points", c.grid.random_points}};
  j["tolerances"] = {{"contact", t.contact},       {"even", t.even},
                     {"transversality", t.transversality}, {"leafwise", t.leafwise},
                     {"rank", t.rank},             {"integrability", t.integrability},
                     {"tangency", t.tangency},     {"legendrian", t.legendrian},
                     {"frame_overlap", t.frame_overlap}};
  j["output"] = {{"report", c.report_path}, {"figures", c.figure_dir}};
  return j;
}

/// One serialized check; the suite name is carried alongside.
struct ReportEntry {
  std::string suite;
  CheckResult check;
};

struct Report {
  std::string version = report_schema_version();
  json config = json::object();
  std::vector<ReportEntry> checks;

  [[nodiscard]] bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const ReportEntry& e) { return e.check.pass; });
  }
  [[nodiscard]] const ReportEntry* find(const std::string& suite, const std::string& name) const {
    for (const auto& e : checks)
      if (e.suite == suite && e.check.name == name) return &e;
    return nullptr;
  }
};

namespace detail {

// JSON has no NaN or infinity; they are written as strings.
inline json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw std::runtime_error("report: " + where + ": expected a number");
}

}  // namespace detail

/// Assembles the report: checks ordered by suite, then by check name.
inline Report assemble_report(const LabConfig& cfg, const std::vector<SuiteReport>& suites) {
  Report r;
  r.config = to_json(cfg);
  for (const auto& s : suites)
    for (const auto& c : s.checks) r.checks.push_back({s.suite, c});
  std::stable_sort(r.checks.begin(), r.checks.end(), [](const ReportEntry& a, const ReportEntry& b) {
    return a.suite != b.suite ? a.suite < b.suite : a.check.name < b.check.name;
  });
  return r;
}

inline json to_json(const Report& r) {
  json j;
  j["version"] = r.version;
  j["config"] = r.config;
  json checks = json::array();
  for (const auto& e : r.checks) {
    const auto& c = e.check;
    json w = json::object();
    for (const auto& [k, v] : c.witness) w[k] = detail::number_to_json(v);
    checks.push_back({{"suite", e.suite},
                      {"name", c.name},
                      {"status", c.pass ? "pass" : "fail"},
                      {"value", detail::number_to_json(c.value)},
                      {"relation", c.relation},
                      {"tolerance", detail::number_to_json(c.tolerance)},
                      {"witness", w},
                      {"grid", c.grid},
                      {"detail", c.detail},
                      {"wall_ms", c.wall_ms}});
  }
  j["checks"] = std::move(checks);
  j["status"] = r.pass() ? "pass" : "fail";
  return j;
}

inline std::string dump_report(const Report& r) { return to_json(r).dump(2) + "\n"; }

inline Report report_from_json(const json& j) {
  if (!j.is_object() || !j.contains("version")) throw std::runtime_error("report: missing version");
  const auto v = j.at("version").get<std::string>();
  if (v != report_schema_version())
    throw SchemaVersionError("report: schema version '" + v + "' is not supported (expected '" +
                             report_schema_version() + "')");
  Report r;
  r.version = v;
  r.config = j.at("config");
  for (const auto& c : j.at("checks")) {
    ReportEntry e;
    e.suite = c.at("suite").get<std::string>();
    auto& k = e.check;
    k.name = c.at("name").get<std::string>();
    k.pass = c.at("status").get<std::string>() == "pass";
    k.value = detail::number_from_json(c.at("value"), k.name + ".value");
    k.relation = c.at("relation").get<std::string>();
    k.tolerance = detail::number_from_json(c.at("tolerance"), k.name + ".tolerance");
    for (const auto& [wk, wv] : c.at("witness").items())
      k.witness.emplace_back(wk, detail::number_from_json(wv, k.name + ".witness." + wk));
    k.grid = c.at("grid").get<std::string>();
    k.detail = c.at("detail").get<std::string>();
    k.wall_ms = c.at("wall_ms").get<double>();
    r.checks.push_back(std::move(e));
  }
  const bool stated = j.at("status").get<std::string>() == "pass";
  if (stated != r.pass()) throw std::runtime_error("report: overall status disagrees with the checks");
  return r;
}

inline Report read_report(const std::string& text) { return report_from_json(json::parse(text)); }

/// The report with every wall-clock field zeroed, for determinism comparisons.
inline std::string dump_without_timing(const Report& r) {
  Report copy = r;
  for (auto& e : copy.checks) e.check.wall_ms = 0.0;
  return dump_report(copy);
}

}  // namespace contactlab
