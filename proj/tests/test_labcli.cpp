#include <catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "contactlab/cli.hpp"

using namespace contactlab;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

// Small grids; every certificate still passes at these densities.
constexpr const char* kFastConfig = R"({
  "grid": {"n2": 32, "n3": 12, "n4": 8, "random_points": 100},
  "s_values": [0, 0.5, 1]
})";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("contactlab-test-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  [[nodiscard]] std::string file(const std::string& name, const std::string& text) const {
    const auto p = path / name;
    std::ofstream(p) << text;
    return p.string();
  }
  [[nodiscard]] std::string at(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "contactlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> csv_rows(const std::string& csv, std::string* header = nullptr) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config parsing", "[labcli]") {
  SECTION("empty text gives the defaults") {
    const auto c = parse_config("  \n");
    CHECK(c.suite == "all");
    CHECK(c.profile.amplitude == 1.0);
    CHECK(c.profile.r_star == 7.0 / 12);
    CHECK(c.delta == 0.125);
    CHECK(c.s_values.size() == 11);
    CHECK(c.grid.n4 == 24);
  }
  SECTION("syntax errors carry line and column") {
    const auto msg = config_error("{\n  \"suite\": \"lutz\",\n  \"seed\": ]\n}");
    CHECK_THAT(msg, ContainsSubstring("line 3"));
    CHECK_THAT(msg, ContainsSubstring("column 11"));
  }
  SECTION("unknown fields are named with their path") {
    CHECK_THAT(config_error(R"({"grid": {"n5": 3}})"), ContainsSubstring("grid.n5"));
    CHECK_THAT(config_error(R"({"colour": 1})"), ContainsSubstring("colour"));
  }
  SECTION("out-of-range values name the field") {
    CHECK_THAT(config_error(R"({"grid": {"random_points": -4}})"), ContainsSubstring("grid.random_points"));
    CHECK_THAT(config_error(R"({"grid": {"n2": 1}})"), ContainsSubstring("grid.n2"));
    CHECK_THAT(config_error(R"({"lutz": {"delta": 0.3}})"), ContainsSubstring("lutz.delta"));
    CHECK_THAT(config_error(R"({"s_values": [0, 1.5]})"), ContainsSubstring("s_values[1]"));
    CHECK_THAT(config_error(R"({"tolerances": {"even": 0}})"), ContainsSubstring("tolerances.even"));
    CHECK_THAT(config_error(R"({"profile": {"support": [0.6, 0.5]}})"), ContainsSubstring("profile.support"));
    CHECK_THAT(config_error(R"({"suite": "reeb"})"), ContainsSubstring("suite"));
  }
  SECTION("resolved config round-trips") {
    const auto c = parse_config(R"({"profile": {"r_star": 0.6}, "seed": 42, "s_values": [0.25]})");
    const auto again = config_from_json(to_json(c));
    CHECK(to_json(again) == to_json(c));
    CHECK(again.grid.seed == 42);
    CHECK(again.profile.r_star == 0.6);
  }
}

TEST_CASE("report serialization", "[labcli]") {
  const auto cfg = parse_config(kFastConfig);
  const auto rep = cli::run_lab(cfg);
  SECTION("every check carries a tolerance, relation and witness") {
    REQUIRE_FALSE(rep.checks.empty());
    for (const auto& e : rep.checks) {
      INFO(e.suite << '/' << e.check.name);
      CHECK_FALSE(e.check.witness.empty());
      CHECK_FALSE(e.check.relation.empty());
      CHECK(std::isfinite(e.check.tolerance));
    }
    CHECK(rep.pass());
  }
  SECTION("round trip through JSON") {
    const auto text = dump_report(rep);
    const auto back = read_report(text);
    CHECK(dump_report(back) == text);
    CHECK(back.version == "v1");
    CHECK(back.find("lutz", "lutz.legendrian_K"));
  }
  SECTION("schema version mismatch is rejected") {
    auto j = to_json(rep);
    j["version"] = "v0";
    CHECK_THROWS_AS(report_from_json(j), SchemaVersionError);
  }
  SECTION("non-finite values survive as strings") {
    Report r;
    r.checks.push_back({"x", CheckResult::make("nan", std::nan(""), "<", 1.0)});
    r.checks.push_back({"x", CheckResult::make("inf", INFINITY, ">", 1.0)});
    const auto back = read_report(dump_report(r));
    CHECK(std::isnan(back.checks[0].check.value));
    CHECK(back.checks[1].check.value == INFINITY);
    CHECK_FALSE(back.pass());
  }
  SECTION("identical config and seed give identical reports") {
    const auto again = cli::run_lab(cfg);
    CHECK(dump_without_timing(again) == dump_without_timing(rep));
  }
}

TEST_CASE("exit codes", "[labcli]") {
  TempDir tmp;
  const auto fast = tmp.file("fast.json", kFastConfig);
  SECTION("0 on pass, report written") {
    const auto r = invoke({"run", "--config", fast, "--out", tmp.at("out/report.json")});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("status: pass"));
    const auto rep = read_report(slurp(tmp.at("out/report.json")));
    CHECK(rep.pass());
    CHECK(rep.config.at("grid").at("n4") == 8);
  }
  SECTION("1 on a failing check") {
    const auto cfg = tmp.file("bad.json", R"({"suite": "turbulisation", "profile": {"r_star": 0.7},
      "grid": {"n2": 32, "n3": 12, "n4": 8, "random_points": 100}, "s_values": [0]})");
    const auto r = invoke({"run", "--config", cfg, "--out", tmp.at("bad-report.json")});
    CHECK(r.code == 1);
    CHECK_THAT(r.out, ContainsSubstring("FAIL turbulisation/transversality[s=0]"));
    const auto rep = read_report(slurp(tmp.at("bad-report.json")));
    CHECK_FALSE(rep.find("turbulisation", "transversality[s=0]")->check.pass);
  }
  SECTION("2 on config and usage errors") {
    CHECK(invoke({"run", "--config", tmp.file("syntax.json", "{ \"suite\": ")}).code == 2);
    CHECK(invoke({"run", "--config", tmp.at("missing.json")}).code == 2);
    CHECK(invoke({"run", "--suite", "nope"}).code == 2);
    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"plot", "--figure", "fig9"}).code == 2);
    const auto r = invoke({"validate-config", "--config", tmp.file("neg.json", R"({"grid": {"n3": -1}})")});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("grid.n3"));
  }
  SECTION("3 when the report cannot be written") {
    const auto blocker = tmp.file("blocker", "not a directory");
    const auto r = invoke({"run", "--config", fast, "--suite", "lutz", "--out", blocker + "/report.json"});
    CHECK(r.code == 3);
  }
  SECTION("help and validate-config") {
    CHECK(invoke({"--help"}).code == 0);
    const auto r = invoke({"validate-config", "--config", fast});
    CHECK(r.code == 0);
    CHECK(json::parse(r.out).at("grid").at("random_points") == 100);
  }
}

TEST_CASE("figures", "[labcli]") {
  const LabConfig cfg;
  SECTION("ids") {
    for (const auto& id : plot::figure_ids()) {
      const auto f = plot::render(id, cfg);
      CHECK(f.id == id);
      CHECK_THAT(f.svg, ContainsSubstring("<svg"));
      CHECK_THAT(f.svg, ContainsSubstring("</svg>"));
      CHECK_FALSE(f.csv.empty());
    }
    CHECK_THROWS_AS(plot::render("fig3", cfg), std::invalid_argument);
  }
  SECTION("fig1: identity off [1/2, 2/3], below the diagonal inside") {
    std::string header;
    const auto rows = csv_rows(plot::render("fig1-compression", cfg).csv, &header);
    CHECK(header == "r,f");
    CHECK(rows.size() == 2048);
    for (const auto& row : rows) {
      if (row[0] <= 0.5 || row[0] >= 2.0 / 3)
        CHECK(std::abs(row[1] - row[0]) < 1e-10);
      else
        CHECK(row[1] <= row[0]);
    }
  }
  SECTION("fig2: F_0 is horizontal at r_*") {
    std::string header;
    const auto rows = csv_rows(plot::render("fig2-linefields", cfg).csv, &header);
    CHECK(header == "s,t,r,F_r,F_t,L_r,L_t");
    std::size_t at_rs = 0;
    for (const auto& row : rows) {
      CHECK_THAT(std::hypot(row[3], row[4]), WithinAbs(1.0, 1e-12));
      if (row[0] == 0.0 && std::abs(row[2] - 7.0 / 12) < 1e-15) {
        ++at_rs;
        CHECK(std::abs(row[3]) < 1e-15);
        CHECK_THAT(row[5], WithinAbs(-1.0, 1e-15));
      }
      if (row[0] == 1.0) CHECK(row[3] == 1.0);
    }
    CHECK(at_rs > 0);
  }
  SECTION("lutz profile: sign changes of f at 1/4, 3/4 and of g at 1/2, 1 - delta") {
    std::string header;
    const auto rows = csv_rows(plot::render("lutz-profile", cfg).csv, &header);
    CHECK(header == "r,f,g");
    // Sign changes between consecutive nonzero values, in the order of r.
    std::vector<double> f_cross, g_cross;
    for (std::size_t col : {1u, 2u}) {
      auto& out = col == 1 ? f_cross : g_cross;
      double last = 0.0;
      double prev_r = -1.0;
      for (const auto& row : rows) {
        REQUIRE(row[0] >= prev_r);
        prev_r = row[0];
        if (row[col] == 0.0) continue;
        if (last != 0.0 && (last > 0) != (row[col] > 0)) out.push_back(row[0]);
        last = row[col];
      }
    }
    REQUIRE(f_cross.size() == 2);
    CHECK_THAT(f_cross[0], WithinAbs(0.25, 1e-3));
    CHECK_THAT(f_cross[1], WithinAbs(0.75, 1e-3));
    REQUIRE(g_cross.size() >= 2);
    CHECK_THAT(g_cross[0], WithinAbs(0.5, 1e-3));
    CHECK_THAT(g_cross[1], WithinAbs(0.875, 1e-3));
  }
  SECTION("plot writes SVG and CSV side by side") {
    TempDir tmp;
    const auto r = invoke({"plot", "--figure", "ot-disc", "--out", tmp.at("figs/ot.svg")});
    CHECK(r.code == 0);
    CHECK(fs::exists(tmp.at("figs/ot.svg")));
    CHECK(fs::exists(tmp.at("figs/ot.csv")));
  }
}
