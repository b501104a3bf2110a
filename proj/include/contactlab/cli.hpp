#pragma once

// contactlab command line: run | plot | validate-config.

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "contactlab/report.hpp"
#include "contactlab/svg.hpp"

namespace contactlab::cli {

enum Exit : int { kPass = 0, kCheckFailed = 1, kConfigError = 2, kIoError = 3 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the selected suites (concurrently) and assembles the report.
inline Report run_lab(const LabConfig& cfg) {
  std::vector<std::future<SuiteReport>> jobs;
  if (cfg.runs("turbulisation"))
    jobs.push_back(std::async(std::launch::async, [c = cfg.turbulisation_config()] { return turbulisation::turbulisation_suite(c); }));
  if (cfg.runs("lutz"))
    jobs.push_back(std::async(std::launch::async, [c = cfg.lutz_config()] { return lutz::lutz_suite(c); }));
  std::vector<SuiteReport> suites;
  for (auto& j : jobs) suites.push_back(j.get());
  return assemble_report(cfg, suites);
}

inline void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline void print_check(std::ostream& os, const ReportEntry& e) {
  const auto& c = e.check;
  os << (c.pass ? "PASS " : "FAIL ") << e.suite << '/' << c.name << "  value=" << c.value << ' ' << c.relation << ' '
     << c.tolerance;
  if (!c.witness.empty()) {
    os << "  at";
    for (const auto& [k, v] : c.witness) os << ' ' << k << '=' << v;
  }
  os << '\n';
}

/// Entry point; returns the process exit status.
inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Verification suites and figures for the contact-structure constructions", "contactlab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string suite;
  std::string figure;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run the verification suites and write a JSON report");
  run->add_option("--config", config_path, "config file (JSON)");
  run->add_option("--out", out_path, "report path (overrides output.report)");
  run->add_option("--suite", suite, "turbulisation | lutz | all")->check(CLI::IsMember({"turbulisation", "lutz", "all"}));
  run->add_option("--seed", seed, "random-sample seed");

  auto* plot_cmd = app.add_subcommand("plot", "write a figure as SVG plus CSV series");
  plot_cmd->add_option("--figure", figure, "figure id")->required();
  plot_cmd->add_option("--config", config_path, "config file (JSON)");
  plot_cmd->add_option("--out", out_path, "SVG path (default <figures>/<id>.svg)");

  auto* validate = app.add_subcommand("validate-config", "parse and validate a config, print the resolved form");
  validate->add_option("--config", config_path, "config file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "contactlab: " << e.what() << '\n';
    return kConfigError;
  }

  LabConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "contactlab: " << e.what() << '\n';
    return kConfigError;
  }

  if (*validate) {
    out << to_json(cfg).dump(2) << '\n';
    return kPass;
  }

  if (*plot_cmd) {
    plot::Figure fig;
    try {
      fig = plot::render(figure, cfg);
    } catch (const std::invalid_argument& e) {
      err << "contactlab: " << e.what() << '\n';
      return kConfigError;
    }
    const std::string svg_path = out_path.empty() ? (std::filesystem::path(cfg.figure_dir) / (figure + ".svg")).string() : out_path;
    const std::string csv_path = std::filesystem::path(svg_path).replace_extension(".csv").string();
    try {
      write_file(svg_path, fig.svg);
      write_file(csv_path, fig.csv);
    } catch (const IoError& e) {
      err << "contactlab: " << e.what() << '\n';
      return kIoError;
    }
    out << "wrote " << svg_path << " and " << csv_path << '\n';
    return kPass;
  }

  if (!suite.empty()) cfg.suite = suite;
  if (seed) cfg.grid.seed = *seed;
  if (!out_path.empty()) cfg.report_path = out_path;

  Report rep;
  try {
    rep = run_lab(cfg);
  } catch (const std::invalid_argument& e) {
    // Parameter combinations rejected by the models themselves.
    err << "contactlab: config: " << e.what() << '\n';
    return kConfigError;
  }
  for (const auto& e : rep.checks) print_check(out, e);
  try {
    write_file(cfg.report_path, dump_report(rep));
  } catch (const IoError& e) {
    err << "contactlab: " << e.what() << '\n';
    return kIoError;
  }
  const auto failed = std::count_if(rep.checks.begin(), rep.checks.end(), [](const ReportEntry& e) { return !e.check.pass; });
  out << (rep.pass() ? "status: pass" : "status: fail") << " (" << rep.checks.size() - failed << '/' << rep.checks.size()
      << " checks passed), report: " << cfg.report_path << '\n';
  return rep.pass() ? kPass : kCheckFailed;
}

}  // namespace contactlab::cli
