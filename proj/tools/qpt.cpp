// qpt: batch runner for the quasiperiodic transport lab.
//
//   qpt <freq|edl|transport|duality-check|tailbound|qop> --config run.yaml [--out table.csv]
//       [--seed U64] [--threads N] [--quiet] [--plot-dir DIR]
//
// Exit codes: 0 ok, 2 configuration/precondition error, 3 numerical failure.

#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "qpt/experiment.hpp"

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasiperiodic operator lab: duality, localization and transport experiments"};
  app.require_subcommand(1, 1);

  std::string config_path, out_path, plot_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool quiet = false;

  for (const char* name : {"freq", "edl", "transport", "duality-check", "tailbound", "qop"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "YAML configuration (schema qpt-experiment/1)")->required();
    sub->add_option("--out", out_path, "CSV destination; default: config 'output', else stdout");
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--threads", threads, "worker threads (0: hardware concurrency)");
    sub->add_flag("--quiet", quiet, "no progress on stderr");
    sub->add_option("--plot-dir", plot_dir, "also write two-column .dat files per curve");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const qpt::Subcommand sub = *qpt::parse_subcommand(app.get_subcommands().front()->get_name());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  try {
    const qpt::ExperimentConfig config = qpt::load_config(config_path);
    if (!quiet) std::cerr << "qpt " << qpt::subcommand_name(sub) << ": " << config_path << "\n";
    const auto start = std::chrono::steady_clock::now();
    const qpt::ResultTable table = qpt::run_experiment(sub, config, {seed, threads});
    const std::string csv = table.to_csv(utc_now());

    if (out_path.empty() && config.output) out_path = *config.output;
    if (out_path.empty() || out_path == "-") {
      std::cout << csv;
    } else {
      std::ofstream out(out_path);
      if (!out) throw qpt::ConfigError("cannot write " + out_path);
      out << csv;
    }
    if (!plot_dir.empty()) {
      const std::string stem = out_path.empty() || out_path == "-"
                                   ? qpt::subcommand_name(sub)
                                   : std::filesystem::path(out_path).stem().string();
      qpt::write_plot_files(table, plot_dir, stem);
    }
    if (!quiet) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cerr << "  " << table.rows().size() << " rows in " << secs << " s"
                << (out_path.empty() ? "" : " -> " + out_path) << "\n";
    }
  } catch (const qpt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qpt::PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
