#pragma once

// Batch experiments: a versioned YAML configuration, one runner per
// subcommand, and CSV result tables with a provenance footer.
//
// Config schema (`schema: qpt-experiment/1`), all sections optional except
// the one for the subcommand being run:
//
//   seed: 42
//   potential: almost-mathieu | [{m: [1], re: 1.0, im: 0.0}, ...]
//   alpha: golden | 0.618 | [0.618, 0.414] | {quotients: [1, 2, ...]} | {beta: 0.5, depth: 10}
//   epsilon: 0.2
//   output: result.csv
//   freq:      {depth, dc: {c, tau, k_max}}
//   edl:       {window, theta_samples, check_doubling}
//   tailbound: {window, source, horizon, cutoffs, theta_samples}
//   transport: {x_samples | x: [...], source, horizons, window: auto | N, window_tol,
//               dual_window, theta_grid, c_min, gap, initial: delta | eigenvector}
//   duality:   {tests, mode_radius, site_radius, dual_alpha_shift}
//   qop:       {window, theta: [...] | theta_samples, horizons}
//
// Randomness: Rng(seed, stream) with stream = the subcommand's id.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpt/errors.hpp"
#include "qpt/frequency.hpp"
#include "qpt/lattice.hpp"

namespace qpt {

inline constexpr const char* kConfigSchema = "qpt-experiment/1";
inline constexpr const char* kToolVersion = "qpt 0.1.0";

/// Invalid configuration; the message carries origin:line:column when known.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Subcommand { freq, edl, transport, duality_check, tailbound, qop };

const char* subcommand_name(Subcommand s);
std::optional<Subcommand> parse_subcommand(const std::string& name);
/// Stream id used to derive the subcommand's random generator.
std::uint64_t subcommand_stream(Subcommand s);

struct AlphaSpec {
  enum class Kind { golden, decimal, quotients, beta };
  Kind kind = Kind::golden;
  std::vector<double> values;      // decimal components
  std::vector<BigInt> quotients;   // continued-fraction quotients
  double beta = 0.0;
  std::size_t depth = 0;

  /// Expansion for the quotient and β forms (β: the representable prefix).
  std::optional<ContinuedFraction> expansion() const;
  FrequencyVector frequency() const;
};

struct FreqSection {
  std::size_t depth = 20;
  double dc_c = 0.27;
  double dc_tau = 1.0;
  int dc_k_max = 1000;
};

struct EdlSection {
  int window = 100;
  std::size_t theta_samples = 64;
  bool check_doubling = false;
};

struct TailboundSection {
  int window = 80;
  LatticeVector source;  // empty: origin
  double horizon = 1000.0;
  std::vector<int> cutoffs{5, 10, 15, 20, 25, 30, 35, 40};
  std::size_t theta_samples = 64;
};

struct TransportSection {
  std::size_t x_samples = 3;
  std::vector<std::vector<double>> x;  // explicit samples override x_samples
  int source = 0;
  std::vector<double> horizons{25.0, 50.0, 100.0, 200.0};
  std::optional<int> window;  // nullopt: auto
  double window_tol = 1e-8;
  int dual_window = 60;
  std::size_t theta_grid = 0;
  double c_min = 0.05;
  bool gap = true;
  bool eigenvector_initial = false;
};

struct DualitySection {
  int tests = 100;
  int mode_radius = 32;
  int site_radius = 64;
  double dual_alpha_shift = 0.0;
};

struct QopSection {
  int window = 25;
  std::vector<double> theta;  // explicit values override theta_samples
  std::size_t theta_samples = 4;
  std::vector<double> horizons{1e2, 1e3, 1e4};
};

struct ExperimentConfig {
  std::string origin;  // file name used in messages
  std::uint64_t seed = 0;
  TrigPotential potential = TrigPotential::almost_mathieu();
  AlphaSpec alpha;
  double epsilon = 0.2;
  std::optional<std::string> output;
  FreqSection freq;
  EdlSection edl;
  TailboundSection tailbound;
  TransportSection transport;
  DualitySection duality;
  QopSection qop;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Key-value serialization of the fields that influence `s`'s results (seed,
/// potential, α, ε and the subcommand's section); output path, thread count and
/// verbosity are excluded.
std::string canonical_config(const ExperimentConfig& config, Subcommand s);
/// FNV-1a (64 bit) of canonical_config.
std::uint64_t config_hash(const ExperimentConfig& config, Subcommand s);

struct PlotCurve {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

class ResultTable {
 public:
  ResultTable(std::vector<std::string> columns, std::vector<std::string> units);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  void add_row(std::vector<std::string> row);

  void add_footer(std::string key, std::string value);
  const std::vector<std::pair<std::string, std::string>>& footer() const { return footer_; }

  std::vector<PlotCurve>& curves() { return curves_; }
  const std::vector<PlotCurve>& curves() const { return curves_; }

  /// Header, rows, '#'-prefixed footer; the timestamp line is the last line
  /// and is omitted when timestamp is empty.
  std::string to_csv(const std::string& timestamp = "") const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> units_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::pair<std::string, std::string>> footer_;
  std::vector<PlotCurve> curves_;
};

/// Shortest round-trip decimal form ("nan", "inf", "-inf" for non-finite).
std::string format_number(double value);

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  unsigned threads = 1;
};

ResultTable run_experiment(Subcommand s, const ExperimentConfig& config, const RunOptions& options = {});

/// "<dir>/<stem>.<curve>.dat" two-column files, one per curve.
std::vector<std::string> write_plot_files(const ResultTable& table, const std::string& dir,
                                          const std::string& stem);

}  // namespace qpt
