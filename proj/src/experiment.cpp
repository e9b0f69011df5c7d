#include "qpt/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "qpt/duality.hpp"
#include "qpt/parallel.hpp"
#include "qpt/random.hpp"
#include "qpt/spectral.hpp"
#include "qpt/transport.hpp"

namespace qpt {

namespace {

// ---- config parsing -------------------------------------------------------

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) throw ConfigError(origin_ + ": " + msg);
    throw ConfigError(origin_ + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1) +
                      ": " + msg);
  }

  void allow_keys(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& where) const {
    if (!map.IsMap()) fail(map, where + " must be a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        fail(kv.first, "unknown key '" + key + "' in " + where);
      }
    }
  }

  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    const std::string s = n.Scalar();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail(n, what + " must be a finite number, got '" + s + "'");
    }
    return v;
  }

  long long integer(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be an integer");
    const std::string s = n.Scalar();
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(n, what + " must be an integer, got '" + s + "'");
    return v;
  }

  int integer_in(const YAML::Node& n, const std::string& what, long long lo, long long hi) const {
    const long long v = integer(n, what);
    if (v < lo || v > hi) {
      fail(n, what + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
  }

  std::size_t count(const YAML::Node& n, const std::string& what) const {
    return static_cast<std::size_t>(integer_in(n, what, 1, 1 << 24));
  }

  bool boolean(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be true or false");
    const std::string s = n.Scalar();
    if (s == "true") return true;
    if (s == "false") return false;
    fail(n, what + " must be true or false");
  }

  std::string text(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a string");
    return n.Scalar();
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence() || n.size() == 0) fail(n, what + " must be a nonempty list");
    std::vector<double> out;
    for (const auto& item : n) out.push_back(number(item, what + " entry"));
    return out;
  }

  std::vector<int> integers(const YAML::Node& n, const std::string& what, long long lo, long long hi) const {
    if (!n.IsSequence() || n.size() == 0) fail(n, what + " must be a nonempty list");
    std::vector<int> out;
    for (const auto& item : n) out.push_back(integer_in(item, what + " entry", lo, hi));
    return out;
  }

 private:
  std::string origin_;
};

constexpr int kMaxWindow = 100000;

TrigPotential read_potential(const Reader& r, const YAML::Node& n) {
  if (n.IsScalar()) {
    if (n.Scalar() == "almost-mathieu") return TrigPotential::almost_mathieu();
    r.fail(n, "potential must be 'almost-mathieu' or a list of {m, re, im} records");
  }
  if (!n.IsSequence() || n.size() == 0) r.fail(n, "potential must be a nonempty list of {m, re, im} records");
  std::map<LatticeVector, cplx> coeffs;
  std::size_t dim = 0;
  for (const auto& rec : n) {
    r.allow_keys(rec, {"m", "re", "im"}, "potential record");
    if (!rec["m"]) r.fail(rec, "potential record needs 'm'");
    const std::vector<int> m = r.integers(rec["m"], "potential m", -1000, 1000);
    if (dim == 0) dim = m.size();
    if (m.size() != dim) r.fail(rec["m"], "potential records disagree on the dimension");
    const double re = rec["re"] ? r.number(rec["re"], "potential re") : 0.0;
    const double im = rec["im"] ? r.number(rec["im"], "potential im") : 0.0;
    if (coeffs.count(m)) r.fail(rec, "duplicate potential mode");
    coeffs[m] = cplx(re, im);
  }
  TrigPotential v(static_cast<int>(dim), coeffs);
  if (v.hermitian_defect() > 1e-12) {
    r.fail(n, "potential is not real-valued: coefficients must satisfy v(-m) = conj v(m)");
  }
  return v;
}

AlphaSpec read_alpha(const Reader& r, const YAML::Node& n) {
  AlphaSpec a;
  if (n.IsScalar()) {
    if (n.Scalar() == "golden") return a;
    a.kind = AlphaSpec::Kind::decimal;
    a.values = {r.number(n, "alpha")};
  } else if (n.IsSequence()) {
    a.kind = AlphaSpec::Kind::decimal;
    a.values = r.numbers(n, "alpha");
  } else if (n.IsMap()) {
    if (n["quotients"]) {
      r.allow_keys(n, {"quotients"}, "alpha");
      a.kind = AlphaSpec::Kind::quotients;
      const YAML::Node& q = n["quotients"];
      if (!q.IsSequence() || q.size() == 0) r.fail(q, "alpha quotients must be a nonempty list");
      for (const auto& item : q) {
        const std::string s = r.text(item, "quotient");
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
          r.fail(item, "quotients must be positive integers");
        }
        BigInt value(s);
        if (value < 1) r.fail(item, "quotients must be positive integers");
        a.quotients.push_back(value);
      }
      if (a.quotients.size() == 1 && a.quotients[0] == 1) r.fail(q, "[0; 1] is 1, not a frequency in (0,1)");
    } else if (n["beta"]) {
      r.allow_keys(n, {"beta", "depth"}, "alpha");
      a.kind = AlphaSpec::Kind::beta;
      a.beta = r.number(n["beta"], "alpha beta");
      if (!(a.beta > 0.0)) r.fail(n["beta"], "alpha beta must be positive");
      if (!n["depth"]) r.fail(n, "alpha beta construction needs 'depth'");
      a.depth = static_cast<std::size_t>(r.integer_in(n["depth"], "alpha depth", 1, 64));
    } else {
      r.fail(n, "alpha mapping needs 'quotients' or 'beta'");
    }
    return a;
  } else {
    r.fail(n, "alpha must be 'golden', a number, a list of numbers or a mapping");
  }
  for (double v : a.values) {
    if (!(v >= 0.0 && v < 1.0)) r.fail(n, "alpha components must lie in [0, 1)");
  }
  return a;
}

void read_freq(const Reader& r, const YAML::Node& n, FreqSection& s) {
  r.allow_keys(n, {"depth", "dc"}, "freq");
  if (n["depth"]) s.depth = static_cast<std::size_t>(r.integer_in(n["depth"], "freq depth", 1, 10000));
  if (const YAML::Node dc = n["dc"]) {
    r.allow_keys(dc, {"c", "tau", "k_max"}, "freq dc");
    if (dc["c"]) s.dc_c = r.number(dc["c"], "dc c");
    if (dc["tau"]) s.dc_tau = r.number(dc["tau"], "dc tau");
    if (dc["k_max"]) s.dc_k_max = r.integer_in(dc["k_max"], "dc k_max", 1, 10000000);
    if (!(s.dc_c > 0.0)) r.fail(dc, "dc c must be positive");
    if (!(s.dc_tau > 0.0)) r.fail(dc, "dc tau must be positive");
  }
}

void read_edl(const Reader& r, const YAML::Node& n, EdlSection& s) {
  r.allow_keys(n, {"window", "theta_samples", "check_doubling"}, "edl");
  if (n["window"]) s.window = r.integer_in(n["window"], "edl window", 4, kMaxWindow);
  if (n["theta_samples"]) s.theta_samples = r.count(n["theta_samples"], "edl theta_samples");
  if (n["check_doubling"]) s.check_doubling = r.boolean(n["check_doubling"], "edl check_doubling");
}

void read_tailbound(const Reader& r, const YAML::Node& n, TailboundSection& s) {
  r.allow_keys(n, {"window", "source", "horizon", "cutoffs", "theta_samples"}, "tailbound");
  if (n["window"]) s.window = r.integer_in(n["window"], "tailbound window", 2, kMaxWindow);
  if (n["source"]) s.source = r.integers(n["source"], "tailbound source", -kMaxWindow, kMaxWindow);
  if (n["horizon"]) {
    s.horizon = r.number(n["horizon"], "tailbound horizon");
    if (!(s.horizon > 0.0)) r.fail(n["horizon"], "tailbound horizon must be positive");
  }
  if (n["cutoffs"]) {
    s.cutoffs = r.integers(n["cutoffs"], "tailbound cutoffs", 1, kMaxWindow);
    for (std::size_t i = 1; i < s.cutoffs.size(); ++i) {
      if (s.cutoffs[i] <= s.cutoffs[i - 1]) r.fail(n["cutoffs"], "tailbound cutoffs must increase");
    }
  }
  if (n["theta_samples"]) s.theta_samples = r.count(n["theta_samples"], "tailbound theta_samples");
  if (2 * s.cutoffs.back() > s.window) {
    r.fail(n, "largest tailbound cutoff must not exceed half the window");
  }
}

std::vector<double> read_horizons(const Reader& r, const YAML::Node& n, const std::string& what) {
  std::vector<double> t = r.numbers(n, what);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0)) r.fail(n, what + " entries must be positive");
    if (i > 0 && !(t[i] > t[i - 1])) r.fail(n, what + " must increase");
  }
  return t;
}

void read_transport(const Reader& r, const YAML::Node& n, TransportSection& s) {
  r.allow_keys(n, {"x_samples", "x", "source", "horizons", "window", "window_tol", "dual_window", "theta_grid",
                   "c_min", "gap", "initial"},
               "transport");
  if (n["x_samples"]) s.x_samples = r.count(n["x_samples"], "transport x_samples");
  if (const YAML::Node xs = n["x"]) {
    if (!xs.IsSequence() || xs.size() == 0) r.fail(xs, "transport x must be a nonempty list");
    for (const auto& item : xs) {
      std::vector<double> x = item.IsSequence() ? r.numbers(item, "transport x") : std::vector<double>{r.number(item, "transport x")};
      for (double c : x) {
        if (!(c >= 0.0 && c < 1.0)) r.fail(item, "transport x components must lie in [0, 1)");
      }
      s.x.push_back(std::move(x));
    }
  }
  if (n["source"]) s.source = r.integer_in(n["source"], "transport source", -kMaxWindow, kMaxWindow);
  if (n["horizons"]) s.horizons = read_horizons(r, n["horizons"], "transport horizons");
  if (const YAML::Node w = n["window"]) {
    if (w.IsScalar() && w.Scalar() == "auto") {
      s.window.reset();
    } else {
      s.window = r.integer_in(w, "transport window", 1, kMaxWindow);
    }
  }
  if (n["window_tol"]) {
    s.window_tol = r.number(n["window_tol"], "transport window_tol");
    if (!(s.window_tol > 0.0 && s.window_tol < 1.0)) r.fail(n["window_tol"], "window_tol must lie in (0, 1)");
  }
  if (n["dual_window"]) s.dual_window = r.integer_in(n["dual_window"], "transport dual_window", 0, 5000);
  if (n["theta_grid"]) s.theta_grid = static_cast<std::size_t>(r.integer_in(n["theta_grid"], "transport theta_grid", 0, 1 << 24));
  if (n["c_min"]) {
    s.c_min = r.number(n["c_min"], "transport c_min");
    if (!(s.c_min > 0.0)) r.fail(n["c_min"], "c_min must be positive");
  }
  if (n["gap"]) s.gap = r.boolean(n["gap"], "transport gap");
  if (n["initial"]) {
    const std::string init = r.text(n["initial"], "transport initial");
    if (init != "delta" && init != "eigenvector") r.fail(n["initial"], "transport initial must be 'delta' or 'eigenvector'");
    s.eigenvector_initial = init == "eigenvector";
  }
  if (s.window && std::abs(s.source) > *s.window) r.fail(n, "transport source outside the window");
}

void read_duality(const Reader& r, const YAML::Node& n, DualitySection& s) {
  r.allow_keys(n, {"tests", "mode_radius", "site_radius", "dual_alpha_shift"}, "duality");
  if (n["tests"]) s.tests = r.integer_in(n["tests"], "duality tests", 1, 100000);
  if (n["mode_radius"]) s.mode_radius = r.integer_in(n["mode_radius"], "duality mode_radius", 0, 1000);
  if (n["site_radius"]) s.site_radius = r.integer_in(n["site_radius"], "duality site_radius", 0, 100000);
  if (n["dual_alpha_shift"]) s.dual_alpha_shift = r.number(n["dual_alpha_shift"], "duality dual_alpha_shift");
}

void read_qop(const Reader& r, const YAML::Node& n, QopSection& s) {
  r.allow_keys(n, {"window", "theta", "theta_samples", "horizons"}, "qop");
  if (n["window"]) s.window = r.integer_in(n["window"], "qop window", 1, 5000);
  if (n["theta"]) {
    s.theta = r.numbers(n["theta"], "qop theta");
    for (double t : s.theta) {
      if (!(t >= 0.0 && t < 1.0)) r.fail(n["theta"], "qop theta values must lie in [0, 1)");
    }
  }
  if (n["theta_samples"]) s.theta_samples = r.count(n["theta_samples"], "qop theta_samples");
  if (n["horizons"]) s.horizons = read_horizons(r, n["horizons"], "qop horizons");
}

// ---- formatting -----------------------------------------------------------

std::string fmt(double v) { return format_number(v); }
std::string fmt(long long v) { return std::to_string(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string join(const std::vector<int>& v, char sep = ';') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join(const std::vector<double>& v, char sep = ';') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_number(v[i]);
  }
  return s;
}

std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

// Row builder keyed by column name.
class RowBuilder {
 public:
  explicit RowBuilder(const ResultTable& table) : table_(table), row_(table.columns().size()) {}
  RowBuilder& set(const std::string& column, std::string value) {
    const auto& cols = table_.columns();
    const auto it = std::find(cols.begin(), cols.end(), column);
    if (it == cols.end()) throw Error("internal: unknown column " + column);
    row_[static_cast<std::size_t>(it - cols.begin())] = std::move(value);
    return *this;
  }
  std::vector<std::string> take() { return std::move(row_); }

 private:
  const ResultTable& table_;
  std::vector<std::string> row_;
};

// Only fields that can change the table enter the hash.
bool uses_seed(const ExperimentConfig& c, Subcommand s) {
  switch (s) {
    case Subcommand::freq: return false;
    case Subcommand::transport: return c.transport.x.empty();
    case Subcommand::qop: return c.qop.theta.empty();
    default: return true;
  }
}

void add_provenance(ResultTable& table, const ExperimentConfig& config, Subcommand s, std::uint64_t seed) {
  ExperimentConfig effective = config;
  effective.seed = seed;
  table.add_footer("subcommand", subcommand_name(s));
  table.add_footer("config_hash", "fnv1a64:" + hex64(config_hash(effective, s)));
  table.add_footer("seed", std::to_string(seed));
  table.add_footer("tool_version", kToolVersion);
}

// ---- runners --------------------------------------------------------------

ResultTable run_freq(const ExperimentConfig& c) {
  ResultTable table({"section", "k", "a_k", "p_k", "q_k", "log_growth", "beta_estimate", "c", "tau", "k_max",
                     "verified", "worst_k", "max_feasible_c"},
                    {"", "", "", "", "", "1", "1", "1", "1", "", "", "", "1"});
  const FrequencyVector alpha = c.alpha.frequency();
  if (alpha.dim() == 1) {
    ContinuedFraction cf;
    if (auto ex = c.alpha.expansion()) {
      cf = *ex;
      if (cf.depth() > c.freq.depth) {
        cf = continued_fraction_from_quotients({cf.quotients.begin(), cf.quotients.begin() + static_cast<std::ptrdiff_t>(c.freq.depth)});
      }
    } else {
      // a decimal only pins down the quotients shared by α ± ulp
      std::size_t lo = 0, hi = c.freq.depth;
      while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        try {
          continued_fraction(alpha[0], mid);
          lo = mid;
        } catch (const PrecisionExhausted&) {
          hi = mid - 1;
        }
      }
      cf = continued_fraction(alpha[0], lo);
      if (lo < c.freq.depth) {
        table.add_footer("cf_depth", fmt(lo) + " of " + fmt(c.freq.depth) +
                                         " requested; deeper quotients are not determined by the double value");
      }
    }
    const std::vector<double> growth = log_growth_terms(cf);
    PlotCurve curve{"log_growth", {}, {}};
    for (std::size_t k = 0; k < cf.convergents.size(); ++k) {
      RowBuilder row(table);
      row.set("section", "cf").set("k", fmt(k)).set("p_k", cf.convergents[k].p.str()).set("q_k", cf.convergents[k].q.str());
      if (k > 0) row.set("a_k", cf.quotients[k - 1].str());
      if (k < growth.size()) {
        row.set("log_growth", fmt(growth[k]));
        curve.x.push_back(static_cast<double>(k));
        curve.y.push_back(growth[k]);
      }
      table.add_row(row.take());
    }
    table.curves().push_back(std::move(curve));
    if (cf.convergents.size() >= 3) {
      table.add_row(RowBuilder(table).set("section", "beta").set("k", fmt(cf.depth())).set("beta_estimate", fmt(beta_estimate(cf))).take());
    }
    if (c.alpha.kind == AlphaSpec::Kind::beta) {
      const BetaExpansion ex = quotients_for_beta(c.alpha.beta, c.alpha.depth);
      table.add_footer("beta_construction", "target " + fmt(c.alpha.beta) + ", requested depth " + fmt(ex.requested_depth) +
                                                ", representable depth " + fmt(ex.quotients.size()));
    }
  } else {
    table.add_footer("note", "continued fractions are one-dimensional; only the Diophantine scan is reported");
  }
  const DiophantineCertificate dc = diophantine_check(alpha, c.freq.dc_c, c.freq.dc_tau, c.freq.dc_k_max);
  table.add_row(RowBuilder(table)
                    .set("section", "dc")
                    .set("c", fmt(dc.c))
                    .set("tau", fmt(dc.tau))
                    .set("k_max", fmt(dc.k_max))
                    .set("verified", fmt(dc.verified))
                    .set("worst_k", join(dc.worst_k))
                    .set("max_feasible_c", fmt(dc.max_feasible_c))
                    .take());
  return table;
}

ResultTable run_edl(const ExperimentConfig& c, Rng& rng, unsigned threads) {
  ResultTable table({"section", "distance", "kernel_mean", "theta_samples", "gamma", "prefactor", "fit_residual",
                     "pairs_used", "pairs_excluded", "gamma_infinite", "gamma_change"},
                    {"", "sites", "1", "", "1/site", "1", "1", "", "", "", "1"});
  const FrequencyVector alpha = c.alpha.frequency();
  const Window window = Window::box(alpha.dim(), c.edl.window);
  auto fit_row = [&](const char* section, const EdlKernel& k, double change) {
    RowBuilder row(table);
    row.set("section", section)
        .set("theta_samples", fmt(k.thetas.size()))
        .set("gamma", fmt(k.gamma))
        .set("prefactor", fmt(k.prefactor))
        .set("fit_residual", fmt(k.fit_residual))
        .set("pairs_used", fmt(k.pairs_used))
        .set("pairs_excluded", fmt(k.pairs_excluded))
        .set("gamma_infinite", fmt(k.gamma_infinite));
    if (!std::isnan(change)) row.set("gamma_change", fmt(change));
    table.add_row(row.take());
  };
  const EdlKernel k = edl_kernel(c.potential, alpha, c.epsilon, theta_ensemble(c.edl.theta_samples, rng), window, threads);
  PlotCurve profile{"profile", {}, {}};
  for (std::size_t r = 0; r < k.profile.size(); ++r) {
    table.add_row(RowBuilder(table).set("section", "profile").set("distance", fmt(r)).set("kernel_mean", fmt(k.profile[r])).take());
    profile.x.push_back(static_cast<double>(r));
    profile.y.push_back(k.profile[r]);
  }
  table.curves().push_back(std::move(profile));
  fit_row("fit", k, std::numeric_limits<double>::quiet_NaN());
  if (c.edl.check_doubling) {
    const EdlKernel k2 =
        edl_kernel(c.potential, alpha, c.epsilon, theta_ensemble(2 * c.edl.theta_samples, rng), window, threads);
    const double change = (k.gamma_infinite || k2.gamma_infinite) ? std::numeric_limits<double>::quiet_NaN()
                                                                  : std::abs(k2.gamma - k.gamma) / k.gamma;
    fit_row("fit_doubled", k2, change);
  }
  table.add_footer("window", fmt(c.edl.window));
  table.add_footer("fit_range", "interior pairs, 2 <= |k-l| <= " + fmt(c.edl.window / 2));
  return table;
}

ResultTable run_tailbound(const ExperimentConfig& c, Rng& rng, unsigned threads) {
  ResultTable table({"section", "N", "tail", "slope", "slope_stderr", "intercept", "fit_points"},
                    {"", "sites", "1", "1/site", "1/site", "1", ""});
  const FrequencyVector alpha = c.alpha.frequency();
  const Window window = Window::box(alpha.dim(), c.tailbound.window);
  LatticeVector source = c.tailbound.source;
  if (source.empty()) source.assign(static_cast<std::size_t>(alpha.dim()), 0);
  if (static_cast<int>(source.size()) != alpha.dim()) throw ConfigError(c.origin + ": tailbound source dimension does not match alpha");
  const TailBoundReport rep = tail_bound_scan(c.potential, alpha, c.epsilon, source, c.tailbound.horizon, c.tailbound.cutoffs,
                                              theta_ensemble(c.tailbound.theta_samples, rng), window, threads);
  PlotCurve curve{"tail", {}, {}};
  for (std::size_t i = 0; i < rep.cutoffs.size(); ++i) {
    table.add_row(RowBuilder(table).set("section", "tail").set("N", fmt(rep.cutoffs[i])).set("tail", fmt(rep.values[i])).take());
    curve.x.push_back(rep.cutoffs[i]);
    curve.y.push_back(rep.values[i]);
  }
  table.curves().push_back(std::move(curve));
  table.add_row(RowBuilder(table)
                    .set("section", "fit")
                    .set("slope", fmt(rep.fit.slope))
                    .set("slope_stderr", fmt(rep.fit.slope_stderr))
                    .set("intercept", fmt(rep.fit.intercept))
                    .set("fit_points", fmt(rep.fit.points))
                    .take());
  table.add_footer("source", join(source));
  table.add_footer("horizon", fmt(rep.horizon));
  table.add_footer("theta_samples", fmt(c.tailbound.theta_samples));
  return table;
}

ResultTable run_transport(const ExperimentConfig& c, Rng& rng, unsigned threads) {
  ResultTable table({"section", "x_index", "x", "T", "velocity", "cauchy", "gap", "current_norm", "cauchy_decreasing",
                     "ballistic"},
                    {"", "", "1", "time", "sites/time", "1", "1", "1", "", ""});
  const FrequencyVector alpha = c.alpha.frequency();
  const TransportSection& s = c.transport;
  const std::vector<std::vector<double>> xs = s.x.empty() ? sample_torus(s.x_samples, alpha.dim(), rng) : s.x;
  for (const auto& x : xs) {
    if (static_cast<int>(x.size()) != alpha.dim()) throw ConfigError(c.origin + ": transport x dimension does not match alpha");
  }

  BallisticOptions opt;
  opt.c_min = s.c_min;
  opt.compute_gap = s.gap && !s.eigenvector_initial;
  opt.window_half_width = s.window.value_or(0);
  opt.pullback.dual_half_width = s.dual_window;
  opt.pullback.theta_grid = s.theta_grid;
  opt.pullback.window_tol = s.window_tol;
  opt.pullback.threads = threads;

  std::vector<ConvergenceReport> reports;
  if (s.eigenvector_initial) {
    const int n = s.window.value_or(window_for_horizon(2.0 * s.horizons.back(), c.potential.support_radius(), s.window_tol).half_width());
    const Window window = Window::line(n);
    reports.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const EigenSystem eig = diagonalize(build_hamiltonian(c.potential, xs[i], alpha, c.epsilon, window));
      const EigenbasisCurrent current(eig, CurrentOperator::hopping());
      reports[i] = scan_state(current, eig.vector(eig.size() / 2), s.horizons, nullptr, s.c_min);
      reports[i].x = xs[i];
    }
    table.add_footer("initial", "eigenvector of the windowed H nearest the middle of the spectrum");
  } else {
    reports = ballistic_scan(c.potential, alpha, c.epsilon, xs, s.source, s.horizons, opt);
    table.add_footer("initial", "delta at site " + fmt(s.source));
  }
  if (!reports.empty()) table.add_footer("window", fmt(reports.front().window_half_width));

  for (std::size_t i = 0; i < reports.size(); ++i) {
    const ConvergenceReport& r = reports[i];
    PlotCurve vel{"velocity_x" + fmt(i), {}, {}}, cauchy{"cauchy_x" + fmt(i), {}, {}}, gap{"gap_x" + fmt(i), {}, {}};
    for (std::size_t k = 0; k < r.horizons.size(); ++k) {
      RowBuilder row(table);
      row.set("section", "scan")
          .set("x_index", fmt(i))
          .set("x", join(r.x))
          .set("T", fmt(r.horizons[k]))
          .set("velocity", fmt(r.velocity[k]))
          .set("cauchy", fmt(r.cauchy[k]))
          .set("current_norm", fmt(r.current_norm[k]));
      if (k < r.gap.size()) {
        row.set("gap", fmt(r.gap[k]));
        gap.x.push_back(r.horizons[k]);
        gap.y.push_back(r.gap[k]);
      }
      vel.x.push_back(r.horizons[k]);
      vel.y.push_back(r.velocity[k]);
      cauchy.x.push_back(r.horizons[k]);
      cauchy.y.push_back(r.cauchy[k]);
      table.add_row(row.take());
    }
    table.add_row(RowBuilder(table)
                      .set("section", "summary")
                      .set("x_index", fmt(i))
                      .set("x", join(r.x))
                      .set("cauchy_decreasing", fmt(r.cauchy_decreasing))
                      .set("ballistic", fmt(r.ballistic))
                      .take());
    table.curves().push_back(std::move(vel));
    table.curves().push_back(std::move(cauchy));
    if (!gap.x.empty()) table.curves().push_back(std::move(gap));
  }
  table.add_footer("c_min", fmt(s.c_min));
  return table;
}

ResultTable run_duality_check(const ExperimentConfig& c, Rng& rng) {
  ResultTable table({"section", "index", "residual", "max_residual", "mean_residual"}, {"", "", "1", "1", "1"});
  const FrequencyVector alpha = c.alpha.frequency();
  std::optional<FrequencyVector> dual_alpha;
  if (c.duality.dual_alpha_shift != 0.0) {
    std::vector<double> shifted = alpha.components();
    for (double& a : shifted) a = a + c.duality.dual_alpha_shift - std::floor(a + c.duality.dual_alpha_shift);
    dual_alpha = FrequencyVector(shifted);
    table.add_footer("negative_control", "dual side uses alpha shifted by " + fmt(c.duality.dual_alpha_shift));
  }
  const DualityCheck check = verify_duality(c.potential, alpha, c.epsilon, c.duality.tests, c.duality.mode_radius,
                                            c.duality.site_radius, rng.next(), dual_alpha);
  PlotCurve curve{"residual", {}, {}};
  for (std::size_t i = 0; i < check.residuals.size(); ++i) {
    table.add_row(RowBuilder(table).set("section", "vector").set("index", fmt(i)).set("residual", fmt(check.residuals[i])).take());
    curve.x.push_back(static_cast<double>(i));
    curve.y.push_back(check.residuals[i]);
  }
  table.curves().push_back(std::move(curve));
  const double mean = std::accumulate(check.residuals.begin(), check.residuals.end(), 0.0) /
                      static_cast<double>(check.residuals.size());
  table.add_row(RowBuilder(table).set("section", "summary").set("max_residual", fmt(check.max_residual)).set("mean_residual", fmt(mean)).take());
  table.add_footer("support", "modes |m| <= " + fmt(c.duality.mode_radius) + ", sites |n| <= " + fmt(c.duality.site_radius));
  return table;
}

ResultTable run_qop(const ExperimentConfig& c, Rng& rng, unsigned threads) {
  ResultTable table({"section", "theta", "j", "energy", "velocity", "T", "distance", "bound", "min_gap", "blocks",
                     "q_min", "q_max"},
                    {"", "1", "", "energy", "1", "time", "1", "1", "energy", "", "1", "1"});
  const FrequencyVector alpha = c.alpha.frequency();
  const Window window = Window::box(alpha.dim(), c.qop.window);
  const std::vector<double> thetas = c.qop.theta.empty() ? theta_ensemble(c.qop.theta_samples, rng) : c.qop.theta;

  struct PerTheta {
    std::vector<std::vector<std::string>> rows;
    PlotCurve curve;
  };
  std::vector<PerTheta> results(thetas.size());
  parallel_for(thetas.size(), threads, [&](std::size_t i) {
    const double theta = thetas[i];
    const EigenSystem eig = diagonalize(build_dual_hamiltonian(c.potential, theta, alpha, c.epsilon, window));
    const EigenbasisCurrent current(eig, CurrentOperator::multiplication(dual_current_diagonal(theta, alpha, window)));
    const CesaroVelocity q = asymptotic_diagonal(current);
    const Eigen::MatrixXcd qs = q.site_matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(qs, Eigen::EigenvaluesOnly);
    PerTheta& out = results[i];
    out.curve.name = "distance_theta" + fmt(i);
    for (Eigen::Index j = 0; j < eig.size(); ++j) {
      out.rows.push_back(RowBuilder(table)
                             .set("section", "level")
                             .set("theta", fmt(theta))
                             .set("j", fmt(static_cast<long long>(j)))
                             .set("energy", fmt(eig.energies()(j)))
                             .set("velocity", fmt(q.eigen_entry(j, j).real()))
                             .take());
    }
    for (double t : c.qop.horizons) {
      const double distance = (cesaro_velocity(current, t).site_matrix() - qs).norm();
      out.rows.push_back(RowBuilder(table)
                             .set("section", "cesaro")
                             .set("theta", fmt(theta))
                             .set("T", fmt(t))
                             .set("distance", fmt(distance))
                             .set("bound", fmt(diagonal_truncation_bound(current, t)))
                             .take());
      out.curve.x.push_back(t);
      out.curve.y.push_back(distance);
    }
    out.rows.push_back(RowBuilder(table)
                           .set("section", "summary")
                           .set("theta", fmt(theta))
                           .set("min_gap", fmt(eig.min_gap()))
                           .set("blocks", fmt(q.blocks().size()))
                           .set("q_min", fmt(solver.eigenvalues().minCoeff()))
                           .set("q_max", fmt(solver.eigenvalues().maxCoeff()))
                           .take());
  });
  for (auto& r : results) {
    for (auto& row : r.rows) table.add_row(std::move(row));
    table.curves().push_back(std::move(r.curve));
  }
  table.add_footer("window", fmt(c.qop.window));
  return table;
}

}  // namespace

// ---- public API ---------------------------------------------------------------

const char* subcommand_name(Subcommand s) {
  switch (s) {
    case Subcommand::freq: return "freq";
    case Subcommand::edl: return "edl";
    case Subcommand::transport: return "transport";
    case Subcommand::duality_check: return "duality-check";
    case Subcommand::tailbound: return "tailbound";
    case Subcommand::qop: return "qop";
  }
  return "?";
}

std::optional<Subcommand> parse_subcommand(const std::string& name) {
  for (Subcommand s : {Subcommand::freq, Subcommand::edl, Subcommand::transport, Subcommand::duality_check,
                       Subcommand::tailbound, Subcommand::qop}) {
    if (name == subcommand_name(s)) return s;
  }
  return std::nullopt;
}

std::uint64_t subcommand_stream(Subcommand s) { return static_cast<std::uint64_t>(s) + 1; }

std::optional<ContinuedFraction> AlphaSpec::expansion() const {
  switch (kind) {
    case Kind::quotients: return continued_fraction_from_quotients(quotients);
    case Kind::beta: return continued_fraction_from_quotients(quotients_for_beta(beta, depth).quotients);
    default: return std::nullopt;
  }
}

FrequencyVector AlphaSpec::frequency() const {
  switch (kind) {
    case Kind::golden: return FrequencyVector::golden();
    case Kind::decimal: return FrequencyVector(values);
    default: {
      const double v = expansion()->value();
      if (!(v > 0.0 && v < 1.0)) throw ConfigError("alpha expansion does not define a frequency in (0,1)");
      return FrequencyVector({v});
    }
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  const Reader r(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) + ": " +
                      e.msg);
  }
  if (!root.IsMap()) throw ConfigError(origin + ": configuration must be a mapping");
  r.allow_keys(root, {"schema", "seed", "potential", "alpha", "epsilon", "output", "freq", "edl", "tailbound",
                      "transport", "duality", "qop"},
               "configuration");
  if (!root["schema"]) throw ConfigError(origin + ": missing 'schema: " + kConfigSchema + "'");
  if (r.text(root["schema"], "schema") != kConfigSchema) {
    r.fail(root["schema"], std::string("unsupported schema, expected ") + kConfigSchema);
  }

  ExperimentConfig c;
  c.origin = origin;
  try {
    if (root["seed"]) {
      const std::string s = r.text(root["seed"], "seed");
      std::uint64_t v = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) r.fail(root["seed"], "seed must be an unsigned 64-bit integer");
      c.seed = v;
    }
    if (root["potential"]) c.potential = read_potential(r, root["potential"]);
    if (root["alpha"]) c.alpha = read_alpha(r, root["alpha"]);
    if (root["epsilon"]) {
      c.epsilon = r.number(root["epsilon"], "epsilon");
      if (c.epsilon < 0.0) r.fail(root["epsilon"], "epsilon must be non-negative");
    }
    if (root["output"]) c.output = r.text(root["output"], "output");
    if (root["freq"]) read_freq(r, root["freq"], c.freq);
    if (root["edl"]) read_edl(r, root["edl"], c.edl);
    if (root["tailbound"]) read_tailbound(r, root["tailbound"], c.tailbound);
    if (root["transport"]) read_transport(r, root["transport"], c.transport);
    if (root["duality"]) read_duality(r, root["duality"], c.duality);
    if (root["qop"]) read_qop(r, root["qop"], c.qop);
  } catch (const YAML::Exception& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) + ": " +
                      e.msg);
  }

  const int alpha_dim = c.alpha.kind == AlphaSpec::Kind::decimal ? static_cast<int>(c.alpha.values.size()) : 1;
  if (c.potential.dim() != alpha_dim) {
    r.fail(root["potential"] ? root["potential"] : root, "potential dimension " + std::to_string(c.potential.dim()) +
                                                          " does not match alpha dimension " + std::to_string(alpha_dim));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string canonical_config(const ExperimentConfig& c, Subcommand s) {
  std::ostringstream o;
  o << "schema=" << kConfigSchema << "\n";
  o << "subcommand=" << subcommand_name(s) << "\n";
  if (uses_seed(c, s)) o << "seed=" << c.seed << "\n";
  if (s != Subcommand::freq) {
    for (const auto& [m, v] : c.potential.coefficients()) {
      o << "potential[" << join(m) << "]=" << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
    }
  }
  switch (c.alpha.kind) {
    case AlphaSpec::Kind::golden: o << "alpha=golden\n"; break;
    case AlphaSpec::Kind::decimal: o << "alpha=" << join(c.alpha.values) << "\n"; break;
    case AlphaSpec::Kind::quotients: {
      o << "alpha.quotients=";
      for (std::size_t i = 0; i < c.alpha.quotients.size(); ++i) o << (i ? ";" : "") << c.alpha.quotients[i].str();
      o << "\n";
      break;
    }
    case AlphaSpec::Kind::beta: o << "alpha.beta=" << fmt(c.alpha.beta) << ";depth=" << c.alpha.depth << "\n"; break;
  }
  if (s != Subcommand::freq) o << "epsilon=" << fmt(c.epsilon) << "\n";
  switch (s) {
    case Subcommand::freq:
      o << "freq.depth=" << c.freq.depth << "\nfreq.dc=" << fmt(c.freq.dc_c) << "," << fmt(c.freq.dc_tau) << ","
        << c.freq.dc_k_max << "\n";
      break;
    case Subcommand::edl:
      o << "edl.window=" << c.edl.window << "\nedl.theta_samples=" << c.edl.theta_samples
        << "\nedl.check_doubling=" << fmt(c.edl.check_doubling) << "\n";
      break;
    case Subcommand::tailbound:
      o << "tailbound.window=" << c.tailbound.window << "\ntailbound.source=" << join(c.tailbound.source)
        << "\ntailbound.horizon=" << fmt(c.tailbound.horizon) << "\ntailbound.cutoffs=" << join(c.tailbound.cutoffs)
        << "\ntailbound.theta_samples=" << c.tailbound.theta_samples << "\n";
      break;
    case Subcommand::transport: {
      const TransportSection& t = c.transport;
      if (t.x.empty()) o << "transport.x_samples=" << t.x_samples << "\n";
      for (const auto& x : t.x) o << "transport.x=" << join(x) << "\n";
      const bool gap = t.gap && !t.eigenvector_initial;
      o << "transport.horizons=" << join(t.horizons) << "\ntransport.c_min=" << fmt(t.c_min)
        << "\ntransport.initial=" << (t.eigenvector_initial ? "eigenvector" : "delta") << "\n";
      if (!t.eigenvector_initial) o << "transport.source=" << t.source << "\n";
      if (t.window) {
        o << "transport.window=" << *t.window << "\n";
      } else {
        o << "transport.window=auto\n";
      }
      if (!t.window) o << "transport.window_tol=" << fmt(t.window_tol) << "\n";
      o << "transport.gap=" << fmt(gap) << "\n";
      if (gap) o << "transport.dual_window=" << t.dual_window << "\ntransport.theta_grid=" << t.theta_grid << "\n";
      break;
    }
    case Subcommand::duality_check:
      o << "duality.tests=" << c.duality.tests << "\nduality.mode_radius=" << c.duality.mode_radius
        << "\nduality.site_radius=" << c.duality.site_radius << "\nduality.dual_alpha_shift="
        << fmt(c.duality.dual_alpha_shift) << "\n";
      break;
    case Subcommand::qop:
      o << "qop.window=" << c.qop.window << "\nqop.horizons=" << join(c.qop.horizons) << "\n";
      if (c.qop.theta.empty()) {
        o << "qop.theta_samples=" << c.qop.theta_samples << "\n";
      } else {
        o << "qop.theta=" << join(c.qop.theta) << "\n";
      }
      break;
  }
  return o.str();
}

std::uint64_t config_hash(const ExperimentConfig& c, Subcommand s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(c, s)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ResultTable::ResultTable(std::vector<std::string> columns, std::vector<std::string> units)
    : columns_(std::move(columns)), units_(std::move(units)) {
  if (units_.size() != columns_.size()) throw Error("ResultTable: one unit per column required");
}

void ResultTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns_.size()) throw Error("ResultTable: row width does not match the header");
  rows_.push_back(std::move(row));
}

void ResultTable::add_footer(std::string key, std::string value) { footer_.emplace_back(std::move(key), std::move(value)); }

std::string ResultTable::to_csv(const std::string& timestamp) const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  out += "# units:";
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (!units_[i].empty()) out += " " + columns_[i] + "=" + units_[i];
  }
  out += '\n';
  for (const auto& [k, v] : footer_) out += "# " + k + ": " + v + "\n";
  if (!timestamp.empty()) out += "# generated: " + timestamp + "\n";
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

ResultTable run_experiment(Subcommand s, const ExperimentConfig& config, const RunOptions& options) {
  const std::uint64_t seed = options.seed.value_or(config.seed);
  Rng rng(seed, subcommand_stream(s));
  const unsigned threads = std::max(1u, options.threads);
  ResultTable table = [&] {
    switch (s) {
      case Subcommand::freq: return run_freq(config);
      case Subcommand::edl: return run_edl(config, rng, threads);
      case Subcommand::transport: return run_transport(config, rng, threads);
      case Subcommand::duality_check: return run_duality_check(config, rng);
      case Subcommand::tailbound: return run_tailbound(config, rng, threads);
      case Subcommand::qop: return run_qop(config, rng, threads);
    }
    throw Error("unknown subcommand");
  }();
  if (s != Subcommand::freq) table.add_footer("epsilon", fmt(config.epsilon));
  add_provenance(table, config, s, seed);
  return table;
}

std::vector<std::string> write_plot_files(const ResultTable& table, const std::string& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const PlotCurve& c : table.curves()) {
    const std::string path = (std::filesystem::path(dir) / (stem + "." + c.name + ".dat")).string();
    std::ofstream out(path);
    if (!out) throw Error("cannot write plot file " + path);
    out << "# " << c.name << "\n";
    for (std::size_t i = 0; i < c.x.size(); ++i) out << format_number(c.x[i]) << ' ' << format_number(c.y[i]) << '\n';
    written.push_back(path);
  }
  return written;
}

}  // namespace qpt
