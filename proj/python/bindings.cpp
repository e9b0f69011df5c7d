#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qpt/duality.hpp"
#include "qpt/experiment.hpp"
#include "qpt/frequency.hpp"
#include "qpt/lattice.hpp"
#include "qpt/spectral.hpp"
#include "qpt/transport.hpp"

namespace py = pybind11;
using namespace qpt;

namespace {

// Python ints through their decimal form
py::int_ to_py(const BigInt& v) { return py::int_(py::str(v.str())); }

std::vector<BigInt> from_py(const std::vector<py::int_>& values) {
  std::vector<BigInt> out;
  for (const auto& v : values) out.emplace_back(std::string(py::str(v)));
  return out;
}

py::dict cf_dict(const ContinuedFraction& cf) {
  py::list a, p, q;
  for (const auto& v : cf.quotients) a.append(to_py(v));
  for (const auto& c : cf.convergents) {
    p.append(to_py(c.p));
    q.append(to_py(c.q));
  }
  py::dict d;
  d["quotients"] = a;
  d["p"] = p;
  d["q"] = q;
  d["log_growth"] = log_growth_terms(cf);
  return d;
}

Subcommand subcommand(const std::string& name) {
  const auto s = parse_subcommand(name);
  if (!s) throw py::value_error("unknown subcommand '" + name + "'");
  return *s;
}

}  // namespace

PYBIND11_MODULE(_qptransport, m) {
  m.doc() = "quasiperiodic operators, Aubry duality and ballistic transport";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::enum_<Boundary>(m, "Boundary").value("dirichlet", Boundary::dirichlet).value("periodic", Boundary::periodic);

  py::class_<TrigPotential>(m, "TrigPotential")
      .def(py::init([](int dim, const std::map<std::vector<int>, cplx>& coeffs) { return TrigPotential(dim, coeffs); }),
           py::arg("dim"), py::arg("coefficients"))
      .def_static("almost_mathieu", &TrigPotential::almost_mathieu)
      .def_property_readonly("dim", &TrigPotential::dim)
      .def_property_readonly("support_radius", &TrigPotential::support_radius)
      .def_property_readonly("coefficients", &TrigPotential::coefficients)
      .def("__call__", [](const TrigPotential& v, const std::vector<double>& x) { return evaluate_potential(v, x); });

  py::class_<FrequencyVector>(m, "FrequencyVector")
      .def(py::init([](std::vector<double> alpha) { return FrequencyVector(std::move(alpha)); }))
      .def_static("golden", &FrequencyVector::golden)
      .def_static("rational", &FrequencyVector::rational)
      .def_property_readonly("components", &FrequencyVector::components)
      .def_property_readonly("dim", &FrequencyVector::dim);

  m.def("hamiltonian",
        [](const TrigPotential& v, const std::vector<double>& x, const FrequencyVector& alpha, double eps,
           int half_width, Boundary b) {
          return build_hamiltonian(v, x, alpha, eps, Window::line(half_width), b).matrix;
        },
        py::arg("v"), py::arg("x"), py::arg("alpha"), py::arg("epsilon"), py::arg("half_width"),
        py::arg("boundary") = Boundary::dirichlet);
  m.def("dual_hamiltonian",
        [](const TrigPotential& v, double theta, const FrequencyVector& alpha, double eps, int half_width) {
          return build_dual_hamiltonian(v, theta, alpha, eps, Window::box(alpha.dim(), half_width)).matrix;
        },
        py::arg("v"), py::arg("theta"), py::arg("alpha"), py::arg("epsilon"), py::arg("half_width"));

  m.def("spectrum",
        [](const TrigPotential& v, const std::vector<double>& x, const FrequencyVector& alpha, double eps,
           int half_width) {
          const EigenSystem e = diagonalize(build_hamiltonian(v, x, alpha, eps, Window::line(half_width)));
          return py::make_tuple(e.energies(), e.vectors());
        },
        py::arg("v"), py::arg("x"), py::arg("alpha"), py::arg("epsilon"), py::arg("half_width"));

  m.def("propagate_delta",
        [](const TrigPotential& v, const std::vector<double>& x, const FrequencyVector& alpha, double eps,
           int half_width, int site, double t) {
          const Window w = Window::line(half_width);
          const EigenSystem e = diagonalize(build_hamiltonian(v, x, alpha, eps, w));
          Eigen::VectorXcd d = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(w.size()));
          d(static_cast<Eigen::Index>(w.index(site))) = 1.0;
          return Eigen::VectorXcd(propagate(e, d, t));
        },
        py::arg("v"), py::arg("x"), py::arg("alpha"), py::arg("epsilon"), py::arg("half_width"), py::arg("site"),
        py::arg("t"));

  m.def("cesaro_velocity",
        [](const TrigPotential& v, const std::vector<double>& x, const FrequencyVector& alpha, double eps,
           int half_width, double horizon, Boundary b) {
          const EigenSystem e = diagonalize(build_hamiltonian(v, x, alpha, eps, Window::line(half_width), b));
          const EigenbasisCurrent cur(e, CurrentOperator::hopping(b));
          return std::isinf(horizon) ? asymptotic_diagonal(cur).site_matrix()
                                     : cesaro_velocity(cur, horizon).site_matrix();
        },
        py::arg("v"), py::arg("x"), py::arg("alpha"), py::arg("epsilon"), py::arg("half_width"), py::arg("horizon"),
        py::arg("boundary") = Boundary::dirichlet);

  m.def("window_for_horizon",
        [](double t, int support_radius, double tol) { return window_for_horizon(t, support_radius, tol).half_width(); },
        py::arg("horizon"), py::arg("support_radius"), py::arg("tol") = 1e-8);

  m.def("continued_fraction", [](double alpha, std::size_t depth) { return cf_dict(continued_fraction(alpha, depth)); },
        py::arg("alpha"), py::arg("depth"));
  m.def("convergents", [](const std::vector<py::int_>& q) { return cf_dict(continued_fraction_from_quotients(from_py(q))); },
        py::arg("quotients"));
  m.def("beta_estimate",
        [](const std::vector<py::int_>& q) { return beta_estimate(continued_fraction_from_quotients(from_py(q))); },
        py::arg("quotients"));
  m.def("quotients_for_beta",
        [](double beta, std::size_t depth) {
          py::list out;
          for (const auto& a : quotients_for_beta(beta, depth).quotients) out.append(to_py(a));
          return out;
        },
        py::arg("beta"), py::arg("depth"));
  m.def("diophantine_check",
        [](const FrequencyVector& alpha, double c, double tau, int k_max) {
          const DiophantineCertificate d = diophantine_check(alpha, c, tau, k_max);
          py::dict r;
          r["verified"] = d.verified;
          r["worst_k"] = d.worst_k;
          r["max_feasible_c"] = d.max_feasible_c;
          return r;
        },
        py::arg("alpha"), py::arg("c"), py::arg("tau"), py::arg("k_max"));

  m.def("verify_duality",
        [](const TrigPotential& v, const FrequencyVector& alpha, double eps, int tests, int mode_radius,
           int site_radius, std::uint64_t seed) {
          const DualityCheck c = verify_duality(v, alpha, eps, tests, mode_radius, site_radius, seed);
          return py::make_tuple(c.max_residual, c.residuals);
        },
        py::arg("v"), py::arg("alpha"), py::arg("epsilon"), py::arg("tests") = 100, py::arg("mode_radius") = 32,
        py::arg("site_radius") = 64, py::arg("seed") = 0);

  m.def("edl_kernel",
        [](const TrigPotential& v, const FrequencyVector& alpha, double eps, const std::vector<double>& thetas,
           int half_width, unsigned threads) {
          const EdlKernel k = edl_kernel(v, alpha, eps, thetas, Window::box(alpha.dim(), half_width), threads);
          py::dict r;
          r["kernel"] = k.kernel;
          r["gamma"] = k.gamma;
          r["prefactor"] = k.prefactor;
          r["fit_residual"] = k.fit_residual;
          r["gamma_infinite"] = k.gamma_infinite;
          r["profile"] = k.profile;
          return r;
        },
        py::arg("v"), py::arg("alpha"), py::arg("epsilon"), py::arg("thetas"), py::arg("half_width"),
        py::arg("threads") = 1);

  m.def("theta_ensemble", py::overload_cast<std::size_t, double>(&theta_ensemble), py::arg("count"),
        py::arg("offset"));

  m.def("ballistic_scan",
        [](const TrigPotential& v, const FrequencyVector& alpha, double eps, const std::vector<std::vector<double>>& xs,
           int p, const std::vector<double>& horizons, bool gap, int dual_half_width) {
          BallisticOptions opt;
          opt.compute_gap = gap;
          opt.pullback.dual_half_width = dual_half_width;
          py::list out;
          for (const ConvergenceReport& r : ballistic_scan(v, alpha, eps, xs, p, horizons, opt)) {
            py::dict d;
            d["x"] = r.x;
            d["horizons"] = r.horizons;
            d["velocity"] = r.velocity;
            d["cauchy"] = r.cauchy;
            d["gap"] = r.gap;
            d["ballistic"] = r.ballistic;
            d["window"] = r.window_half_width;
            out.append(d);
          }
          return out;
        },
        py::arg("v"), py::arg("alpha"), py::arg("epsilon"), py::arg("xs"), py::arg("p"), py::arg("horizons"),
        py::arg("gap") = true, py::arg("dual_half_width") = 60);

  m.def("run_experiment",
        [](const std::string& sub, const std::string& config_text, std::optional<std::uint64_t> seed,
           unsigned threads) {
          const ExperimentConfig c = parse_config(config_text, "<python>");
          return run_experiment(subcommand(sub), c, {seed, threads}).to_csv();
        },
        py::arg("subcommand"), py::arg("config"), py::arg("seed") = std::nullopt, py::arg("threads") = 1,
        "CSV table for one subcommand; no timestamp line.");
  m.def("config_hash",
        [](const std::string& sub, const std::string& config_text) {
          return config_hash(parse_config(config_text, "<python>"), subcommand(sub));
        },
        py::arg("subcommand"), py::arg("config"));
}
