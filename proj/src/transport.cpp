#include "qpt/transport.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>

#include <fftw3.h>

#include "qpt/errors.hpp"
#include "qpt/parallel.hpp"

namespace qpt {

namespace {

double l1_tail(const Eigen::VectorXcd& y, const Window& window, int cutoff) {
  double acc = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (linf_norm(window.site(i)) > cutoff) acc += std::abs(y(static_cast<Eigen::Index>(i)));
  }
  return acc;
}

Eigen::VectorXcd unit_vector(const Window& window, std::span<const int> site) {
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(window.size()));
  e(static_cast<Eigen::Index>(window.index(site))) = 1.0;
  return e;
}

struct FftwPlan {
  fftw_plan plan = nullptr;
  ~FftwPlan() {
    if (plan) fftw_destroy_plan(plan);
  }
};

}  // namespace

std::vector<double> theta_ensemble(std::size_t count, double offset) {
  if (count == 0) throw PreconditionError("theta_ensemble: empty ensemble");
  if (!(offset >= 0.0 && offset < 1.0)) throw PreconditionError("theta_ensemble: offset outside [0,1)");
  std::vector<double> thetas(count);
  for (std::size_t g = 0; g < count; ++g) {
    thetas[g] = (static_cast<double>(g) + offset) / static_cast<double>(count);
  }
  return thetas;
}

std::vector<double> theta_ensemble(std::size_t count, Rng& rng) {
  return theta_ensemble(count, rng.uniform());
}

std::vector<std::vector<double>> sample_torus(std::size_t count, int dim, Rng& rng) {
  std::vector<std::vector<double>> xs(count, std::vector<double>(static_cast<std::size_t>(dim)));
  for (auto& x : xs) {
    for (auto& c : x) c = rng.uniform();
  }
  return xs;
}

Eigen::MatrixXd eigenfunction_surrogate(const EigenSystem& eig) {
  const Eigen::MatrixXd w = eig.is_real() ? Eigen::MatrixXd(eig.real_vectors().cwiseAbs())
                                          : Eigen::MatrixXd(eig.complex_vectors().cwiseAbs());
  Eigen::MatrixXd s = w * w.transpose();
  // symmetric by construction up to BLAS rounding
  return 0.5 * (s + s.transpose());
}

LogLinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("fit_line: size mismatch");
  LogLinearFit fit;
  fit.points = x.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() < 2) {
    fit.intercept = fit.slope = fit.slope_stderr = fit.rms_residual = nan;
    return fit;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) {
    fit.intercept = fit.slope = fit.slope_stderr = fit.rms_residual = nan;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.rms_residual = std::sqrt(ssr / n);
  fit.slope_stderr = x.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return fit;
}

EdlKernel edl_kernel(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                     std::span<const double> thetas, const Window& window, unsigned threads) {
  if (thetas.empty()) throw PreconditionError("edl_kernel: no θ samples");
  if (!(epsilon > 0.0)) throw PreconditionError("edl_kernel: ε must be positive");

  std::vector<Eigen::MatrixXd> per_theta(thetas.size());
  parallel_for(thetas.size(), threads, [&](std::size_t i) {
    per_theta[i] = eigenfunction_surrogate(
        diagonalize(build_dual_hamiltonian(v, thetas[i], alpha, epsilon, window)));
  });

  EdlKernel out{window, std::vector<double>(thetas.begin(), thetas.end()), {}, 0.0, 0.0, 0.0, 0, 0, false, {}};
  out.kernel = pairwise_sum(per_theta) / static_cast<double>(thetas.size());
  per_theta.clear();

  const int half = window.half_width() / 2;
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (linf_norm(window.site(i)) <= half) interior.push_back(i);
  }
  std::vector<double> profile_sum(static_cast<std::size_t>(half) + 1, 0.0);
  std::vector<std::size_t> profile_count(profile_sum.size(), 0);
  std::vector<double> rs, logs;
  std::map<int, bool> distances_with_mass;
  LatticeVector diff(static_cast<std::size_t>(window.dim()));
  for (std::size_t a = 0; a < interior.size(); ++a) {
    const LatticeVector sa = window.site(interior[a]);
    for (std::size_t b = 0; b < interior.size(); ++b) {
      const LatticeVector sb = window.site(interior[b]);
      for (std::size_t d = 0; d < diff.size(); ++d) diff[d] = sa[d] - sb[d];
      const int r = linf_norm(diff);
      if (r > half) continue;
      const double k = out.kernel(static_cast<Eigen::Index>(interior[a]), static_cast<Eigen::Index>(interior[b]));
      profile_sum[static_cast<std::size_t>(r)] += k;
      ++profile_count[static_cast<std::size_t>(r)];
      if (b <= a || r < 2) continue;
      if (k > 0.0) {
        rs.push_back(r);
        logs.push_back(std::log(k));
        distances_with_mass[r] = true;
      } else {
        ++out.pairs_excluded;
      }
    }
  }
  out.profile.resize(profile_sum.size());
  for (std::size_t r = 0; r < profile_sum.size(); ++r) {
    out.profile[r] = profile_count[r] ? profile_sum[r] / static_cast<double>(profile_count[r]) : 0.0;
  }
  out.pairs_used = rs.size();

  if (distances_with_mass.size() < 2) {
    out.gamma_infinite = true;
    out.gamma = std::numeric_limits<double>::infinity();
    out.prefactor = 1.0;
    out.fit_residual = 0.0;
    return out;
  }
  const LogLinearFit fit = fit_line(rs, logs);
  out.gamma = -fit.slope;
  out.prefactor = std::exp(fit.intercept);
  out.fit_residual = fit.rms_residual;
  out.gamma_infinite = out.gamma > kInfiniteGammaThreshold;
  return out;
}

CesaroVelocity dual_velocity(const EigenSystem& dual_eig, double theta, const FrequencyVector& alpha,
                             double gap_tol) {
  return asymptotic_diagonal(
      dual_eig, CurrentOperator::multiplication(dual_current_diagonal(theta, alpha, dual_eig.window())),
      gap_tol);
}

TailBoundReport tail_bound_scan(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                                const LatticeVector& source, double horizon,
                                const std::vector<int>& cutoffs, std::span<const double> thetas,
                                const Window& window, unsigned threads) {
  if (thetas.empty()) throw PreconditionError("tail_bound_scan: no θ samples");
  if (cutoffs.empty()) throw PreconditionError("tail_bound_scan: no cutoffs");
  if (!(horizon > 0.0)) throw PreconditionError("tail_bound_scan: horizon must be positive");
  if (static_cast<int>(source.size()) != window.dim()) throw PreconditionError("tail_bound_scan: source dimension");
  const auto [lo, hi] = std::minmax_element(cutoffs.begin(), cutoffs.end());
  if (2 * *hi > window.half_width()) {
    throw PreconditionError("tail_bound_scan: largest cutoff " + std::to_string(*hi) +
                            " exceeds half the window (" + std::to_string(window.half_width()) + ")");
  }
  if (linf_norm(source) >= *lo) throw PreconditionError("tail_bound_scan: source not inside the smallest cutoff");

  const Eigen::VectorXcd delta = unit_vector(window, source);
  std::vector<Eigen::VectorXd> per_theta(thetas.size());
  parallel_for(thetas.size(), threads, [&](std::size_t i) {
    const EigenSystem eig = diagonalize(build_dual_hamiltonian(v, thetas[i], alpha, epsilon, window));
    const CesaroVelocity q = cesaro_velocity(
        eig, CurrentOperator::multiplication(dual_current_diagonal(thetas[i], alpha, window)), horizon);
    const Eigen::VectorXcd y = q.apply(delta);
    Eigen::VectorXd sq(static_cast<Eigen::Index>(cutoffs.size()));
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      const double t = l1_tail(y, window, cutoffs[c]);
      sq(static_cast<Eigen::Index>(c)) = t * t;
    }
    per_theta[i] = sq;
  });
  const Eigen::VectorXd mean = pairwise_sum(per_theta) / static_cast<double>(thetas.size());

  TailBoundReport report{source, cutoffs, horizon, {}, {}};
  std::vector<double> ns, logs;
  for (std::size_t c = 0; c < cutoffs.size(); ++c) {
    const double value = std::sqrt(mean(static_cast<Eigen::Index>(c)));
    report.values.push_back(value);
    if (value > 0.0) {
      ns.push_back(cutoffs[c]);
      logs.push_back(std::log(value));
    }
  }
  report.fit = fit_line(ns, logs);
  return report;
}

DualReconstruction::DualReconstruction(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                                       int p, int physical_half_width, double horizon,
                                       const PullbackOptions& options)
    : physical_(FiberSide::physical, Window::box(alpha.dim(), std::max(options.dual_half_width, 0)),
                Window::line(std::max(physical_half_width, 0))),
      grid_(0) {
  if (physical_half_width < 0 || options.dual_half_width < 0) {
    throw PreconditionError("DualReconstruction: negative window");
  }
  if (std::abs(p) > physical_half_width) throw PreconditionError("DualReconstruction: source outside the window");
  const std::size_t span = 2 * static_cast<std::size_t>(physical_half_width) + 1;
  grid_ = options.theta_grid ? options.theta_grid : std::bit_ceil(2 * span);
  if (grid_ < span) throw PreconditionError("DualReconstruction: θ grid smaller than the mode range");

  const Window dual_window = Window::box(alpha.dim(), options.dual_half_width);
  const std::size_t sites = dual_window.size();
  const LatticeVector origin(static_cast<std::size_t>(alpha.dim()), 0);
  const Eigen::VectorXcd delta0 = unit_vector(dual_window, origin);

  // 𝒰 sends the site n to the θ-mode -n, so 𝒰X𝒰⁻¹ reverses orientation and
  // 𝒰A𝒰⁻¹ = -Ã. samples[m * G + g] = -e^{-2πipθ_g} (Q̃(θ_g) δ_0)(m)
  std::vector<cplx> samples(sites * grid_);
  parallel_for(grid_, options.threads, [&](std::size_t g) {
    const double theta = static_cast<double>(g) / static_cast<double>(grid_);
    const EigenSystem eig = diagonalize(build_dual_hamiltonian(v, theta, alpha, epsilon, dual_window));
    const CurrentOperator current = CurrentOperator::multiplication(dual_current_diagonal(theta, alpha, dual_window));
    const CesaroVelocity q = horizon == CesaroVelocity::kInfinite ? asymptotic_diagonal(eig, current)
                                                                   : cesaro_velocity(eig, current, horizon);
    const Eigen::VectorXcd y = q.apply(delta0);
    const long long phase_num = (static_cast<long long>(-p) * static_cast<long long>(g)) % static_cast<long long>(grid_);
    const cplx phase = std::polar(1.0, kTwoPi * static_cast<double>(phase_num) / static_cast<double>(grid_));
    for (std::size_t m = 0; m < sites; ++m) samples[m * grid_ + g] = -phase * y(static_cast<Eigen::Index>(m));
  });

  std::vector<cplx> spectrum(samples.size());
  {
    const int n = static_cast<int>(grid_);
    FftwPlan plan;
    plan.plan = fftw_plan_many_dft(1, &n, static_cast<int>(sites),
                                   reinterpret_cast<fftw_complex*>(samples.data()), nullptr, 1, n,
                                   reinterpret_cast<fftw_complex*>(spectrum.data()), nullptr, 1, n,
                                   FFTW_FORWARD, FFTW_ESTIMATE);
    if (!plan.plan) throw NumericalError("DualReconstruction: FFT planning failed");
    fftw_execute(plan.plan);
  }

  const Window modes = Window::line(physical_half_width);
  FiberedFunction dual(FiberSide::dual, modes, dual_window);
  const double scale = 1.0 / static_cast<double>(grid_);
  for (std::size_t qi = 0; qi < modes.size(); ++qi) {
    const long long q = modes.coordinate(qi);
    const auto slot = static_cast<std::size_t>((q % static_cast<long long>(grid_) + static_cast<long long>(grid_)) %
                                               static_cast<long long>(grid_));
    for (std::size_t m = 0; m < sites; ++m) dual.at(qi, m) = scale * spectrum[m * grid_ + slot];
  }
  physical_ = inverse_duality_transform(dual, alpha);
}

Eigen::VectorXcd DualReconstruction::evaluate(std::span<const double> x) const {
  return physical_.fiber(x);
}

PullbackResult pullback_velocity(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                                 std::span<const double> x, int p, double horizon,
                                 const PullbackOptions& options) {
  if (!(horizon > 0.0)) throw PreconditionError("pullback_velocity: horizon must be positive");
  if (static_cast<int>(x.size()) != alpha.dim()) throw PreconditionError("pullback_velocity: x dimension");
  const double reach = horizon == CesaroVelocity::kInfinite ? 0.0 : horizon;
  const int n = window_for_horizon(reach, v.support_radius(), options.window_tol).half_width() + std::abs(p);
  const Window window = Window::line(n);

  const EigenSystem eig = diagonalize(build_hamiltonian(v, x, alpha, epsilon, window));
  const EigenbasisCurrent current(eig, CurrentOperator::hopping());
  const CesaroVelocity q = horizon == CesaroVelocity::kInfinite ? asymptotic_diagonal(current)
                                                                 : cesaro_velocity(current, horizon);
  const int site[1] = {p};
  PullbackResult out{q.apply(unit_vector(window, site)), {}, 0.0, window};
  const DualReconstruction dual(v, alpha, epsilon, p, n, CesaroVelocity::kInfinite, options);
  out.prediction = dual.evaluate(x);
  out.gap = (out.direct - out.prediction).norm();
  return out;
}

Eigen::VectorXcd heisenberg_position(const EigenSystem& eig, const Eigen::VectorXcd& psi0, double t) {
  const Window& window = eig.window();
  if (window.dim() != 1) throw PreconditionError("heisenberg_position: 1-D window required");
  Eigen::VectorXcd phi = propagate(eig, psi0, t);
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    phi(i) *= static_cast<double>(window.coordinate(static_cast<std::size_t>(i)));
  }
  return propagate(eig, phi, -t);
}

ConvergenceReport scan_state(const EigenbasisCurrent& current, const Eigen::VectorXcd& psi0,
                             const std::vector<double>& horizons, const Eigen::VectorXcd* prediction,
                             double c_min) {
  const EigenSystem& eig = current.eigensystem();
  ConvergenceReport r;
  r.horizons = horizons;
  r.window_half_width = eig.window().half_width();
  for (double t : horizons) {
    const Eigen::VectorXcd w = cesaro_velocity(current, t).apply(psi0);
    const Eigen::VectorXcd w2 = cesaro_velocity(current, 2.0 * t).apply(psi0);
    r.velocity.push_back(heisenberg_position(eig, psi0, t).norm() / t);
    r.cauchy.push_back((w2 - w).norm());
    r.current_norm.push_back(w.norm());
    if (prediction) r.gap.push_back((w - *prediction).norm());
  }
  r.cauchy_decreasing = true;
  for (std::size_t k = 1; k < r.cauchy.size(); ++k) {
    // differences at roundoff level (commuting case) count as converged
    const bool settled = r.cauchy[k] <= kCauchyFloor && r.cauchy[k - 1] <= kCauchyFloor;
    if (!(r.cauchy[k] < r.cauchy[k - 1]) && !settled) r.cauchy_decreasing = false;
  }
  r.ballistic = !r.velocity.empty() && r.velocity.back() > c_min && r.cauchy_decreasing;
  return r;
}

std::vector<ConvergenceReport> ballistic_scan(const TrigPotential& v, const FrequencyVector& alpha,
                                              double epsilon,
                                              const std::vector<std::vector<double>>& xs, int p,
                                              const std::vector<double>& horizons,
                                              const BallisticOptions& options) {
  if (horizons.empty()) throw PreconditionError("ballistic_scan: empty T grid");
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    if (!(horizons[k] > 0.0) || !std::isfinite(horizons[k])) {
      throw PreconditionError("ballistic_scan: T grid must be positive and finite");
    }
    if (k > 0 && !(horizons[k] > horizons[k - 1])) throw PreconditionError("ballistic_scan: T grid must increase");
  }
  for (const auto& x : xs) {
    if (static_cast<int>(x.size()) != alpha.dim()) throw PreconditionError("ballistic_scan: x dimension");
  }
  const int n = options.window_half_width > 0
                    ? options.window_half_width
                    : window_for_horizon(2.0 * horizons.back(), v.support_radius(), options.pullback.window_tol)
                              .half_width() + std::abs(p);
  if (std::abs(p) > n) throw PreconditionError("ballistic_scan: source outside the window");
  const Window window = Window::line(n);
  const int site[1] = {p};
  const Eigen::VectorXcd delta = unit_vector(window, site);

  std::optional<DualReconstruction> dual;
  if (options.compute_gap) dual.emplace(v, alpha, epsilon, p, n, CesaroVelocity::kInfinite, options.pullback);

  std::vector<ConvergenceReport> reports(xs.size());
  parallel_for(xs.size(), options.pullback.threads, [&](std::size_t i) {
    const EigenSystem eig = diagonalize(build_hamiltonian(v, xs[i], alpha, epsilon, window));
    const EigenbasisCurrent current(eig, CurrentOperator::hopping());
    const Eigen::VectorXcd prediction = dual ? dual->evaluate(xs[i]) : Eigen::VectorXcd();
    reports[i] = scan_state(current, delta, horizons, dual ? &prediction : nullptr, options.c_min);
    reports[i].x = xs[i];
    reports[i].source = p;
  });
  return reports;
}

}  // namespace qpt
