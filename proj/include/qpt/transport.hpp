#pragma once

// Transport analysis built on the dual family H̃(θ):
//
//  * EDL kernel: θ-average of the eigenfunction surrogate
//      S_θ(k, ℓ) = Σ_j |ψ_j(k)| |ψ_j(ℓ)|  ≥  sup_t |⟨δ_k, e^{-itH̃(θ)} δ_ℓ⟩|
//    and the fitted decay K(k, ℓ) ≈ C e^{-γ|k-ℓ|}.
//  * Tail scan: (θ-mean of ‖P_N^⊥ Q̃(θ,T) δ_k‖²_{ℓ¹})^{1/2} as a function of N.
//  * Pullback: Q(x)δ_p reconstructed from Q̃(θ) through the inverse duality
//    map, compared with the directly computed Q(x,T)δ_p.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qpt/duality.hpp"
#include "qpt/lattice.hpp"
#include "qpt/random.hpp"
#include "qpt/spectral.hpp"

namespace qpt {

/// θ_g = (g + offset)/count, g = 0..count-1.
std::vector<double> theta_ensemble(std::size_t count, double offset);
/// Equispaced ensemble with one uniformly drawn global offset.
std::vector<double> theta_ensemble(std::size_t count, Rng& rng);
/// count independent uniform points of 𝕋^dim.
std::vector<std::vector<double>> sample_torus(std::size_t count, int dim, Rng& rng);

/// S(k, ℓ) = Σ_j |ψ_j(k)||ψ_j(ℓ)| for one eigensystem.
Eigen::MatrixXd eigenfunction_surrogate(const EigenSystem& eig);

struct LogLinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double rms_residual = 0.0;
  std::size_t points = 0;
};
/// Ordinary least squares y ≈ intercept + slope·x.
LogLinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct EdlKernel {
  Window window;
  std::vector<double> thetas;
  Eigen::MatrixXd kernel;
  double prefactor = 0.0;  // C
  double gamma = 0.0;
  double fit_residual = 0.0;  // rms of ln K about the fitted line
  std::size_t pairs_used = 0;
  std::size_t pairs_excluded = 0;  // interior pairs with K = 0
  bool gamma_infinite = false;
  /// Mean of K over the interior pairs at each distance r = 0..N/2.
  std::vector<double> profile;
};

/// γ above ln(1/DBL_EPSILON) means the kernel falls below double resolution
/// within one site, which is reported as effectively infinite.
inline constexpr double kInfiniteGammaThreshold = 36.04365338911715;

EdlKernel edl_kernel(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                     std::span<const double> thetas, const Window& window, unsigned threads = 1);

/// Q̃(θ) = Σ_j ⟨Ãψ_j, ψ_j⟩ |ψ_j⟩⟨ψ_j| (block form on near-degenerate levels).
CesaroVelocity dual_velocity(const EigenSystem& dual_eig, double theta, const FrequencyVector& alpha,
                             double gap_tol = -1.0);

struct TailBoundReport {
  LatticeVector source;
  std::vector<int> cutoffs;
  double horizon = 0.0;
  std::vector<double> values;
  LogLinearFit fit;  // ln(value) against N over the strictly positive values
};

TailBoundReport tail_bound_scan(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                                const LatticeVector& source, double horizon,
                                const std::vector<int>& cutoffs, std::span<const double> thetas,
                                const Window& window, unsigned threads = 1);

struct PullbackOptions {
  int dual_half_width = 60;
  std::size_t theta_grid = 0;  // 0: bit_ceil(2(2N+1)) for physical half width N
  double window_tol = 1e-8;
  unsigned threads = 1;
};

/// The dual reconstruction of Q(x,T)δ_p (horizon finite) or Q(x)δ_p (horizon
/// infinite): Q̃ applied fiberwise to 𝒰δ_p = δ_0(m) e^{-2πipθ}, sampled on an
/// equispaced θ-grid, converted to θ-Fourier coefficients and pulled back with
/// 𝒰^{-1}. The map carries A to -Ã, so the pullback is of -Q̃. Independent of
/// x until evaluate() is called.
class DualReconstruction {
 public:
  DualReconstruction(const TrigPotential& v, const FrequencyVector& alpha, double epsilon, int p,
                     int physical_half_width, double horizon, const PullbackOptions& options);

  /// w(x; n) for n in [-N, N].
  Eigen::VectorXcd evaluate(std::span<const double> x) const;
  const FiberedFunction& physical_coefficients() const { return physical_; }
  std::size_t theta_grid() const { return grid_; }

 private:
  FiberedFunction physical_;
  std::size_t grid_;
};

struct PullbackResult {
  Eigen::VectorXcd direct;      // Q(x,T)δ_p on the physical window
  Eigen::VectorXcd prediction;  // dual reconstruction of Q(x)δ_p
  double gap = 0.0;             // ‖direct - prediction‖
  Window window;
};

PullbackResult pullback_velocity(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                                 std::span<const double> x, int p, double horizon,
                                 const PullbackOptions& options = {});

/// X(T)ψ0 = e^{iHT} X e^{-iHT} ψ0 on a 1-D window.
Eigen::VectorXcd heisenberg_position(const EigenSystem& eig, const Eigen::VectorXcd& psi0, double t);

struct ConvergenceReport {
  std::vector<double> x;
  int source = 0;
  std::vector<double> horizons;
  std::vector<double> velocity;  // ‖X(T)δ_p‖ / T
  std::vector<double> cauchy;    // ‖Q(x,2T)δ_p - Q(x,T)δ_p‖
  std::vector<double> gap;       // ‖Q(x,T)δ_p - Q_pred(x)δ_p‖ (empty if not requested)
  std::vector<double> current_norm;  // ‖Q(x,T)δ_p‖
  bool cauchy_decreasing = false;
  bool ballistic = false;
  int window_half_width = 0;
};

/// Cauchy differences at or below this are treated as already converged.
inline constexpr double kCauchyFloor = 1e-10;

struct BallisticOptions {
  double c_min = 0.05;
  bool compute_gap = true;
  int window_half_width = 0;  // 0: window_for_horizon(2·max T) + |p|
  PullbackOptions pullback;
};

/// Velocity, Cauchy differences and (when prediction is given) the gap for one
/// initial state evolved under current.eigensystem().
ConvergenceReport scan_state(const EigenbasisCurrent& current, const Eigen::VectorXcd& psi0,
                             const std::vector<double>& horizons, const Eigen::VectorXcd* prediction,
                             double c_min);

std::vector<ConvergenceReport> ballistic_scan(const TrigPotential& v, const FrequencyVector& alpha,
                                              double epsilon,
                                              const std::vector<std::vector<double>>& xs, int p,
                                              const std::vector<double>& horizons,
                                              const BallisticOptions& options = {});

}  // namespace qpt
