#pragma once

// Aubry duality on finitely supported fibered functions, represented exactly
// by Fourier coefficients:
//
//   physical  Ψ(x, n) = Σ_m Ψ̂(m, n) e^{2πi m·x},   m ∈ ℤ^d (x-modes), n ∈ ℤ
//   dual      Φ(θ, m) = Σ_q Φ̂(q, m) e^{2πi q θ},    q ∈ ℤ (θ-modes),  m ∈ ℤ^d
//
// The duality map (𝒰Ψ)(θ, m) = Σ_n e^{-2πi n(θ + m·α)} Ψ̂(m, n) intertwines
// the fiberwise actions of H(x) and H̃(θ) exactly. On coefficients it is the
// reindexing Φ̂(-n, m) = e^{-2πi n m·α} Ψ̂(m, n).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qpt/lattice.hpp"
#include "qpt/random.hpp"

namespace qpt {

enum class FiberSide { physical, dual };

class FiberedFunction {
 public:
  /// Zero function. Physical: modes is d-dimensional, sites 1-D. Dual: modes
  /// is 1-D, sites d-dimensional.
  FiberedFunction(FiberSide side, Window modes, Window sites);

  FiberSide side() const { return side_; }
  const Window& modes() const { return modes_; }
  const Window& sites() const { return sites_; }

  /// Flat storage, index = mode_index * sites().size() + site_index.
  const Eigen::VectorXcd& coefficients() const { return coeffs_; }
  Eigen::VectorXcd& coefficients() { return coeffs_; }

  cplx& at(std::size_t mode_index, std::size_t site_index) {
    return coeffs_(static_cast<Eigen::Index>(mode_index * sites_.size() + site_index));
  }
  cplx at(std::size_t mode_index, std::size_t site_index) const {
    return coeffs_(static_cast<Eigen::Index>(mode_index * sites_.size() + site_index));
  }

  /// L²(𝕋; ℓ²) norm, exact by Parseval.
  double norm() const { return coeffs_.norm(); }

  /// Distance from the nonzero coefficients to the box edge, in mode and site
  /// directions (ℓ∞). A zero function reports the full half widths + 1.
  int mode_margin() const;
  int site_margin() const;

  /// The fiber at a point: x ∈ 𝕋^d for physical functions, θ ∈ 𝕋 for dual ones.
  Eigen::VectorXcd fiber(std::span<const double> point) const;

 private:
  FiberSide side_;
  Window modes_;
  Window sites_;
  Eigen::VectorXcd coeffs_;
};

/// i.i.d. complex Gaussian coefficients on the whole box.
FiberedFunction random_fibered(FiberSide side, const Window& modes, const Window& sites, Rng& rng);

FiberedFunction duality_transform(const FiberedFunction& psi, const FrequencyVector& alpha);
FiberedFunction inverse_duality_transform(const FiberedFunction& phi, const FrequencyVector& alpha);

/// (HΨ)(x, n) fiberwise in x, on the coefficient box (Dirichlet truncation).
FiberedFunction apply_physical_hamiltonian(const FiberedFunction& psi, const TrigPotential& v,
                                           const FrequencyVector& alpha, double epsilon);
/// (H̃Φ)(θ, m) fiberwise in θ, on the coefficient box (Dirichlet truncation).
FiberedFunction apply_dual_hamiltonian(const FiberedFunction& phi, const TrigPotential& v,
                                       const FrequencyVector& alpha, double epsilon);

/// ‖𝒰HΨ - H̃𝒰Ψ‖ / ‖Ψ‖ for one physical function. dual_alpha (default: alpha)
/// sets the frequency of H̃ only. Throws PreconditionError when Ψ does not keep
/// a margin of support_radius(v) modes and one site from its box edge.
double duality_residual(const FiberedFunction& psi, const TrigPotential& v,
                        const FrequencyVector& alpha, double epsilon,
                        const std::optional<FrequencyVector>& dual_alpha = std::nullopt);

struct DualityCheck {
  double max_residual = 0.0;
  std::vector<double> residuals;
};

/// Random test functions supported in |m|_∞ ≤ mode_radius, |n| ≤ site_radius,
/// embedded in a box padded by the interaction ranges.
DualityCheck verify_duality(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                            int test_count, int mode_radius, int site_radius, std::uint64_t seed,
                            const std::optional<FrequencyVector>& dual_alpha = std::nullopt);

/// θ_m for each dual site m.
class ShearPhases {
 public:
  explicit ShearPhases(std::function<double(std::span<const int>)> rule) : rule_(std::move(rule)) {}
  static ShearPhases none();
  /// θ_m = m·α.
  static ShearPhases canonical(const FrequencyVector& alpha);

  double operator()(std::span<const int> m) const { return rule_(m); }

 private:
  std::function<double(std::span<const int>)> rule_;
};

struct L21Norm {
  double value = 0.0;
  std::size_t grid_size = 0;
};

/// {∫_𝕋 (Σ_m |Φ(θ + θ_m; m)|)² dθ}^{1/2} by periodic trapezoid rule, doubling
/// the θ-grid from 8(Q+1) points until successive values agree to 1e-8.
L21Norm l21_dual_norm(const FiberedFunction& phi, const ShearPhases& phases,
                      std::size_t max_grid = std::size_t{1} << 24);

}  // namespace qpt
