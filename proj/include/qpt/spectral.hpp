#pragma once

// Exact dynamics on windowed operators through a full Hermitian
// eigendecomposition H = V diag(E) V^*:
//
//   e^{-itH} ψ        = V diag(e^{-iE t}) V^* ψ
//   (1/T)∫₀ᵀ e^{itH} A e^{-itH} dt  =  V [A_{jk} φ((E_j - E_k)T)] V^*,
//   φ(s) = (e^{is} - 1)/(is),  φ(0) = 1,
//
// so Cesàro averages and their T → ∞ limit carry no quadrature error.

#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "qpt/lattice.hpp"

namespace qpt {

/// Sorted energies and orthonormal eigenvectors of a WindowedOperator.
/// Immutable; copies share the underlying storage.
class EigenSystem {
 public:
  struct Source {
    OperatorKind kind;
    Window window;
    Boundary boundary;
    double epsilon;
    std::vector<double> phase;
    std::vector<double> alpha;
  };

  EigenSystem(Eigen::VectorXd energies, Eigen::MatrixXd vectors, Source source,
              double max_residual = 0.0);
  EigenSystem(Eigen::VectorXd energies, Eigen::MatrixXcd vectors, Source source,
              double max_residual = 0.0);

  Eigen::Index size() const { return data_->energies.size(); }
  const Eigen::VectorXd& energies() const { return data_->energies; }
  const Source& source() const { return data_->source; }
  const Window& window() const { return data_->source.window; }

  /// Real symmetric inputs keep real eigenvectors (half the memory, real BLAS).
  bool is_real() const { return data_->real; }
  const Eigen::MatrixXd& real_vectors() const;
  const Eigen::MatrixXcd& complex_vectors() const;
  Eigen::MatrixXcd vectors() const;
  Eigen::VectorXcd vector(Eigen::Index j) const;

  /// max_j |E_j|, the spectral norm of the source operator.
  double spectral_norm() const;
  /// max_j ‖Hψ_j - E_jψ_j‖, recorded by diagonalize().
  double max_residual() const { return data_->max_residual; }
  /// max |V^*V - I| entrywise (O(n³); intended for checks).
  double orthonormality_defect() const;

  /// V^* ψ and V c.
  Eigen::VectorXcd coefficients(const Eigen::VectorXcd& psi) const;
  Eigen::VectorXcd synthesize(const Eigen::VectorXcd& coeffs) const;

  /// 1e-10 · ‖H‖.
  double default_gap_tol() const;
  /// Runs of consecutive energies closer than gap_tol, as [first, last] pairs
  /// (only runs of length ≥ 2 are listed).
  std::vector<std::pair<Eigen::Index, Eigen::Index>> degenerate_blocks(double gap_tol) const;
  /// min_j (E_{j+1} - E_j); +inf for a single level.
  double min_gap() const;

 private:
  struct Data {
    Eigen::VectorXd energies;
    bool real = true;
    Eigen::MatrixXd real_vectors;
    Eigen::MatrixXcd complex_vectors;
    Source source;
    double max_residual = 0.0;
  };
  std::shared_ptr<const Data> data_;
};

/// Full eigendecomposition. Throws NumericalError (with the residual) when the
/// solver fails or a residual exceeds 1e-9 · ‖H‖.
EigenSystem diagonalize(const WindowedOperator& h);

/// Σ_j e^{-iE_j t} ⟨ψ_j, ψ0⟩ ψ_j.
Eigen::VectorXcd propagate(const EigenSystem& eig, const Eigen::VectorXcd& psi0, double t);

struct PositionMoment {
  double mean = 0.0;    // Σ n|ψ(n)|² / ‖ψ‖²
  double norm_x = 0.0;  // ‖Xψ‖
};
PositionMoment position_moment(const Eigen::VectorXcd& psi, const Window& window);

/// Bounded observable whose Heisenberg average is taken: the hopping current
/// A = i(S - S^*) on a 1-D window or a real multiplication operator such as Ã(θ).
class CurrentOperator {
 public:
  static CurrentOperator hopping(Boundary boundary = Boundary::dirichlet);
  static CurrentOperator multiplication(Eigen::VectorXd diagonal);

  Eigen::VectorXcd apply(const Eigen::VectorXcd& psi) const;
  Eigen::MatrixXcd site_matrix(Eigen::Index n) const;

  bool is_hopping() const { return hopping_; }
  Boundary boundary() const { return boundary_; }
  const Eigen::VectorXd& diagonal() const { return diagonal_; }

 private:
  bool hopping_ = true;
  Boundary boundary_ = Boundary::dirichlet;
  Eigen::VectorXd diagonal_;
};

/// A_{jk} = ⟨ψ_j, Aψ_k⟩ together with the eigensystem it refers to. Computing
/// it is the O(n³) step; every Cesàro average at any T reuses it.
class EigenbasisCurrent {
 public:
  EigenbasisCurrent(EigenSystem eig, const CurrentOperator& current);

  const EigenSystem& eigensystem() const { return eig_; }
  const Eigen::MatrixXcd& matrix() const { return *matrix_; }

 private:
  EigenSystem eig_;
  std::shared_ptr<const Eigen::MatrixXcd> matrix_;
};

/// φ(s) = (e^{is} - 1)/(is) with a series branch for |s| < 1e-4.
cplx cesaro_factor(double s);

/// Q_T = (1/T)∫₀ᵀ e^{iHt}Ae^{-iHt}dt (finite T) or its T = ∞ limit, stored
/// lazily in the eigenbasis.
class CesaroVelocity {
 public:
  static constexpr double kInfinite = std::numeric_limits<double>::infinity();

  CesaroVelocity(EigenbasisCurrent current, double horizon,
                 std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks = {});

  double horizon() const { return horizon_; }
  bool is_asymptotic() const { return horizon_ == kInfinite; }
  /// Degenerate blocks kept whole by the T = ∞ truncation (empty when the
  /// spectrum is simple at gap_tol).
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& blocks() const { return blocks_; }

  cplx eigen_entry(Eigen::Index j, Eigen::Index k) const;
  Eigen::MatrixXcd eigen_matrix() const;
  Eigen::MatrixXcd site_matrix() const;
  /// Q_T ψ for a site-basis vector, in O(n²) without forming Q_T.
  Eigen::VectorXcd apply(const Eigen::VectorXcd& psi) const;

  const EigenbasisCurrent& current() const { return current_; }

 private:
  EigenbasisCurrent current_;
  double horizon_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks_;
  std::vector<Eigen::Index> block_of_;  // block id per level, -1 if simple
};

CesaroVelocity cesaro_velocity(const EigenbasisCurrent& current, double horizon);
CesaroVelocity cesaro_velocity(const EigenSystem& eig, const CurrentOperator& current,
                               double horizon);

/// Diagonal (block-diagonal on near-degenerate levels) part of A in the
/// eigenbasis: the T → ∞ limit of cesaro_velocity. gap_tol < 0 selects
/// EigenSystem::default_gap_tol().
CesaroVelocity asymptotic_diagonal(const EigenbasisCurrent& current, double gap_tol = -1.0);
CesaroVelocity asymptotic_diagonal(const EigenSystem& eig, const CurrentOperator& current,
                                   double gap_tol = -1.0);

/// 2·‖off-diagonal of A in the eigenbasis‖_F · max_{j≠k} |φ((E_j - E_k)T)|,
/// an upper bound for ‖Q_T - Q_∞‖_F when the spectrum is simple.
double diagonal_truncation_bound(const EigenbasisCurrent& current, double horizon);

inline constexpr double kLiebRobinsonSpeed = 2.0 * 2.718281828459045235360287471352;
inline constexpr double kWindowLogMargin = 5.0;

/// Half width N = ceil(R + 2eT + 5 ln(1/tol)) of a 1-D window whose Dirichlet
/// edges stay out of reach of the dynamics up to time T.
Window window_for_horizon(double horizon, int support_radius, double tol);

}  // namespace qpt
