#pragma once

// Quasiperiodic lattice operators on finite index windows.
//
// Physical family:  (H(x)ψ)(n) = ψ(n+1) + ψ(n-1) + ε v(x + nα) ψ(n),  n ∈ ℤ
// Dual family:      (H̃(θ)ψ)(m) = ε (v̂ ∗ ψ)(m) + 2cos 2π(θ + m·α) ψ(m),  m ∈ ℤ^d
//
// Every operator is restricted to a box window; interactions leaving the box
// are dropped (Dirichlet) unless a periodic ring is requested explicitly.

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qpt {

using cplx = std::complex<double>;
using LatticeVector = std::vector<int>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Box {m ∈ ℤ^d : |m|_∞ ≤ N}. Sites are enumerated lexicographically with the
/// first coordinate most significant, so index 0 is (-N, ..., -N).
class Window {
 public:
  Window(int dim, int half_width);

  static Window line(int half_width) { return Window(1, half_width); }
  static Window box(int dim, int half_width) { return Window(dim, half_width); }

  int dim() const { return dim_; }
  int half_width() const { return half_width_; }
  std::size_t side() const { return static_cast<std::size_t>(2 * half_width_ + 1); }
  std::size_t size() const { return size_; }

  bool contains(std::span<const int> site) const;
  std::size_t index(std::span<const int> site) const;
  LatticeVector site(std::size_t index) const;

  // 1-D shortcuts.
  std::size_t index(int n) const { return static_cast<std::size_t>(n + half_width_); }
  int coordinate(std::size_t index) const { return static_cast<int>(index) - half_width_; }

  bool operator==(const Window&) const = default;

 private:
  int dim_;
  int half_width_;
  std::size_t size_;
};

int linf_norm(std::span<const int> m);

/// Finitely supported Fourier data v̂(m) of a trigonometric polynomial on 𝕋^d.
class TrigPotential {
 public:
  TrigPotential(int dim, std::map<LatticeVector, cplx> coeffs);

  /// v(x) = 2cos 2πx, i.e. v̂(±1) = 1.
  static TrigPotential almost_mathieu();

  int dim() const { return dim_; }
  int support_radius() const { return support_radius_; }
  const std::map<LatticeVector, cplx>& coefficients() const { return coeffs_; }
  cplx coefficient(std::span<const int> m) const;

  /// max |v̂(-m) - conj v̂(m)|; zero for a real-valued potential.
  double hermitian_defect() const;

 private:
  int dim_;
  int support_radius_ = 0;
  std::map<LatticeVector, cplx> coeffs_;
};

/// α ∈ [0,1)^d, optionally flagged as an exact rational with common denominator.
class FrequencyVector {
 public:
  explicit FrequencyVector(std::vector<double> alpha,
                           std::optional<long long> rational_denominator = std::nullopt);

  static FrequencyVector golden();
  static FrequencyVector rational(long long numerator, long long denominator);

  int dim() const { return static_cast<int>(alpha_.size()); }
  const std::vector<double>& components() const { return alpha_; }
  double operator[](std::size_t i) const { return alpha_[i]; }
  std::optional<long long> rational_denominator() const { return denominator_; }

  /// m·α reduced to [0,1).
  double dot_mod1(std::span<const int> m) const;

 private:
  std::vector<double> alpha_;
  std::optional<long long> denominator_;
};

enum class Boundary { dirichlet, periodic };
enum class OperatorKind { physical, dual };

/// Dense Hermitian matrix of H(x) or H̃(θ) over a window, plus its inputs.
struct WindowedOperator {
  Eigen::MatrixXcd matrix;
  OperatorKind kind;
  Window window;
  Boundary boundary = Boundary::dirichlet;
  double epsilon = 0.0;
  std::vector<double> phase;  // x ∈ 𝕋^d (physical) or {θ} (dual)
  std::vector<double> alpha;

  std::size_t size() const { return window.size(); }
  /// Entrywise max |M - M^*|.
  double hermitian_defect() const;
  /// True when the matrix is real with only the main and first off-diagonals.
  bool is_real_tridiagonal() const;
};

/// Σ_m v̂(m) e^{2πi m·x}; throws InvalidPotential if the imaginary part exceeds 1e-10.
double evaluate_potential(const TrigPotential& v, std::span<const double> x);

WindowedOperator build_hamiltonian(const TrigPotential& v, std::span<const double> x,
                                   const FrequencyVector& alpha, double epsilon,
                                   const Window& window,
                                   Boundary boundary = Boundary::dirichlet);

WindowedOperator build_dual_hamiltonian(const TrigPotential& v, double theta,
                                        const FrequencyVector& alpha, double epsilon,
                                        const Window& window);

/// (Aψ)(n) = i(ψ(n+1) - ψ(n-1)) on a 1-D window.
Eigen::VectorXcd apply_current(const Eigen::VectorXcd& psi,
                               Boundary boundary = Boundary::dirichlet);

/// Diagonal of Ã(θ): 2 sin 2π(m·α + θ) for each site of the window.
Eigen::VectorXd dual_current_diagonal(double theta, const FrequencyVector& alpha,
                                      const Window& window);

/// (v̂ ∗ ψ)(n) = Σ_m v̂(n - m) ψ(m), truncated to the window.
Eigen::VectorXcd convolve(const TrigPotential& v, const Eigen::VectorXcd& psi,
                          const Window& window);

}  // namespace qpt
