#include "qpt/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpt/errors.hpp"

namespace qpt {

namespace {

double frac(long double value) {
  long double r = value - std::floor(value);
  if (r >= 1.0L) r -= 1.0L;
  return static_cast<double>(r);
}

void require_dim(std::span<const double> point, int dim, const char* what) {
  if (static_cast<int>(point.size()) != dim) {
    throw PreconditionError(std::string(what) + ": point has dimension " +
                            std::to_string(point.size()) + ", expected " +
                            std::to_string(dim));
  }
}

}  // namespace

Window::Window(int dim, int half_width) : dim_(dim), half_width_(half_width), size_(1) {
  if (dim < 1) throw PreconditionError("Window: dimension must be positive");
  if (half_width < 0) throw PreconditionError("Window: half width must be non-negative");
  for (int i = 0; i < dim; ++i) size_ *= side();
}

bool Window::contains(std::span<const int> site) const {
  if (static_cast<int>(site.size()) != dim_) return false;
  return std::all_of(site.begin(), site.end(),
                     [this](int c) { return c >= -half_width_ && c <= half_width_; });
}

std::size_t Window::index(std::span<const int> site) const {
  std::size_t idx = 0;
  for (int c : site) idx = idx * side() + static_cast<std::size_t>(c + half_width_);
  return idx;
}

LatticeVector Window::site(std::size_t index) const {
  LatticeVector out(static_cast<std::size_t>(dim_));
  for (int i = dim_ - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(index % side()) - half_width_;
    index /= side();
  }
  return out;
}

int linf_norm(std::span<const int> m) {
  int r = 0;
  for (int c : m) r = std::max(r, std::abs(c));
  return r;
}

TrigPotential::TrigPotential(int dim, std::map<LatticeVector, cplx> coeffs)
    : dim_(dim), coeffs_(std::move(coeffs)) {
  if (dim < 1) throw PreconditionError("TrigPotential: dimension must be positive");
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    if (static_cast<int>(it->first.size()) != dim_) {
      throw PreconditionError("TrigPotential: coefficient index has wrong dimension");
    }
    if (it->second == cplx(0.0, 0.0)) {
      it = coeffs_.erase(it);
      continue;
    }
    support_radius_ = std::max(support_radius_, linf_norm(it->first));
    ++it;
  }
}

TrigPotential TrigPotential::almost_mathieu() {
  return TrigPotential(1, {{{1}, cplx(1.0, 0.0)}, {{-1}, cplx(1.0, 0.0)}});
}

cplx TrigPotential::coefficient(std::span<const int> m) const {
  auto it = coeffs_.find(LatticeVector(m.begin(), m.end()));
  return it == coeffs_.end() ? cplx(0.0, 0.0) : it->second;
}

double TrigPotential::hermitian_defect() const {
  double worst = 0.0;
  LatticeVector neg(static_cast<std::size_t>(dim_));
  for (const auto& [m, c] : coeffs_) {
    std::transform(m.begin(), m.end(), neg.begin(), [](int a) { return -a; });
    worst = std::max(worst, std::abs(coefficient(neg) - std::conj(c)));
  }
  return worst;
}

FrequencyVector::FrequencyVector(std::vector<double> alpha,
                                 std::optional<long long> rational_denominator)
    : alpha_(std::move(alpha)), denominator_(rational_denominator) {
  if (alpha_.empty()) throw PreconditionError("FrequencyVector: empty");
  for (double a : alpha_) {
    if (!(a >= 0.0 && a < 1.0)) {
      throw PreconditionError("FrequencyVector: components must lie in [0,1)");
    }
  }
  if (denominator_) {
    if (*denominator_ <= 0) throw PreconditionError("FrequencyVector: denominator must be positive");
    for (double a : alpha_) {
      const long double scaled = static_cast<long double>(a) * *denominator_;
      if (std::abs(scaled - std::round(scaled)) > 1e-12L) {
        throw PreconditionError("FrequencyVector: component not a multiple of 1/denominator");
      }
    }
  }
}

FrequencyVector FrequencyVector::golden() { return FrequencyVector({(std::sqrt(5.0) - 1.0) / 2.0}); }

FrequencyVector FrequencyVector::rational(long long numerator, long long denominator) {
  if (denominator <= 0) throw PreconditionError("FrequencyVector: denominator must be positive");
  const long long reduced = ((numerator % denominator) + denominator) % denominator;
  return FrequencyVector({static_cast<double>(reduced) / static_cast<double>(denominator)},
                         denominator);
}

double FrequencyVector::dot_mod1(std::span<const int> m) const {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < alpha_.size(); ++i) acc += static_cast<long double>(m[i]) * alpha_[i];
  return frac(acc);
}

double WindowedOperator::hermitian_defect() const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

bool WindowedOperator::is_real_tridiagonal() const {
  const auto n = matrix.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx z = matrix(i, j);
      if (z.imag() != 0.0) return false;
      if (std::abs(i - j) > 1 && z.real() != 0.0) return false;
    }
  }
  return true;
}

double evaluate_potential(const TrigPotential& v, std::span<const double> x) {
  require_dim(x, v.dim(), "evaluate_potential");
  cplx sum(0.0, 0.0);
  for (const auto& [m, c] : v.coefficients()) {
    long double phase = 0.0L;
    for (std::size_t i = 0; i < m.size(); ++i) phase += static_cast<long double>(m[i]) * x[i];
    sum += c * std::polar(1.0, kTwoPi * frac(phase));
  }
  if (std::abs(sum.imag()) > 1e-10) {
    throw InvalidPotential("evaluate_potential: imaginary part " + std::to_string(sum.imag()) +
                           " exceeds 1e-10; coefficients are not Hermitian-symmetric");
  }
  return sum.real();
}

WindowedOperator build_hamiltonian(const TrigPotential& v, std::span<const double> x,
                                   const FrequencyVector& alpha, double epsilon,
                                   const Window& window, Boundary boundary) {
  if (window.dim() != 1) throw PreconditionError("build_hamiltonian: window must be 1-D");
  if (epsilon < 0.0) throw PreconditionError("build_hamiltonian: epsilon must be >= 0");
  require_dim(x, v.dim(), "build_hamiltonian");
  if (alpha.dim() != v.dim()) throw PreconditionError("build_hamiltonian: alpha/potential dimension mismatch");
  const auto n = static_cast<Eigen::Index>(window.size());
  if (boundary == Boundary::periodic && n < 3) {
    throw PreconditionError("build_hamiltonian: periodic ring needs at least 3 sites");
  }

  WindowedOperator op{Eigen::MatrixXcd::Zero(n, n), OperatorKind::physical, window, boundary,
                      epsilon, std::vector<double>(x.begin(), x.end()), alpha.components()};
  std::vector<double> point(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int site = window.coordinate(static_cast<std::size_t>(i));
    for (std::size_t c = 0; c < x.size(); ++c) {
      point[c] = frac(static_cast<long double>(x[c]) + static_cast<long double>(site) * alpha[c]);
    }
    op.matrix(i, i) = epsilon == 0.0 ? 0.0 : epsilon * evaluate_potential(v, point);
    if (i + 1 < n) {
      op.matrix(i, i + 1) = 1.0;
      op.matrix(i + 1, i) = 1.0;
    }
  }
  if (boundary == Boundary::periodic) {
    op.matrix(0, n - 1) = 1.0;
    op.matrix(n - 1, 0) = 1.0;
  }
  return op;
}

WindowedOperator build_dual_hamiltonian(const TrigPotential& v, double theta,
                                        const FrequencyVector& alpha, double epsilon,
                                        const Window& window) {
  if (window.dim() != v.dim()) throw PreconditionError("build_dual_hamiltonian: window/potential dimension mismatch");
  if (alpha.dim() != v.dim()) throw PreconditionError("build_dual_hamiltonian: alpha/potential dimension mismatch");
  if (epsilon < 0.0) throw PreconditionError("build_dual_hamiltonian: epsilon must be >= 0");
  const auto n = static_cast<Eigen::Index>(window.size());
  WindowedOperator op{Eigen::MatrixXcd::Zero(n, n), OperatorKind::dual, window,
                      Boundary::dirichlet, epsilon, {theta}, alpha.components()};

  LatticeVector source(static_cast<std::size_t>(window.dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const LatticeVector m = window.site(static_cast<std::size_t>(i));
    op.matrix(i, i) += 2.0 * std::cos(kTwoPi * frac(static_cast<long double>(theta) + alpha.dot_mod1(m)));
    if (epsilon == 0.0) continue;
    for (const auto& [k, c] : v.coefficients()) {
      for (std::size_t d = 0; d < source.size(); ++d) source[d] = m[d] - k[d];
      if (!window.contains(source)) continue;
      op.matrix(i, static_cast<Eigen::Index>(window.index(source))) += epsilon * c;
    }
  }
  return op;
}

Eigen::VectorXcd apply_current(const Eigen::VectorXcd& psi, Boundary boundary) {
  const auto n = psi.size();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  const cplx i_unit(0.0, 1.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    cplx up = k + 1 < n ? psi(k + 1) : cplx(0.0);
    cplx down = k > 0 ? psi(k - 1) : cplx(0.0);
    if (boundary == Boundary::periodic && n >= 3) {
      if (k + 1 == n) up = psi(0);
      if (k == 0) down = psi(n - 1);
    }
    out(k) = i_unit * (up - down);
  }
  return out;
}

Eigen::VectorXd dual_current_diagonal(double theta, const FrequencyVector& alpha,
                                      const Window& window) {
  if (window.dim() != alpha.dim()) throw PreconditionError("dual_current_diagonal: dimension mismatch");
  Eigen::VectorXd out(static_cast<Eigen::Index>(window.size()));
  for (std::size_t i = 0; i < window.size(); ++i) {
    const LatticeVector m = window.site(i);
    out(static_cast<Eigen::Index>(i)) =
        2.0 * std::sin(kTwoPi * frac(static_cast<long double>(theta) + alpha.dot_mod1(m)));
  }
  return out;
}

Eigen::VectorXcd convolve(const TrigPotential& v, const Eigen::VectorXcd& psi,
                          const Window& window) {
  if (window.dim() != v.dim()) throw PreconditionError("convolve: dimension mismatch");
  if (static_cast<std::size_t>(psi.size()) != window.size()) throw PreconditionError("convolve: size mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
  LatticeVector target(static_cast<std::size_t>(window.dim()));
  for (std::size_t j = 0; j < window.size(); ++j) {
    const cplx value = psi(static_cast<Eigen::Index>(j));
    if (value == cplx(0.0)) continue;
    const LatticeVector m = window.site(j);
    for (const auto& [k, c] : v.coefficients()) {
      for (std::size_t d = 0; d < target.size(); ++d) target[d] = m[d] + k[d];
      if (!window.contains(target)) continue;
      out(static_cast<Eigen::Index>(window.index(target))) += c * value;
    }
  }
  return out;
}

}  // namespace qpt
