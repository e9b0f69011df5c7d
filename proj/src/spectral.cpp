#include "qpt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eigensolver.hpp"
#include "qpt/errors.hpp"

namespace qpt {

namespace {

EigenSystem::Source source_of(const WindowedOperator& h) {
  return {h.kind, h.window, h.boundary, h.epsilon, h.phase, h.alpha};
}

bool is_real_matrix(const Eigen::MatrixXcd& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; }

// D(n, :) = V(n+1, :) - V(n-1, :), so that A V = i D.
template <typename Matrix>
Matrix hopping_difference(const Matrix& v, Boundary boundary) {
  const auto n = v.rows();
  Matrix d = Matrix::Zero(n, v.cols());
  if (n > 1) {
    d.topRows(n - 1) += v.bottomRows(n - 1);
    d.bottomRows(n - 1) -= v.topRows(n - 1);
  }
  if (boundary == Boundary::periodic && n >= 3) {
    d.row(n - 1) += v.row(0);
    d.row(0) -= v.row(n - 1);
  }
  return d;
}

}  // namespace

EigenSystem::EigenSystem(Eigen::VectorXd energies, Eigen::MatrixXd vectors, Source source,
                         double max_residual) {
  data_ = std::make_shared<const Data>(
      Data{std::move(energies), true, std::move(vectors), {}, std::move(source), max_residual});
}

EigenSystem::EigenSystem(Eigen::VectorXd energies, Eigen::MatrixXcd vectors, Source source,
                         double max_residual) {
  data_ = std::make_shared<const Data>(
      Data{std::move(energies), false, {}, std::move(vectors), std::move(source), max_residual});
}

const Eigen::MatrixXd& EigenSystem::real_vectors() const {
  if (!data_->real) throw PreconditionError("EigenSystem: eigenvectors are complex");
  return data_->real_vectors;
}

const Eigen::MatrixXcd& EigenSystem::complex_vectors() const {
  if (data_->real) throw PreconditionError("EigenSystem: eigenvectors are real");
  return data_->complex_vectors;
}

Eigen::MatrixXcd EigenSystem::vectors() const {
  if (data_->real) return data_->real_vectors.cast<cplx>();
  return data_->complex_vectors;
}

Eigen::VectorXcd EigenSystem::vector(Eigen::Index j) const {
  if (data_->real) return data_->real_vectors.col(j).cast<cplx>();
  return data_->complex_vectors.col(j);
}

double EigenSystem::spectral_norm() const {
  return data_->energies.size() == 0 ? 0.0 : data_->energies.cwiseAbs().maxCoeff();
}

double EigenSystem::orthonormality_defect() const {
  const auto n = size();
  if (data_->real) {
    const Eigen::MatrixXd gram = data_->real_vectors.transpose() * data_->real_vectors;
    return (gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  }
  const Eigen::MatrixXcd gram = data_->complex_vectors.adjoint() * data_->complex_vectors;
  return (gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
}

Eigen::VectorXcd EigenSystem::coefficients(const Eigen::VectorXcd& psi) const {
  if (psi.size() != size()) throw PreconditionError("EigenSystem: vector does not match window");
  if (data_->real) {
    Eigen::VectorXcd out(size());
    out.real() = data_->real_vectors.transpose() * psi.real();
    out.imag() = data_->real_vectors.transpose() * psi.imag();
    return out;
  }
  return data_->complex_vectors.adjoint() * psi;
}

Eigen::VectorXcd EigenSystem::synthesize(const Eigen::VectorXcd& coeffs) const {
  if (coeffs.size() != size()) throw PreconditionError("EigenSystem: coefficient count mismatch");
  if (data_->real) {
    Eigen::VectorXcd out(size());
    out.real() = data_->real_vectors * coeffs.real();
    out.imag() = data_->real_vectors * coeffs.imag();
    return out;
  }
  return data_->complex_vectors * coeffs;
}

double EigenSystem::default_gap_tol() const { return 1e-10 * std::max(spectral_norm(), 1.0); }

std::vector<std::pair<Eigen::Index, Eigen::Index>> EigenSystem::degenerate_blocks(
    double gap_tol) const {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;
  const auto& e = data_->energies;
  Eigen::Index start = 0;
  for (Eigen::Index j = 1; j <= e.size(); ++j) {
    if (j < e.size() && e(j) - e(j - 1) < gap_tol) continue;
    if (j - 1 > start) blocks.emplace_back(start, j - 1);
    start = j;
  }
  return blocks;
}

double EigenSystem::min_gap() const {
  const auto& e = data_->energies;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 1; j < e.size(); ++j) gap = std::min(gap, e(j) - e(j - 1));
  return gap;
}

EigenSystem diagonalize(const WindowedOperator& h) {
  const auto n = static_cast<Eigen::Index>(h.size());
  if (h.matrix.rows() != n || h.matrix.cols() != n) {
    throw PreconditionError("diagonalize: matrix does not match its window");
  }
  const double defect = h.hermitian_defect();
  if (defect > 1e-12) {
    std::ostringstream msg;
    msg << "diagonalize: operator is not Hermitian (defect " << defect << ")";
    throw PreconditionError(msg.str());
  }

  Eigen::VectorXd energies;
  double residual = 0.0;
  const double scale = std::max(1.0, h.matrix.cwiseAbs().rowwise().sum().maxCoeff());
  auto check = [&](double r) {
    if (!(r <= 1e-9 * scale)) {
      std::ostringstream msg;
      msg << "diagonalize: eigenpair residual " << r << " exceeds 1e-9 * ||H|| = " << 1e-9 * scale;
      throw NumericalError(msg.str());
    }
  };

  if (h.is_real_tridiagonal()) {
    const Eigen::VectorXd d = h.matrix.diagonal().real();
    const Eigen::VectorXd e = n > 1 ? Eigen::VectorXd(h.matrix.diagonal(1).real()) : Eigen::VectorXd();
    Eigen::MatrixXd v;
    detail::tridiagonal_eigensystem(d, e, energies, v);
    Eigen::MatrixXd r = d.asDiagonal() * v;
    if (n > 1) {
      r.topRows(n - 1) += e.asDiagonal() * v.bottomRows(n - 1);
      r.bottomRows(n - 1) += e.asDiagonal() * v.topRows(n - 1);
    }
    r -= v * energies.asDiagonal();
    residual = r.colwise().norm().maxCoeff();
    check(residual);
    return EigenSystem(std::move(energies), std::move(v), source_of(h), residual);
  }
  if (is_real_matrix(h.matrix)) {
    const Eigen::MatrixXd m = h.matrix.real();
    Eigen::MatrixXd v;
    detail::symmetric_eigensystem(m, energies, v);
    residual = (m * v - v * energies.asDiagonal()).colwise().norm().maxCoeff();
    check(residual);
    return EigenSystem(std::move(energies), std::move(v), source_of(h), residual);
  }
  Eigen::MatrixXcd v;
  detail::hermitian_eigensystem(h.matrix, energies, v);
  residual = (h.matrix * v - v * energies.cast<cplx>().asDiagonal()).colwise().norm().maxCoeff();
  check(residual);
  return EigenSystem(std::move(energies), std::move(v), source_of(h), residual);
}

Eigen::VectorXcd propagate(const EigenSystem& eig, const Eigen::VectorXcd& psi0, double t) {
  if (psi0.size() != eig.size()) {
    throw PreconditionError("propagate: initial state has " + std::to_string(psi0.size()) +
                            " sites, eigensystem has " + std::to_string(eig.size()));
  }
  if (t == 0.0) return psi0;
  Eigen::VectorXcd c = eig.coefficients(psi0);
  const auto& e = eig.energies();
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) *= std::polar(1.0, -e(j) * t);
  return eig.synthesize(c);
}

PositionMoment position_moment(const Eigen::VectorXcd& psi, const Window& window) {
  if (window.dim() != 1) throw PreconditionError("position_moment: window must be 1-D");
  if (static_cast<std::size_t>(psi.size()) != window.size()) {
    throw PreconditionError("position_moment: vector does not match window");
  }
  double mass = 0.0, first = 0.0, second = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double n = window.coordinate(static_cast<std::size_t>(i));
    const double w = std::norm(psi(i));
    mass += w;
    first += n * w;
    second += n * n * w;
  }
  if (mass == 0.0) throw PreconditionError("position_moment: zero vector");
  return {first / mass, std::sqrt(second)};
}

CurrentOperator CurrentOperator::hopping(Boundary boundary) {
  CurrentOperator op;
  op.hopping_ = true;
  op.boundary_ = boundary;
  return op;
}

CurrentOperator CurrentOperator::multiplication(Eigen::VectorXd diagonal) {
  CurrentOperator op;
  op.hopping_ = false;
  op.diagonal_ = std::move(diagonal);
  return op;
}

Eigen::VectorXcd CurrentOperator::apply(const Eigen::VectorXcd& psi) const {
  if (hopping_) return apply_current(psi, boundary_);
  if (psi.size() != diagonal_.size()) throw PreconditionError("CurrentOperator: size mismatch");
  return diagonal_.cast<cplx>().cwiseProduct(psi);
}

Eigen::MatrixXcd CurrentOperator::site_matrix(Eigen::Index n) const {
  if (!hopping_) {
    if (n != diagonal_.size()) throw PreconditionError("CurrentOperator: size mismatch");
    return diagonal_.cast<cplx>().asDiagonal();
  }
  const Eigen::MatrixXd d = hopping_difference(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)), boundary_);
  return cplx(0.0, 1.0) * d.cast<cplx>();
}

EigenbasisCurrent::EigenbasisCurrent(EigenSystem eig, const CurrentOperator& current)
    : eig_(std::move(eig)) {
  const auto n = eig_.size();
  if (!current.is_hopping() && current.diagonal().size() != n) {
    throw PreconditionError("EigenbasisCurrent: multiplication operator does not match window");
  }
  if (current.is_hopping() && eig_.window().dim() != 1) {
    throw PreconditionError("EigenbasisCurrent: hopping current needs a 1-D window");
  }
  auto m = std::make_shared<Eigen::MatrixXcd>();
  if (eig_.is_real()) {
    const Eigen::MatrixXd& v = eig_.real_vectors();
    if (current.is_hopping()) {
      const Eigen::MatrixXd d = hopping_difference(v, current.boundary());
      Eigen::MatrixXd k = v.transpose() * d;
      m->resize(n, n);
      m->real().setZero();
      m->imag() = k;
    } else {
      const Eigen::MatrixXd av = current.diagonal().asDiagonal() * v;
      *m = (v.transpose() * av).cast<cplx>();
    }
  } else {
    const Eigen::MatrixXcd& v = eig_.complex_vectors();
    if (current.is_hopping()) {
      *m = cplx(0.0, 1.0) * (v.adjoint() * hopping_difference(v, current.boundary()));
    } else {
      *m = v.adjoint() * (current.diagonal().cast<cplx>().asDiagonal() * v);
    }
  }
  matrix_ = std::move(m);
}

cplx cesaro_factor(double s) {
  if (std::abs(s) < 1e-4) {
    const double s2 = s * s;
    return {1.0 - s2 / 6.0, s / 2.0 - s * s2 / 24.0};
  }
  const double half = std::sin(0.5 * s);
  return {std::sin(s) / s, 2.0 * half * half / s};
}

CesaroVelocity::CesaroVelocity(EigenbasisCurrent current, double horizon,
                               std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks)
    : current_(std::move(current)), horizon_(horizon), blocks_(std::move(blocks)) {
  if (!(horizon > 0.0)) throw PreconditionError("cesaro_velocity: T must be positive");
  block_of_.assign(static_cast<std::size_t>(current_.eigensystem().size()), -1);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (Eigen::Index j = blocks_[b].first; j <= blocks_[b].second; ++j) {
      block_of_[static_cast<std::size_t>(j)] = static_cast<Eigen::Index>(b);
    }
  }
}

cplx CesaroVelocity::eigen_entry(Eigen::Index j, Eigen::Index k) const {
  const cplx a = current_.matrix()(j, k);
  if (j == k) return a;
  if (is_asymptotic()) {
    const auto bj = block_of_[static_cast<std::size_t>(j)];
    return (bj >= 0 && bj == block_of_[static_cast<std::size_t>(k)]) ? a : cplx(0.0);
  }
  const auto& e = current_.eigensystem().energies();
  return a * cesaro_factor((e(j) - e(k)) * horizon_);
}

Eigen::MatrixXcd CesaroVelocity::eigen_matrix() const {
  const auto n = current_.eigensystem().size();
  Eigen::MatrixXcd q(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) q(j, k) = eigen_entry(j, k);
  }
  return q;
}

Eigen::MatrixXcd CesaroVelocity::site_matrix() const {
  const Eigen::MatrixXcd v = current_.eigensystem().vectors();
  return v * eigen_matrix() * v.adjoint();
}

Eigen::VectorXcd CesaroVelocity::apply(const Eigen::VectorXcd& psi) const {
  const EigenSystem& eig = current_.eigensystem();
  const Eigen::VectorXcd c = eig.coefficients(psi);
  const auto& m = current_.matrix();
  const auto n = eig.size();
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
  if (is_asymptotic()) {
    for (Eigen::Index j = 0; j < n; ++j) y(j) = m(j, j) * c(j);
    for (const auto& [first, last] : blocks_) {
      for (Eigen::Index k = first; k <= last; ++k) {
        for (Eigen::Index j = first; j <= last; ++j) {
          if (j != k) y(j) += m(j, k) * c(k);
        }
      }
    }
  } else {
    const auto& e = eig.energies();
    for (Eigen::Index k = 0; k < n; ++k) {
      const cplx ck = c(k);
      if (ck == cplx(0.0)) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        y(j) += m(j, k) * cesaro_factor((e(j) - e(k)) * horizon_) * ck;
      }
    }
  }
  return eig.synthesize(y);
}

CesaroVelocity cesaro_velocity(const EigenbasisCurrent& current, double horizon) {
  return CesaroVelocity(current, horizon);
}

CesaroVelocity cesaro_velocity(const EigenSystem& eig, const CurrentOperator& current,
                               double horizon) {
  return CesaroVelocity(EigenbasisCurrent(eig, current), horizon);
}

CesaroVelocity asymptotic_diagonal(const EigenbasisCurrent& current, double gap_tol) {
  const EigenSystem& eig = current.eigensystem();
  if (gap_tol < 0.0) gap_tol = eig.default_gap_tol();
  return CesaroVelocity(current, CesaroVelocity::kInfinite, eig.degenerate_blocks(gap_tol));
}

CesaroVelocity asymptotic_diagonal(const EigenSystem& eig, const CurrentOperator& current,
                                   double gap_tol) {
  return asymptotic_diagonal(EigenbasisCurrent(eig, current), gap_tol);
}

double diagonal_truncation_bound(const EigenbasisCurrent& current, double horizon) {
  if (!(horizon > 0.0)) throw PreconditionError("diagonal_truncation_bound: T must be positive");
  const Eigen::MatrixXcd& m = current.matrix();
  const Eigen::VectorXd& e = current.eigensystem().energies();
  double off = 0.0, worst = 0.0;
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
      if (j == k) continue;
      off += std::norm(m(j, k));
      worst = std::max(worst, std::abs(cesaro_factor((e(j) - e(k)) * horizon)));
    }
  }
  return 2.0 * std::sqrt(off) * worst;
}

Window window_for_horizon(double horizon, int support_radius, double tol) {
  if (!(horizon >= 0.0)) throw PreconditionError("window_for_horizon: T must be non-negative");
  if (!(tol > 0.0 && tol < 1.0)) throw PreconditionError("window_for_horizon: tol must lie in (0,1)");
  if (support_radius < 0) throw PreconditionError("window_for_horizon: negative support radius");
  const double n = static_cast<double>(support_radius) + kLiebRobinsonSpeed * horizon +
                   kWindowLogMargin * std::log(1.0 / tol);
  return Window::line(static_cast<int>(std::ceil(n)));
}

}  // namespace qpt
