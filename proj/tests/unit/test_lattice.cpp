#include <cmath>

#include "doctest.h"
#include "qpt/errors.hpp"
#include "qpt/lattice.hpp"
#include "qpt/random.hpp"

using namespace qpt;

namespace {

Eigen::VectorXcd random_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex_normal();
  return v;
}

// v(x) = 2cos2πx + cos 2π(2x) + 0.3 sin 2πx, written out by hand
double mixed_potential_value(double x) {
  return 2.0 * std::cos(kTwoPi * x) + std::cos(2.0 * kTwoPi * x) + 0.3 * std::sin(kTwoPi * x);
}

TrigPotential mixed_potential() {
  return TrigPotential(1, {{{1}, {1.0, -0.15}}, {{-1}, {1.0, 0.15}}, {{2}, 0.5}, {{-2}, 0.5}});
}

}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("window enumeration is lexicographic") {
  const Window w(2, 1);
  CHECK(w.size() == 9);
  CHECK(w.site(0) == LatticeVector{-1, -1});
  CHECK(w.site(1) == LatticeVector{-1, 0});
  CHECK(w.site(3) == LatticeVector{0, -1});
  CHECK(w.site(8) == LatticeVector{1, 1});
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w.index(w.site(i)) == i);
  const Window line = Window::line(4);
  CHECK(line.size() == 9);
  CHECK(line.index(-4) == 0);
  CHECK(line.coordinate(8) == 4);
  CHECK_THROWS_AS(Window(0, 2), PreconditionError);
}

TEST_CASE("evaluate_potential on the almost Mathieu potential") {
  const TrigPotential amo = TrigPotential::almost_mathieu();
  const double x0[1] = {0.0}, x1[1] = {0.25}, x2[1] = {0.5};
  CHECK(evaluate_potential(amo, x0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(std::abs(evaluate_potential(amo, x1)) < 1e-15);
  CHECK(evaluate_potential(amo, x2) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(amo.support_radius() == 1);
  CHECK(amo.hermitian_defect() == 0.0);
}

TEST_CASE("evaluate_potential matches a hand-written mixed potential") {
  const TrigPotential v = mixed_potential();
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const double x[1] = {rng.uniform()};
    CHECK(std::abs(evaluate_potential(v, x) - mixed_potential_value(x[0])) < 1e-12);
  }
}

TEST_CASE("non-Hermitian coefficients are rejected at evaluation") {
  const TrigPotential bad(1, {{{1}, 1.0}});
  CHECK(bad.hermitian_defect() > 0.5);
  const double x[1] = {0.1};
  CHECK_THROWS_AS(evaluate_potential(bad, x), InvalidPotential);
}

TEST_CASE("frequency vector validation") {
  CHECK_THROWS_AS(FrequencyVector({1.0}), PreconditionError);
  CHECK_THROWS_AS(FrequencyVector({-0.1}), PreconditionError);
  CHECK_THROWS_AS(FrequencyVector({0.3}, 7), PreconditionError);
  const FrequencyVector r = FrequencyVector::rational(1, 3);
  CHECK(r.rational_denominator() == 3);
  const FrequencyVector g = FrequencyVector::golden();
  CHECK(g[0] == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-15));
  const int m[1] = {3};
  CHECK(g.dot_mod1(m) == doctest::Approx(3.0 * g[0] - 1.0).epsilon(1e-14));
}

TEST_CASE("build_hamiltonian") {
  const TrigPotential amo = TrigPotential::almost_mathieu();
  const Window w = Window::line(5);

  SUBCASE("free Laplacian at zero coupling") {
    const double x[1] = {0.37};
    const WindowedOperator h = build_hamiltonian(mixed_potential(), x, FrequencyVector::golden(), 0.0, w);
    for (Eigen::Index i = 0; i < h.matrix.rows(); ++i) {
      for (Eigen::Index j = 0; j < h.matrix.cols(); ++j) {
        CHECK(h.matrix(i, j) == cplx(std::abs(i - j) == 1 ? 1.0 : 0.0));
      }
    }
    CHECK(h.is_real_tridiagonal());
  }
  SUBCASE("rational frequency 1/2") {
    const double x[1] = {0.0};
    const WindowedOperator h = build_hamiltonian(amo, x, FrequencyVector::rational(1, 2), 1.0, w);
    CHECK(h.matrix(w.index(1), w.index(1)).real() == doctest::Approx(-2.0).epsilon(1e-14));
  }
  SUBCASE("golden frequency, site 0") {
    const double x[1] = {0.3};
    const WindowedOperator h = build_hamiltonian(amo, x, FrequencyVector::golden(), 0.2, w);
    CHECK(h.matrix(w.index(0), w.index(0)).real() == doctest::Approx(0.4 * std::cos(kTwoPi * 0.3)).epsilon(1e-14));
    CHECK(h.matrix(w.index(0), w.index(0)).real() == doctest::Approx(-0.1236).epsilon(1e-3));
  }
  SUBCASE("diagonal equals ε v(x + nα) at random points") {
    Rng rng(11);
    const TrigPotential v = mixed_potential();
    const FrequencyVector alpha = FrequencyVector::golden();
    for (int trial = 0; trial < 100; ++trial) {
      const double x[1] = {rng.uniform()};
      const double eps = rng.uniform(0.0, 3.0);
      const WindowedOperator h = build_hamiltonian(v, x, alpha, eps, w);
      const int n = static_cast<int>(rng.next() % w.size()) - w.half_width();
      const double y = std::fmod(x[0] + n * alpha[0] + 100.0, 1.0);
      CHECK(std::abs(h.matrix(w.index(n), w.index(n)).real() - eps * mixed_potential_value(y)) < 1e-12);
      CHECK(h.hermitian_defect() < 1e-12);
    }
  }
  SUBCASE("periodic ring closes the hopping") {
    const double x[1] = {0.0};
    const WindowedOperator h = build_hamiltonian(amo, x, FrequencyVector::golden(), 0.0, w, Boundary::periodic);
    CHECK(h.matrix(0, w.size() - 1) == cplx(1.0));
    CHECK(h.matrix(w.size() - 1, 0) == cplx(1.0));
    CHECK_FALSE(h.is_real_tridiagonal());
  }
}

TEST_CASE("Dirichlet truncation is local") {
  const TrigPotential v = mixed_potential();
  const FrequencyVector alpha = FrequencyVector::golden();
  const double x[1] = {0.21};
  const Window small = Window::line(8), large = Window::line(18);
  const WindowedOperator hs = build_hamiltonian(v, x, alpha, 0.7, small);
  const WindowedOperator hl = build_hamiltonian(v, x, alpha, 0.7, large);
  Rng rng(3);
  Eigen::VectorXcd ps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(small.size()));
  Eigen::VectorXcd pl = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(large.size()));
  for (int n = -7; n <= 7; ++n) {
    const cplx c = rng.complex_normal();
    ps(static_cast<Eigen::Index>(small.index(n))) = c;
    pl(static_cast<Eigen::Index>(large.index(n))) = c;
  }
  const Eigen::VectorXcd ys = hs.matrix * ps, yl = hl.matrix * pl;
  for (int n = -8; n <= 8; ++n) {
    CHECK(ys(static_cast<Eigen::Index>(small.index(n))) == yl(static_cast<Eigen::Index>(large.index(n))));
  }
}

TEST_CASE("build_dual_hamiltonian") {
  const TrigPotential amo = TrigPotential::almost_mathieu();
  const FrequencyVector alpha = FrequencyVector::golden();
  const Window w = Window::line(6);

  SUBCASE("zero coupling is the cosine diagonal") {
    const WindowedOperator h = build_dual_hamiltonian(amo, 0.13, alpha, 0.0, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const int m = w.coordinate(i);
      CHECK(h.matrix(i, i).real() == doctest::Approx(2.0 * std::cos(kTwoPi * (0.13 + m * alpha[0]))).epsilon(1e-13));
    }
    CHECK((h.matrix - Eigen::MatrixXcd(h.matrix.diagonal().asDiagonal())).norm() == 0.0);
  }
  SUBCASE("AMO: tridiagonal, off-diagonal ε, 2 at θ=0, m=0") {
    const WindowedOperator h = build_dual_hamiltonian(amo, 0.0, alpha, 0.3, w);
    CHECK(h.is_real_tridiagonal());
    CHECK(h.matrix(w.index(0), w.index(1)).real() == doctest::Approx(0.3));
    CHECK(h.matrix(w.index(0), w.index(0)).real() == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("rescaling identity against the free Laplacian") {
    const double eps = 0.37;
    const WindowedOperator h = build_dual_hamiltonian(amo, 0.61, alpha, eps, w);
    const double x0[1] = {0.0};
    const Eigen::MatrixXcd lap = build_hamiltonian(amo, x0, alpha, 0.0, w).matrix;
    Eigen::MatrixXcd cosine = Eigen::MatrixXcd::Zero(lap.rows(), lap.cols());
    for (std::size_t i = 0; i < w.size(); ++i) {
      cosine(i, i) = 2.0 * std::cos(kTwoPi * (0.61 + w.coordinate(i) * alpha[0]));
    }
    CHECK((h.matrix / eps - (lap + cosine / eps)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("two-dimensional dual window has bandwidth ≤ support radius") {
    const TrigPotential v2(2, {{{1, 0}, 1.0}, {{-1, 0}, 1.0}, {{0, 1}, {0.0, 0.5}}, {{0, -1}, {0.0, -0.5}}});
    const FrequencyVector a2({0.6180339887498949, 0.41421356237309503});
    const Window w2(2, 3);
    const WindowedOperator h = build_dual_hamiltonian(v2, 0.2, a2, 0.8, w2);
    CHECK(h.hermitian_defect() < 1e-15);
    for (std::size_t i = 0; i < w2.size(); ++i) {
      for (std::size_t j = 0; j < w2.size(); ++j) {
        LatticeVector d = w2.site(i);
        const LatticeVector b = w2.site(j);
        d[0] -= b[0];
        d[1] -= b[1];
        if (linf_norm(d) > 1) CHECK(h.matrix(i, j) == cplx(0.0));
      }
    }
  }
}

TEST_CASE("apply_current") {
  const Window w = Window::line(5);
  Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(11);
  delta(w.index(0)) = 1.0;
  const Eigen::VectorXcd a = apply_current(delta);
  CHECK(a(w.index(-1)) == cplx(0.0, 1.0));
  CHECK(a(w.index(1)) == cplx(0.0, -1.0));
  CHECK(a.norm() == doctest::Approx(std::sqrt(2.0)));

  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(11);
  const Eigen::VectorXcd b = apply_current(ones);
  for (int n = -4; n <= 4; ++n) CHECK(b(w.index(n)) == cplx(0.0));

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXcd psi = random_vector(11, rng);
    CHECK(apply_current(psi).norm() <= 2.0 * psi.norm() + 1e-12);
    CHECK(apply_current(psi, Boundary::periodic).norm() <= 2.0 * psi.norm() + 1e-12);
  }
}

TEST_CASE("commutator i[H, X] equals A on interior sites") {
  const double x[1] = {0.44};
  const Window w = Window::line(10);
  const WindowedOperator h = build_hamiltonian(mixed_potential(), x, FrequencyVector::golden(), 1.3, w);
  Eigen::MatrixXcd xop = Eigen::MatrixXcd::Zero(21, 21);
  for (std::size_t i = 0; i < w.size(); ++i) xop(i, i) = w.coordinate(i);
  const Eigen::MatrixXcd comm = cplx(0.0, 1.0) * (h.matrix * xop - xop * h.matrix);
  Eigen::MatrixXcd a(21, 21);
  for (Eigen::Index j = 0; j < 21; ++j) a.col(j) = apply_current(Eigen::VectorXcd::Unit(21, j));
  CHECK((comm - a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dual_current_diagonal") {
  const FrequencyVector alpha = FrequencyVector::golden();
  const Window w = Window::line(20);
  const Eigen::VectorXd d0 = dual_current_diagonal(0.0, alpha, w);
  CHECK(std::abs(d0(w.index(0))) < 1e-15);
  const Eigen::VectorXd d1 = dual_current_diagonal(0.25, alpha, w);
  CHECK(d1(w.index(0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(d1.cwiseAbs().maxCoeff() <= 2.0);
}

TEST_CASE("convolve") {
  const Window w = Window::line(6);
  Rng rng(9);
  const Eigen::VectorXcd psi = random_vector(13, rng), phi = random_vector(13, rng);
  const cplx c(0.7, -0.2);
  const TrigPotential scalar(1, {{{0}, c}});
  CHECK((convolve(scalar, psi, w) - c * psi).norm() < 1e-15);

  Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(13);
  delta(w.index(0)) = 1.0;
  Eigen::VectorXcd expected = Eigen::VectorXcd::Zero(13);
  expected(w.index(-1)) = expected(w.index(1)) = 1.0;
  CHECK((convolve(TrigPotential::almost_mathieu(), delta, w) - expected).norm() == 0.0);

  const TrigPotential v = mixed_potential();
  const cplx a(1.1, 0.4), b(-0.3, 2.0);
  CHECK((convolve(v, a * psi + b * phi, w) - a * convolve(v, psi, w) - b * convolve(v, phi, w)).norm() < 1e-12);

  // agreement with the dual operator at ε = 1 once the cosine term is removed
  const WindowedOperator h = build_dual_hamiltonian(v, 0.3, FrequencyVector::golden(), 1.0, w);
  const Eigen::VectorXd cosine = h.matrix.diagonal().real() - Eigen::VectorXd::Constant(13, v.coefficient(std::vector<int>{0}).real());
  const Eigen::VectorXcd lhs = h.matrix * psi - cosine.cast<cplx>().cwiseProduct(psi);
  CHECK((lhs - convolve(v, psi, w)).norm() < 1e-12);
}

}
