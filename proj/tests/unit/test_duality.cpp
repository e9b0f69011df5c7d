#include <cmath>

#include "doctest.h"
#include "qpt/duality.hpp"
#include "qpt/errors.hpp"

using namespace qpt;

namespace {

const TrigPotential kMixed(1, {{{1}, {1.0, -0.15}}, {{-1}, {1.0, 0.15}}, {{2}, 0.5}, {{-2}, 0.5}});

// random coefficients supported in |m| ≤ mr, |n| ≤ nr inside a larger box
FiberedFunction padded_random(const Window& modes, const Window& sites, int mr, int nr, Rng& rng) {
  FiberedFunction f(FiberSide::physical, modes, sites);
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    if (linf_norm(modes.site(mi)) > mr) continue;
    for (std::size_t ni = 0; ni < sites.size(); ++ni) {
      if (std::abs(sites.coordinate(ni)) <= nr) f.at(mi, ni) = rng.complex_normal();
    }
  }
  return f;
}

}  // namespace

TEST_SUITE("duality") {

TEST_CASE("single physical mode maps to a single dual mode") {
  const FrequencyVector alpha = FrequencyVector::golden();
  const Window modes = Window::line(4), sites = Window::line(5);
  const int m0 = 2, n0 = -3;
  FiberedFunction psi(FiberSide::physical, modes, sites);
  psi.at(modes.index(m0), sites.index(n0)) = 1.0;
  const FiberedFunction phi = duality_transform(psi, alpha);
  CHECK(phi.modes() == Window::line(5));
  CHECK(phi.sites() == modes);
  // Φ(θ, m) = δ_{m0}(m) e^{-2πi n0(θ + m·α)}: checked pointwise in θ
  for (double theta : {0.0, 0.137, 0.5, 0.91}) {
    const double th[1] = {theta};
    const Eigen::VectorXcd f = phi.fiber(th);
    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
      const int m = modes.coordinate(mi);
      const cplx expected = m == m0 ? std::polar(1.0, -kTwoPi * n0 * (theta + m * alpha[0])) : cplx(0.0);
      CHECK(std::abs(f(static_cast<Eigen::Index>(mi)) - expected) < 1e-13);
    }
  }
  const FiberedFunction back = inverse_duality_transform(phi, alpha);
  CHECK((back.coefficients() - psi.coefficients()).norm() < 1e-15);
}

TEST_CASE("unitarity, round trip and linearity") {
  const FrequencyVector alpha({0.6180339887498949, 0.41421356237309503});
  Rng rng(101);
  const Window modes(2, 3), sites = Window::line(6);
  for (int trial = 0; trial < 100; ++trial) {
    const FiberedFunction psi = random_fibered(FiberSide::physical, modes, sites, rng);
    const FiberedFunction phi = duality_transform(psi, alpha);
    CHECK(std::abs(phi.norm() - psi.norm()) < 1e-12 * psi.norm());
    CHECK((inverse_duality_transform(phi, alpha).coefficients() - psi.coefficients()).norm() < 1e-12 * psi.norm());
  }
  const FiberedFunction a = random_fibered(FiberSide::dual, Window::line(6), modes, rng);
  const FiberedFunction b = random_fibered(FiberSide::dual, Window::line(6), modes, rng);
  FiberedFunction combo = a;
  const cplx s(0.3, -1.2), t(2.0, 0.5);
  combo.coefficients() = s * a.coefficients() + t * b.coefficients();
  const Eigen::VectorXcd lhs = inverse_duality_transform(combo, alpha).coefficients();
  const Eigen::VectorXcd rhs = s * inverse_duality_transform(a, alpha).coefficients() +
                               t * inverse_duality_transform(b, alpha).coefficients();
  CHECK((lhs - rhs).norm() < 1e-12 * lhs.norm());
}

TEST_CASE("enlarging the box leaves the transform unchanged") {
  const FrequencyVector alpha = FrequencyVector::golden();
  Rng rng(7);
  const FiberedFunction small = random_fibered(FiberSide::physical, Window::line(3), Window::line(4), rng);
  FiberedFunction large(FiberSide::physical, Window::line(6), Window::line(9));
  for (std::size_t mi = 0; mi < 7; ++mi) {
    for (std::size_t ni = 0; ni < 9; ++ni) large.at(mi + 3, ni + 5) = small.at(mi, ni);
  }
  const FiberedFunction ps = duality_transform(small, alpha), pl = duality_transform(large, alpha);
  for (std::size_t qi = 0; qi < 9; ++qi) {
    for (std::size_t mi = 0; mi < 7; ++mi) CHECK(ps.at(qi, mi) == pl.at(qi + 5, mi + 3));
  }
}

TEST_CASE("coefficient actions agree with the fiber matrices") {
  const FrequencyVector alpha = FrequencyVector::golden();
  Rng rng(55);
  const Window modes = Window::line(8), sites = Window::line(10);
  const FiberedFunction psi = padded_random(modes, sites, 6, 9, rng);
  const double eps = 0.7;
  const FiberedFunction hpsi = apply_physical_hamiltonian(psi, kMixed, alpha, eps);
  for (double x0 : {0.03, 0.47, 0.8}) {
    const double x[1] = {x0};
    const WindowedOperator h = build_hamiltonian(kMixed, x, alpha, eps, sites);
    CHECK((hpsi.fiber(x) - h.matrix * psi.fiber(x)).norm() < 1e-12 * psi.norm());
  }
  const FiberedFunction phi = duality_transform(psi, alpha);
  const FiberedFunction hphi = apply_dual_hamiltonian(phi, kMixed, alpha, eps);
  // support stays two modes and one θ-mode inside the dual box
  for (double t0 : {0.11, 0.5, 0.73}) {
    const double th[1] = {t0};
    const WindowedOperator h = build_dual_hamiltonian(kMixed, t0, alpha, eps, modes);
    CHECK((hphi.fiber(th) - h.matrix * phi.fiber(th)).norm() < 1e-11 * phi.norm());
  }
}

TEST_CASE("duality identity") {
  const FrequencyVector golden = FrequencyVector::golden();
  const TrigPotential amo = TrigPotential::almost_mathieu();
  SUBCASE("zero coupling") {
    CHECK(verify_duality(amo, golden, 0.0, 20, 8, 8, 1).max_residual < 1e-12);
  }
  SUBCASE("almost Mathieu at ε = 0.5") {
    const DualityCheck check = verify_duality(amo, golden, 0.5, 20, 8, 8, 2);
    CHECK(check.residuals.size() == 20);
    CHECK(check.max_residual < 1e-10);
  }
  SUBCASE("longer-range potential and two frequencies") {
    const TrigPotential v2(2, {{{1, 0}, 1.0}, {{-1, 0}, 1.0}, {{1, 1}, {0.2, 0.1}}, {{-1, -1}, {0.2, -0.1}}});
    const FrequencyVector a2({0.6180339887498949, 0.41421356237309503});
    CHECK(verify_duality(kMixed, golden, 1.3, 10, 5, 6, 3).max_residual < 1e-10);
    CHECK(verify_duality(v2, a2, 0.9, 5, 3, 4, 4).max_residual < 1e-10);
  }
  SUBCASE("shifted frequency on the dual side is detected") {
    const FrequencyVector shifted({golden[0] + 0.05});
    CHECK(verify_duality(amo, golden, 0.5, 10, 8, 8, 5, shifted).max_residual > 0.1);
  }
  SUBCASE("margin violation") {
    Rng rng(1);
    const FiberedFunction full = random_fibered(FiberSide::physical, Window::line(4), Window::line(4), rng);
    CHECK_THROWS_AS(duality_residual(full, amo, golden, 0.5), PreconditionError);
  }
}

TEST_CASE("sheared L21 norm") {
  const FrequencyVector alpha = FrequencyVector::golden();
  const Window q = Window::line(3), m = Window::line(2);
  SUBCASE("single mode has norm one") {
    FiberedFunction phi(FiberSide::dual, q, m);
    phi.at(q.index(2), m.index(-1)) = 1.0;
    CHECK(l21_dual_norm(phi, ShearPhases::none()).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l21_dual_norm(phi, ShearPhases::canonical(alpha)).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("two disjoint single modes add inside the integral") {
    FiberedFunction phi(FiberSide::dual, q, m);
    phi.at(q.index(1), m.index(0)) = 1.0;
    phi.at(q.index(-2), m.index(2)) = cplx(0.0, 1.0);
    CHECK(l21_dual_norm(phi, ShearPhases::canonical(alpha)).value == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("dominates the plain norm, which is shear invariant") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      const FiberedFunction phi = random_fibered(FiberSide::dual, q, m, rng);
      const double l21 = l21_dual_norm(phi, ShearPhases::canonical(alpha)).value;
      CHECK(l21 >= phi.norm() * (1.0 - 1e-12));
      // ∫ Σ_m |Φ(θ + θ_m; m)|² by the trapezoid rule (exact for these degrees)
      const int grid = 64;
      double acc = 0.0;
      for (int g = 0; g < grid; ++g) {
        for (std::size_t mi = 0; mi < m.size(); ++mi) {
          const double th[1] = {static_cast<double>(g) / grid + alpha.dot_mod1(m.site(mi))};
          acc += std::norm(phi.fiber(th)(static_cast<Eigen::Index>(mi)));
        }
      }
      CHECK(std::sqrt(acc / grid) == doctest::Approx(phi.norm()).epsilon(1e-10));
    }
  }
  SUBCASE("the L21 norm is not shear invariant") {
    // components 1 + e^{2πiθ} at m = 0 and 1 - e^{2πiθ} at m = 1
    FiberedFunction phi(FiberSide::dual, q, m);
    phi.at(q.index(0), m.index(0)) = 1.0;
    phi.at(q.index(1), m.index(0)) = 1.0;
    phi.at(q.index(0), m.index(1)) = 1.0;
    phi.at(q.index(1), m.index(1)) = -1.0;
    const ShearPhases half([](std::span<const int> site) { return site[0] == 1 ? 0.5 : 0.0; });
    const double plain = l21_dual_norm(phi, ShearPhases::none()).value;
    const double sheared = l21_dual_norm(phi, half).value;
    // ∫(2|cos πθ| + 2|sin πθ|)² = 4 + 8/π and ∫(4|cos πθ|)² = 8
    CHECK(plain == doctest::Approx(std::sqrt(4.0 + 8.0 / M_PI)).epsilon(1e-7));
    CHECK(sheared == doctest::Approx(std::sqrt(8.0)).epsilon(1e-7));
  }
}

}
