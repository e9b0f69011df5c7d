#include <cmath>
#include <limits>

#include "doctest.h"
#include "qpt/errors.hpp"
#include "qpt/frequency.hpp"

using namespace qpt;

namespace {

// dist(kα, ℤ)·k scanned independently in long double
double brute_force_min(double alpha, int k_max) {
  long double best = std::numeric_limits<long double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    const long double y = static_cast<long double>(k) * alpha;
    const long double d = std::fabs(y - std::nearbyint(y));
    best = std::min(best, d * k);
  }
  return static_cast<double>(best);
}

}  // namespace

TEST_SUITE("frequency") {

TEST_CASE("golden mean expansion gives Fibonacci denominators") {
  const ContinuedFraction cf = continued_fraction(FrequencyVector::golden()[0], 20);
  REQUIRE(cf.depth() == 20);
  unsigned long long f0 = 1, f1 = 1;  // q_0, q_1
  CHECK(cf.convergents[0].q == 1);
  CHECK(cf.convergents[0].p == 0);
  for (std::size_t k = 1; k <= 20; ++k) {
    CHECK(cf.quotients[k - 1] == 1);
    CHECK(cf.convergents[k].q == BigInt(f1));
    const unsigned long long f2 = f0 + f1;
    f0 = f1;
    f1 = f2;
  }
}

TEST_CASE("recurrence and approximation invariants") {
  const double alpha = std::sqrt(2.0) - 1.0;
  const ContinuedFraction cf = continued_fraction(alpha, 15);
  for (std::size_t k = 1; k + 1 < cf.convergents.size(); ++k) {
    const BigInt& qm = cf.convergents[k - 1].q;
    const BigInt& q = cf.convergents[k].q;
    const BigInt& qp = cf.convergents[k + 1].q;
    CHECK(qp == cf.quotients[k] * q + qm);
    CHECK(q < qp);
    // p_k q_{k-1} - p_{k-1} q_k = ±1 (coprime, alternating)
    const BigInt det = cf.convergents[k].p * qm - cf.convergents[k - 1].p * q;
    CHECK(abs(det) == 1);
    const double err = std::abs(alpha - cf.convergents[k].p.convert_to<double>() / q.convert_to<double>());
    CHECK(err < 1.0 / (q.convert_to<double>() * qp.convert_to<double>()) * (1.0 + 1e-9));
  }
  const double qk = cf.convergents.back().q.convert_to<double>();
  CHECK(std::abs(cf.value() - alpha) < 1.0 / (qk * qk));
}

TEST_CASE("first quotient is floor(1/α)") {
  const double tiny = 1e-9;
  CHECK(continued_fraction(0.5 - tiny, 1).quotients[0] == 2);
  CHECK(continued_fraction(0.5 + tiny, 1).quotients[0] == 1);
  CHECK(continued_fraction(0.3, 1).quotients[0] == 3);
}

TEST_CASE("precision exhaustion") {
  CHECK_THROWS_AS(continued_fraction(FrequencyVector::golden()[0], 200), PrecisionExhausted);
  CHECK_THROWS_AS(continued_fraction(0.0, 3), PreconditionError);
  CHECK_THROWS_AS(continued_fraction(0.25, 3), PrecisionExhausted);
}

TEST_CASE("beta estimate") {
  SUBCASE("golden mean decays to zero") {
    const ContinuedFraction cf = continued_fraction(FrequencyVector::golden()[0], 20);
    const std::vector<double> terms = log_growth_terms(cf);
    CHECK(terms.back() < 0.1);
    CHECK(beta_estimate(continued_fraction(FrequencyVector::golden()[0], 3)) > beta_estimate(cf));
    for (std::size_t k = 2; k < terms.size(); ++k) CHECK(terms[k] < terms[k - 1]);
    const double est = beta_estimate(cf);
    // q_20 = 10946, q_21 = 17711: the tail maximum is attained at the start of the upper half
    CHECK(est == doctest::Approx(std::log(144.0) / 89.0).epsilon(1e-12));
  }
  SUBCASE("bounded quotients shrink with depth") {
    std::vector<BigInt> a(40);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 1 + (i % 3);
    const double shallow = beta_estimate(continued_fraction_from_quotients({a.begin(), a.begin() + 8}));
    const double deep = beta_estimate(continued_fraction_from_quotients(a));
    CHECK(deep < shallow);
    CHECK(deep < 1e-3);
  }
  SUBCASE("needs three convergents") {
    CHECK_THROWS_AS(beta_estimate(continued_fraction_from_quotients({BigInt(2)})), PreconditionError);
  }
}

TEST_CASE("β construction") {
  const BetaExpansion ex = quotients_for_beta(0.5, 10);
  CHECK(ex.requested_depth == 10);
  CHECK(ex.truncated);
  REQUIRE(ex.quotients.size() == 5);
  const ContinuedFraction cf = continued_fraction_from_quotients(ex.quotients);
  CHECK(cf.convergents[1].q == 2);
  CHECK(cf.convergents[2].q == 5);
  CHECK(cf.convergents[3].q == 17);
  CHECK(cf.convergents[4].q == 4935);
  // independent check of a_{k+1} = ceil(e^{β q_k}/q_k) on the small levels
  CHECK(ex.quotients[0] == static_cast<long>(std::ceil(std::exp(0.5))));
  CHECK(ex.quotients[1] == static_cast<long>(std::ceil(std::exp(1.0) / 2.0)));
  CHECK(ex.quotients[2] == static_cast<long>(std::ceil(std::exp(2.5) / 5.0)));
  CHECK(ex.quotients[3] == static_cast<long>(std::ceil(std::exp(8.5) / 17.0)));
  const double est = beta_estimate(cf);
  CHECK(est == doctest::Approx(0.5).epsilon(0.15));
  // ln q_5 / q_4 with q_5 ≈ e^{β q_4}
  CHECK(log_growth_terms(cf).back() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("Diophantine certificates") {
  SUBCASE("golden mean at τ = 1") {
    const DiophantineCertificate cert = diophantine_check(FrequencyVector::golden(), 0.27, 1.0, 1000);
    CHECK(cert.verified);
    CHECK(cert.max_feasible_c >= 0.27);
    CHECK(cert.max_feasible_c == doctest::Approx(brute_force_min(FrequencyVector::golden()[0], 1000)).epsilon(1e-12));
    CHECK(cert.worst_k == LatticeVector{1});
  }
  SUBCASE("rational frequency fails at its denominator") {
    const DiophantineCertificate cert = diophantine_check(FrequencyVector::rational(1, 3), 1e-6, 1.0, 10);
    CHECK_FALSE(cert.verified);
    CHECK(cert.max_feasible_c == 0.0);
    CHECK(std::abs(cert.worst_k[0]) == 3);
  }
  SUBCASE("monotone in c, τ and the scan bound") {
    const FrequencyVector a({std::sqrt(2.0) - 1.0});
    const DiophantineCertificate base = diophantine_check(a, 0.3, 1.0, 200);
    REQUIRE(base.verified);
    CHECK(base.max_feasible_c == doctest::Approx(brute_force_min(a[0], 200)).epsilon(1e-12));
    CHECK(diophantine_check(a, 0.15, 1.0, 200).verified);
    CHECK(diophantine_check(a, 0.3, 1.5, 200).verified);
    CHECK(diophantine_check(a, 0.3, 1.0, 100).verified);
    CHECK_FALSE(diophantine_check(a, 0.35, 1.0, 200).verified);
  }
  SUBCASE("two-dimensional scan") {
    const FrequencyVector a({0.6180339887498949, 0.41421356237309503});
    const DiophantineCertificate cert = diophantine_check(a, 1e-3, 2.0, 30);
    CHECK(cert.worst_k.size() == 2);
    // independent scan of the same minimum
    long double best = std::numeric_limits<long double>::infinity();
    for (int k1 = -30; k1 <= 30; ++k1) {
      for (int k2 = -30; k2 <= 30; ++k2) {
        if (k1 == 0 && k2 == 0) continue;
        const long double y = static_cast<long double>(k1) * a[0] + static_cast<long double>(k2) * a[1];
        const long double d = std::fabs(y - std::nearbyint(y));
        const long double norm = std::max(std::abs(k1), std::abs(k2));
        best = std::min(best, d * norm * norm);
      }
    }
    CHECK(cert.max_feasible_c == doctest::Approx(static_cast<double>(best)).epsilon(1e-9));
  }
}

}
