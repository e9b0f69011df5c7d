#include "qpt/frequency.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/multiprecision/mpfr.hpp>

#include "qpt/errors.hpp"

namespace qpt {

namespace mp = boost::multiprecision;

namespace {

struct Rational {
  BigInt num;
  BigInt den;
};

// Exact value of a finite double as num / 2^k.
Rational exact_rational(double x) {
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);
  const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  BigInt num = scaled;
  BigInt den = 1;
  const int shift = 53 - exponent;
  if (shift >= 0) {
    den <<= shift;
  } else {
    num <<= -shift;
  }
  return {num, den};
}

// Partial quotients of num/den ∈ (0,1), at most limit of them.
std::vector<BigInt> exact_quotients(Rational r, std::size_t limit) {
  std::vector<BigInt> out;
  while (out.size() < limit && r.num != 0) {
    BigInt a = r.den / r.num;
    BigInt rem = r.den - a * r.num;
    out.push_back(std::move(a));
    r.den = std::move(r.num);
    r.num = std::move(rem);
  }
  return out;
}

double big_log(const BigInt& x) {
  const std::size_t bits = mp::msb(x) + 1;
  if (bits <= 1000) return std::log(x.convert_to<double>());
  const std::size_t drop = bits - 64;
  const BigInt top = x >> drop;
  return std::log(top.convert_to<double>()) + static_cast<double>(drop) * std::log(2.0);
}

}  // namespace

double ContinuedFraction::value() const {
  const auto& last = convergents.back();
  mp::mpfr_float_50 ratio = mp::mpfr_float_50(last.p) / mp::mpfr_float_50(last.q);
  return ratio.convert_to<double>();
}

ContinuedFraction continued_fraction_from_quotients(std::vector<BigInt> quotients) {
  ContinuedFraction cf;
  cf.convergents.reserve(quotients.size() + 1);
  BigInt p_prev = 1, q_prev = 0;  // k = -1
  BigInt p = 0, q = 1;            // k = 0
  cf.convergents.push_back({p, q});
  for (const BigInt& a : quotients) {
    if (a <= 0) throw PreconditionError("continued fraction: partial quotients must be positive");
    BigInt p_next = a * p + p_prev;
    BigInt q_next = a * q + q_prev;
    p_prev = std::move(p);
    q_prev = std::move(q);
    p = std::move(p_next);
    q = std::move(q_next);
    cf.convergents.push_back({p, q});
  }
  cf.quotients = std::move(quotients);
  return cf;
}

ContinuedFraction continued_fraction(double alpha, std::size_t depth) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw PreconditionError("continued_fraction: alpha must lie in (0,1)");
  }
  const double ulp = std::nextafter(alpha, 2.0) - alpha;
  const auto lo = exact_quotients(exact_rational(alpha - ulp), depth + 1);
  const auto hi = exact_quotients(exact_rational(alpha + ulp), depth + 1);
  const auto mid = exact_quotients(exact_rational(alpha), depth);

  // Every real with a given quotient prefix lies in one interval, so the
  // prefix shared by α - ulp and α + ulp holds for the whole ulp neighbourhood.
  std::size_t certified = 0;
  while (certified < lo.size() && certified < hi.size() && lo[certified] == hi[certified]) ++certified;
  if (depth > certified || mid.size() < depth) {
    throw PrecisionExhausted("continued_fraction: double input certifies only " +
                             std::to_string(std::min(certified, mid.size())) +
                             " partial quotients, requested " + std::to_string(depth) +
                             "; supply the quotients or a higher-precision value");
  }
  return continued_fraction_from_quotients(std::vector<BigInt>(mid.begin(), mid.begin() + static_cast<std::ptrdiff_t>(depth)));
}

BetaExpansion quotients_for_beta(double beta, std::size_t depth, std::size_t max_bits) {
  if (!(beta > 0.0)) throw PreconditionError("quotients_for_beta: beta must be positive");
  BetaExpansion out;
  out.requested_depth = depth;
  const unsigned saved_precision = mp::mpfr_float::default_precision();
  BigInt q_prev = 0, q = 1;
  while (out.quotients.size() < depth) {
    // log2 of e^{βq}/q decides whether the next quotient is representable.
    const double log2_size = (beta * mp::mpfr_float_50(q).convert_to<double>() - big_log(q)) / std::log(2.0);
    if (!std::isfinite(log2_size) || log2_size > static_cast<double>(max_bits)) {
      out.truncated = true;
      break;
    }
    const unsigned precision_digits = static_cast<unsigned>(std::max(50.0, log2_size * 0.30103 + 40.0));
    mp::mpfr_float::default_precision(precision_digits);
    mp::mpfr_float qf(q);
    mp::mpfr_float ratio = mp::exp(mp::mpfr_float(beta) * qf) / qf;
    BigInt a = static_cast<BigInt>(mp::ceil(ratio));
    if (a < 1) a = 1;
    BigInt q_next = a * q + q_prev;
    q_prev = std::move(q);
    q = std::move(q_next);
    out.quotients.push_back(std::move(a));
  }
  mp::mpfr_float::default_precision(saved_precision);
  return out;
}

std::vector<double> log_growth_terms(const ContinuedFraction& cf) {
  std::vector<double> terms;
  for (std::size_t k = 0; k + 1 < cf.convergents.size(); ++k) {
    const BigInt& qk = cf.convergents[k].q;
    const double denom = mp::mpfr_float_50(qk).convert_to<double>();
    terms.push_back(big_log(cf.convergents[k + 1].q) / denom);
  }
  return terms;
}

double beta_estimate(const ContinuedFraction& cf) {
  if (cf.convergents.size() < 3) {
    throw PreconditionError("beta_estimate: need at least 3 convergents");
  }
  const auto terms = log_growth_terms(cf);
  double best = 0.0;
  for (std::size_t k = terms.size() / 2; k < terms.size(); ++k) best = std::max(best, terms[k]);
  return best;
}

DiophantineCertificate diophantine_check(const FrequencyVector& alpha, double c, double tau,
                                         int k_max) {
  if (!(c > 0.0) || !(tau > 0.0)) throw PreconditionError("diophantine_check: c and tau must be positive");
  if (k_max < 1) throw PreconditionError("diophantine_check: k_max must be >= 1");

  const int d = alpha.dim();
  const auto den = alpha.rational_denominator();
  std::vector<long long> numerators;
  if (den) {
    for (double a : alpha.components()) {
      numerators.push_back(std::llround(static_cast<long double>(a) * *den));
    }
  }

  DiophantineCertificate cert{c, tau, k_max, false, {}, std::numeric_limits<double>::infinity()};
  // k and -k give the same distance, so scan only k whose first nonzero
  // coordinate is positive.
  LatticeVector k(static_cast<std::size_t>(d), -k_max);
  const Window box(d, k_max);
  for (std::size_t idx = box.size() / 2 + 1; idx < box.size(); ++idx) {
    k = box.site(idx);
    double dist = 0.0;
    if (den) {
      long long residue = 0;
      for (int i = 0; i < d; ++i) {
        residue = (residue + (static_cast<long long>(k[static_cast<std::size_t>(i)]) % *den) *
                                 numerators[static_cast<std::size_t>(i)]) % *den;
      }
      residue = ((residue % *den) + *den) % *den;
      dist = static_cast<double>(std::min(residue, *den - residue)) / static_cast<double>(*den);
    } else {
      long double acc = 0.0L;
      for (int i = 0; i < d; ++i) acc += static_cast<long double>(k[static_cast<std::size_t>(i)]) * alpha[static_cast<std::size_t>(i)];
      const long double f = acc - std::floor(acc);
      dist = static_cast<double>(std::min(f, 1.0L - f));
    }
    const double scaled = dist * std::pow(static_cast<double>(linf_norm(k)), tau);
    if (scaled < cert.max_feasible_c) {
      cert.max_feasible_c = scaled;
      cert.worst_k = k;
    }
  }
  cert.verified = c <= cert.max_feasible_c;
  return cert;
}

}  // namespace qpt
