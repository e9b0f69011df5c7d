#pragma once

// Continued fractions, the β(α) growth rate of their denominators, and
// brute-force Diophantine certificates dist(k·α, ℤ) ≥ c|k|^{-τ}.

#include <cstddef>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

#include "qpt/lattice.hpp"

namespace qpt {

using BigInt = boost::multiprecision::mpz_int;

struct Convergent {
  BigInt p;
  BigInt q;
};

/// α = [0; a_1, a_2, ..., a_K] with convergents p_k/q_k for k = 0..K
/// (p_0/q_0 = 0/1). Denominators satisfy q_{k+1} = a_{k+1} q_k + q_{k-1}.
struct ContinuedFraction {
  std::vector<BigInt> quotients;      // a_1..a_K
  std::vector<Convergent> convergents;  // k = 0..K

  std::size_t depth() const { return quotients.size(); }
  /// p_K / q_K rounded to double.
  double value() const;
};

/// Euclidean expansion of a double α ∈ (0,1). Throws PrecisionExhausted when
/// the requested depth exceeds what the binary representation of α certifies
/// (the expansions of α ± ulp(α) stop agreeing).
ContinuedFraction continued_fraction(double alpha, std::size_t depth);

/// Convergents of [0; a_1, ..., a_K] in exact integer arithmetic.
ContinuedFraction continued_fraction_from_quotients(std::vector<BigInt> quotients);

/// Quotients a_{k+1} = ceil(e^{β q_k} / q_k), the classical construction of a
/// frequency with β(α) = β. The towers grow so fast that only a few levels are
/// representable; construction stops before a quotient would need more than
/// max_bits bits.
struct BetaExpansion {
  std::vector<BigInt> quotients;
  std::size_t requested_depth = 0;
  bool truncated = false;  // true when fewer than requested_depth quotients fit
};
BetaExpansion quotients_for_beta(double beta, std::size_t depth,
                                 std::size_t max_bits = std::size_t{1} << 20);

/// ln(q_{k+1}) / q_k for k = 0..K-1.
std::vector<double> log_growth_terms(const ContinuedFraction& cf);

/// Finite-depth surrogate of β(α) = limsup ln(q_{k+1})/q_k: the maximum of the
/// terms over the upper half k ≥ ⌊K/2⌋ of the available indices. Needs at
/// least three convergents.
double beta_estimate(const ContinuedFraction& cf);

struct DiophantineCertificate {
  double c = 0.0;
  double tau = 0.0;
  int k_max = 0;
  bool verified = false;
  LatticeVector worst_k;     // argmin over the scan of |k|^τ dist(k·α, ℤ)
  double max_feasible_c = 0.0;  // that minimum; verified iff c ≤ max_feasible_c
};

/// Exhaustive scan over 0 < |k|_∞ ≤ k_max. Uses exact integer residues when α
/// carries a rational denominator.
DiophantineCertificate diophantine_check(const FrequencyVector& alpha, double c, double tau,
                                         int k_max);

}  // namespace qpt
