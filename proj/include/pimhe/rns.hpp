#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pimhe/modmath.hpp"
#include "pimhe/ntt.hpp"
#include "pimhe/polyring.hpp"

// Residue number system decomposition of a wide modulus Q = prod q_i into
// word-size prime towers, and the double-CRT polynomial form where each
// tower is an independent polynomial over its own q_i.

namespace pimhe::rns {

using BigInt = boost::multiprecision::cpp_int;

// Ordered prime towers with precomputed Garner mixed-radix constants.
// Immutable after construction.
struct RnsBasis {
  std::vector<modmath::Modulus> towers;
  BigInt big_q;  // product of all tower moduli
  uint64_t k = 0;
  // crt_garner_constants[j] = (q_0 * ... * q_{j-1})^-1 mod q_j, j in [1, k);
  // entry 0 is unused and set to 1.
  std::vector<uint64_t> crt_garner_constants;

  RnsBasis() = default;
  // Explicit tower list; primes must be pairwise distinct. Used for toy
  // bases whose moduli need not be NTT-friendly (no ring is attached).
  // Throws std::invalid_argument on duplicates or non-prime entries.
  explicit RnsBasis(const std::vector<uint64_t>& moduli);

  bool same_towers(const RnsBasis& other) const;
};

// k distinct primes of the requested width, all 1 mod 2n; deterministic per
// seed (wrapping scan from a seeded start). Throws std::runtime_error when
// the width cannot supply k such primes.
RnsBasis build_basis(uint64_t k, int bit_width, uint64_t n, uint64_t seed);

// Tower i is a Polynomial over modulus q_i; all towers share dimension n.
struct DcrtPolynomial {
  std::vector<polyring::Polynomial> towers;
  uint64_t n = 0;
};

// Reduce each coefficient mod every tower modulus. Coefficients must lie in
// [0, big_q); n must be a power of 2, >= 2. The towers are negacyclic rings.
// Throws std::invalid_argument on range violations.
DcrtPolynomial decompose(const std::vector<BigInt>& coeffs,
                         const RnsBasis& basis);

// Garner mixed-radix reconstruction; exact inverse of decompose. Outputs lie
// in [0, big_q). Throws std::invalid_argument on tower/basis mismatch.
std::vector<BigInt> reconstruct(const DcrtPolynomial& p,
                                const RnsBasis& basis);

// Tower-wise poly_add. Towers are independent work units; evaluation order
// never affects results. Throws std::invalid_argument on mismatch.
DcrtPolynomial dcrt_add(const DcrtPolynomial& p1, const DcrtPolynomial& p2);

// Tower-wise fast_negacyclic_mul using one TwiddleTable per tower (table i
// built over q_i at dimension n). Throws std::invalid_argument on mismatch.
DcrtPolynomial dcrt_mul(const DcrtPolynomial& p1, const DcrtPolynomial& p2,
                        const std::vector<ntt::TwiddleTable>& tables);

}  // namespace pimhe::rns
