#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pimhe/polyring.hpp"

// Textbook single-modulus BFV over a negacyclic ring: keygen, public-key
// encrypt/decrypt, homomorphic add, tensor-product multiply with exact
// floor(t*x/q) rescaling, and base-decomposition relinearization.
//
// Parameters are correctness-oriented toys; nothing here is calibrated for
// security.

namespace pimhe::hekernels {

struct SchemeParams {
  polyring::RingParams ring;  // negacyclic
  uint64_t t = 0;             // plaintext modulus, 2 <= t < q
  uint64_t delta = 0;         // floor(q / t)
  double noise_stddev = 3.2;
  uint64_t decomp_base = 1ULL << 16;  // relinearization digit base, power of 2

  SchemeParams() = default;
  // Computes delta; throws std::invalid_argument on t out of range, a
  // cyclic ring, or a non-power-of-2 decomp_base.
  SchemeParams(const polyring::RingParams& ring, uint64_t t,
               double noise_stddev = 3.2, uint64_t decomp_base = 1ULL << 16);

  // Digits needed to cover [0, q) in base decomp_base.
  uint64_t digit_count() const;
};

struct KeyMaterial {
  polyring::Polynomial sk;  // ternary, encoded mod q as {q-1, 0, 1}
  std::pair<polyring::Polynomial, polyring::Polynomial> pk;  // (a, b)
  // ek[i] = (b_i, a_i) with b_i = -(a_i*s + e_i) + base^i * s^2: the power-
  // of-s-zero component first, matching Ciphertext element order.
  std::vector<std::pair<polyring::Polynomial, polyring::Polynomial>> ek;
};

// elements[i] multiplies s^i during decryption: elements[0] carries the
// scaled message. Fresh and relinearized ciphertexts have 2 elements,
// eval_mult output has 3.
struct Ciphertext {
  std::vector<polyring::Polynomial> elements;

  uint64_t degree() const { return elements.size() - 1; }
};

// Ring-operation tallies for one call; counts semantic polynomial products,
// not scalar ops.
struct HeOpCounts {
  uint64_t poly_mults = 0;
  uint64_t poly_adds = 0;
};

// sk ternary uniform, pk = (a, -(a*s + e)), ek the base-decomposed s^2
// encryptions. Deterministic per seed.
KeyMaterial keygen(const SchemeParams& params, uint64_t seed);

// Standard BFV public-key encryption; m must have n entries below t.
// elements[0] = u*b + e1 + delta*m, elements[1] = u*a + e2.
// Throws std::invalid_argument on plaintext range or length violations.
Ciphertext encrypt(const std::vector<uint64_t>& m, const KeyMaterial& keys,
                   const SchemeParams& params, uint64_t seed);

// Rounds t/q * (elements[0] + elements[1]*s + elements[2]*s^2) to the
// nearest integer mod t, per coefficient. Throws std::invalid_argument for
// degree > 2.
std::vector<uint64_t> decrypt(const Ciphertext& c, const KeyMaterial& keys,
                              const SchemeParams& params);

// Element-wise sum; no polynomial multiplications. Throws on degree or
// ring mismatch.
Ciphertext eval_add(const Ciphertext& c1, const Ciphertext& c2,
                    HeOpCounts* counts = nullptr);

// Tensor product (d0, d1, d2) = (c10*c20, c10*c21 + c11*c20, c11*c21) with
// each component computed exactly over the integers (centered lifts,
// auxiliary-prime CRT) and rescaled by round(t*x/q). Inputs must both be
// degree 1. Four ring products.
Ciphertext eval_mult(const Ciphertext& c1, const Ciphertext& c2,
                     const SchemeParams& params, HeOpCounts* counts = nullptr);

// Key-switches the s^2 component through ek, returning a degree-1
// ciphertext with the same plaintext. Input must be degree 2.
Ciphertext relinearize(const Ciphertext& c, const KeyMaterial& keys,
                       const SchemeParams& params,
                       HeOpCounts* counts = nullptr);

// Negacyclic ring product used throughout the scheme: NTT path when q
// supports dimension n, schoolbook + reduction otherwise.
polyring::Polynomial ring_mul(const polyring::Polynomial& p1,
                              const polyring::Polynomial& p2);

// Centered binomial noise sample with stddev approximately noise_stddev,
// clamped to [-floor(6*stddev), floor(6*stddev)], encoded mod q.
polyring::Polynomial sample_noise(const polyring::RingParams& ring,
                                  double noise_stddev, std::mt19937_64& gen);

// Uniform ternary polynomial with coefficients in {-1, 0, 1} mod q.
polyring::Polynomial sample_ternary(const polyring::RingParams& ring,
                                    std::mt19937_64& gen);

}  // namespace pimhe::hekernels
