#pragma once

#include <cstdint>
#include <vector>

// Exact modular arithmetic over word-size prime moduli: Barrett-reduced
// multiplication, square-and-multiply exponentiation, and primitive-root
// discovery for power-of-2 NTT dimensions.
//
// Residues are uint64_t and moduli are restricted to q < 2^62 so every
// Barrett intermediate fits in unsigned __int128.

namespace pimhe::modmath {

struct Modulus {
  uint64_t q = 0;               // prime, 2 <= q < 2^62
  uint64_t barrett_factor = 0;  // floor(2^(2*bit_width) / q)
  int bit_width = 0;            // index of the highest set bit of q, plus one

  Modulus() = default;
  // Throws std::invalid_argument if q is out of range or not prime.
  explicit Modulus(uint64_t q_in);

  bool operator==(const Modulus&) const = default;
};

// Roots of unity backing an NTT of dimension n over Z_q.
// Invariants: omega = psi^2, omega^n = 1, omega^(n/2) != 1, psi^n = q-1,
// n_inv * n = 1 (all mod q).
struct RootSet {
  uint64_t n = 0;
  uint64_t omega = 0;
  uint64_t psi = 0;
  uint64_t omega_inv = 0;
  uint64_t psi_inv = 0;
  uint64_t n_inv = 0;
};

// Deterministic Miller-Rabin, valid for all inputs below 2^64.
bool is_prime(uint64_t x);

// a + b with one conditional subtraction; inputs in [0, q).
uint64_t mod_add(uint64_t a, uint64_t b, const Modulus& m);

// (a - b) mod q; inputs in [0, q).
uint64_t mod_sub(uint64_t a, uint64_t b, const Modulus& m);

// a * b mod q via Barrett's two-word estimate, at most two correction
// subtractions; bit-exact with wide multiply-then-remainder.
uint64_t mod_mul_barrett(uint64_t a, uint64_t b, const Modulus& m);

// base^exp mod q by square-and-multiply.
uint64_t mod_pow(uint64_t base, uint64_t exp, const Modulus& m);

// Multiplicative inverse mod prime q (Fermat). Throws std::invalid_argument
// if a == 0.
uint64_t mod_inv(uint64_t a, const Modulus& m);

// Finds a primitive 2n-th root of unity psi and derives the rest of the set.
// Deterministic for a given (n, q): factors q-1, takes the smallest generator
// g in {2,3,4,...}, and sets psi = g^((q-1)/2n).
// Throws std::invalid_argument unless n is a power of 2 and q = 1 mod 2n.
RootSet find_roots(uint64_t n, const Modulus& m);

// Random prime with the requested bit width and q = 1 mod 2n, so find_roots
// succeeds on it. Deterministic per seed (seeded start, wrapping scan over
// candidates of the form 2n*c + 1). Throws std::runtime_error when the range
// holds no such prime, std::invalid_argument on bad bit_width/n.
Modulus generate_ntt_prime(int bit_width, uint64_t n, uint64_t seed);

}  // namespace pimhe::modmath
