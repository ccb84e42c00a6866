#include <doctest.h>

#include <random>
#include <stdexcept>

#include "pimhe/modmath.hpp"

using namespace pimhe::modmath;

namespace {
using u128 = unsigned __int128;

uint64_t oracle_mul(uint64_t a, uint64_t b, uint64_t q) {
  return static_cast<uint64_t>(static_cast<u128>(a) * b % q);
}
}  // namespace

TEST_CASE("modulus construction validates primality and range") {
  Modulus m(65537);
  CHECK(m.q == 65537);
  CHECK(m.bit_width == 17);
  // barrett_factor recomputable: floor(2^34 / 65537)
  CHECK(m.barrett_factor == (static_cast<u128>(1) << 34) / 65537);

  CHECK_THROWS_AS(Modulus(65536), std::invalid_argument);  // composite
  CHECK_THROWS_AS(Modulus(1), std::invalid_argument);
  CHECK_THROWS_AS(Modulus(0), std::invalid_argument);
  CHECK_THROWS_AS(Modulus(1ULL << 62), std::invalid_argument);  // too wide
  CHECK_NOTHROW(Modulus((1ULL << 62) - 57));  // largest prime below 2^62
}

TEST_CASE("deterministic primality on known primes and composites") {
  CHECK(is_prime(2));
  CHECK(is_prime(3));
  CHECK(is_prime(65537));
  CHECK(is_prime((1ULL << 62) - 57));
  CHECK(is_prime(0xFFFFFFFFFFFFFFC5ULL));  // largest prime below 2^64
  CHECK_FALSE(is_prime(1));
  CHECK_FALSE(is_prime(65536));
  CHECK_FALSE(is_prime(3215031751ULL));        // strong pseudoprime to 2,3,5,7
  CHECK_FALSE(is_prime(341550071728321ULL));   // pseudoprime to 2..17
}

TEST_CASE("mod_add conditional-subtraction adder") {
  Modulus f(65537);
  CHECK(mod_add(65000, 1000, f) == 463);
  CHECK(mod_add(0, 0, f) == 0);
  CHECK(mod_add(65536, 65536, f) == 65535);  // a+b = 2q-2
}

TEST_CASE("mod_add matches wide arithmetic exhaustively for small prime") {
  Modulus m(257);
  for (uint64_t a = 0; a < 257; ++a)
    for (uint64_t b = 0; b < 257; ++b)
      CHECK(mod_add(a, b, m) == (a + b) % 257);
}

TEST_CASE("mod_sub wraps into [0, q)") {
  Modulus m(17);
  CHECK(mod_sub(3, 10, m) == 10);
  CHECK(mod_sub(5, 5, m) == 0);
  CHECK(mod_sub(16, 0, m) == 16);
}

TEST_CASE("mod_mul_barrett frozen examples") {
  Modulus m17(17);
  CHECK(mod_mul_barrett(13, 13, m17) == 16);
  Modulus f(65537);
  CHECK(mod_mul_barrett(65536, 65536, f) == 1);  // (q-1)^2 = 1 mod q
  for (uint64_t x : {0ULL, 1ULL, 12345ULL, 65536ULL})
    CHECK(mod_mul_barrett(1, x, f) == x);
}

TEST_CASE("mod_mul_barrett matches wide-multiply oracle across widths") {
  std::mt19937_64 gen(7);
  for (uint64_t q : {3ULL, 17ULL, 65537ULL, (1ULL << 31) - 1,
                     1152921504606830593ULL,  // 60-bit, 1 mod 2^21
                     (1ULL << 62) - 57}) {
    Modulus m(q);
    for (int i = 0; i < 100000; ++i) {
      uint64_t a = gen() % q, b = gen() % q;
      CHECK(mod_mul_barrett(a, b, m) == oracle_mul(a, b, q));
    }
    // boundary operands
    CHECK(mod_mul_barrett(q - 1, q - 1, m) == oracle_mul(q - 1, q - 1, q));
    CHECK(mod_mul_barrett(q - 1, 1, m) == q - 1);
    CHECK(mod_mul_barrett(0, q - 1, m) == 0);
  }
}

TEST_CASE("mod_pow square-and-multiply") {
  Modulus m(17);
  CHECK(mod_pow(4, 4, m) == 1);    // omega = 4 is a 4th root of unity
  CHECK(mod_pow(2, 4, m) == 16);   // psi = 2 satisfies psi^n = -1
  CHECK(mod_pow(5, 0, m) == 1);
  CHECK(mod_pow(0, 0, m) == 1);

  // cross-check against repeated multiplication
  Modulus big(1152921504606830593ULL);
  std::mt19937_64 gen(11);
  for (int i = 0; i < 50; ++i) {
    uint64_t base = gen() % big.q;
    uint64_t exp = gen() % 500;
    uint64_t acc = 1;
    for (uint64_t j = 0; j < exp; ++j) acc = oracle_mul(acc, base, big.q);
    CHECK(mod_pow(base, exp, big) == acc);
  }
}

TEST_CASE("mod_inv via Fermat") {
  Modulus m(17);
  CHECK(mod_inv(4, m) == 13);
  CHECK(mod_inv(1, m) == 1);
  CHECK_THROWS_AS(mod_inv(0, m), std::invalid_argument);

  Modulus big(1152921504606830593ULL);
  std::mt19937_64 gen(13);
  for (int i = 0; i < 1000; ++i) {
    uint64_t a = gen() % (big.q - 1) + 1;
    uint64_t inv = mod_inv(a, big);
    CHECK(mod_mul_barrett(a, inv, big) == 1);
    CHECK(mod_inv(inv, big) == a);  // involution
  }
}

TEST_CASE("find_roots returns a valid root set") {
  Modulus m(17);
  RootSet rs = find_roots(4, m);
  // Smallest generator of Z_17^* is 3 (2^8 = 1 kills 2), so psi = 3^2 = 9;
  // any element of exact order 8 would do, this one is the pinned choice.
  CHECK(rs.psi == 9);
  CHECK(rs.omega == 13);
  CHECK(rs.psi_inv == 2);       // 9*2 = 18 = 1 mod 17
  CHECK(rs.omega_inv == 4);     // 13*4 = 52 = 1 mod 17
  CHECK(rs.n_inv == 13);        // 4*13 = 52 = 1 mod 17
  CHECK(mod_pow(rs.psi, 4, m) == 16);   // psi^n = -1
  CHECK(mod_pow(rs.omega, 4, m) == 1);  // omega^n = 1

  RootSet rs2 = find_roots(2, m);
  CHECK(rs2.omega == 16);

  CHECK_THROWS_AS(find_roots(4, Modulus(7)), std::invalid_argument);
  CHECK_THROWS_AS(find_roots(3, m), std::invalid_argument);  // not power of 2
}

TEST_CASE("root sets satisfy primitivity invariants across moduli") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 8; ++trial) {
    uint64_t n = 1ULL << (2 + trial % 5);  // 4..64
    Modulus m = generate_ntt_prime(40 + trial, n, gen());
    RootSet rs = find_roots(n, m);

    CHECK(mod_pow(rs.omega, n, m) == 1);
    CHECK(mod_pow(rs.omega, n / 2, m) != 1);
    CHECK(mod_mul_barrett(rs.psi, rs.psi, m) == rs.omega);
    CHECK(mod_pow(rs.psi, n, m) == m.q - 1);
    CHECK(mod_mul_barrett(rs.n_inv, n % m.q, m) == 1);
    CHECK(mod_mul_barrett(rs.psi, rs.psi_inv, m) == 1);
    CHECK(mod_mul_barrett(rs.omega, rs.omega_inv, m) == 1);

    // exact order 2n: psi^d != 1 for every proper divisor d of 2n
    for (uint64_t d = 1; d < 2 * n; d *= 2)
      CHECK(mod_pow(rs.psi, d, m) != 1);
  }
}

TEST_CASE("find_roots is deterministic per (n, q)") {
  Modulus m = generate_ntt_prime(50, 256, 99);
  RootSet a = find_roots(256, m);
  RootSet b = find_roots(256, m);
  CHECK(a.psi == b.psi);
  CHECK(a.omega == b.omega);
}

TEST_CASE("generate_ntt_prime returns well-formed NTT-friendly primes") {
  Modulus m = generate_ntt_prime(17, 4, 1);
  CHECK(is_prime(m.q));
  CHECK(m.q % 8 == 1);
  CHECK(m.q >= (1ULL << 16));
  CHECK(m.q < (1ULL << 17));

  Modulus m5 = generate_ntt_prime(5, 4, 0);
  CHECK(m5.q == 17);  // only 5-bit prime that is 1 mod 8

  CHECK_THROWS(generate_ntt_prime(2, 1024, 0));

  // determinism per seed
  CHECK(generate_ntt_prime(30, 1024, 42).q ==
        generate_ntt_prime(30, 1024, 42).q);
}

TEST_CASE("generate_ntt_prime covers the 60-bit regime used by towers") {
  for (uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    Modulus m = generate_ntt_prime(60, 4096, seed);
    CHECK(m.bit_width == 60);
    CHECK(m.q % 8192 == 1);
    CHECK_NOTHROW(find_roots(4096, m));
  }
}
