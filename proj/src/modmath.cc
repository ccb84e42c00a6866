#include "pimhe/modmath.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <random>
#include <stdexcept>
#include <string>

namespace pimhe::modmath {

namespace {

using u128 = unsigned __int128;

uint64_t mul_mod_u128(uint64_t a, uint64_t b, uint64_t q) {
  return static_cast<uint64_t>(static_cast<u128>(a) * b % q);
}

uint64_t pow_mod_u128(uint64_t base, uint64_t exp, uint64_t q) {
  uint64_t acc = 1 % q;
  base %= q;
  while (exp) {
    if (exp & 1) acc = mul_mod_u128(acc, base, q);
    base = mul_mod_u128(base, base, q);
    exp >>= 1;
  }
  return acc;
}

// Miller-Rabin witness loop for one base.
bool witness_composite(uint64_t a, uint64_t d, int r, uint64_t x) {
  uint64_t y = pow_mod_u128(a % x, d, x);
  if (y == 1 || y == x - 1) return false;
  for (int i = 1; i < r; ++i) {
    y = mul_mod_u128(y, y, x);
    if (y == x - 1) return false;
  }
  return true;
}

// Trial division by small primes, then rho-style splitting is overkill here:
// q-1 for 62-bit q factors fast enough with Pollard rho.
uint64_t pollard_rho(uint64_t n) {
  if ((n & 1) == 0) return 2;
  std::mt19937_64 gen(0x9e3779b97f4a7c15ULL ^ n);
  while (true) {
    uint64_t c = gen() % (n - 1) + 1;
    uint64_t x = gen() % n, y = x, d = 1;
    auto f = [&](uint64_t v) { return (mul_mod_u128(v, v, n) + c) % n; };
    while (d == 1) {
      x = f(x);
      y = f(f(y));
      uint64_t diff = x > y ? x - y : y - x;
      if (diff == 0) break;
      d = std::gcd(diff, n);
    }
    if (d != 1 && d != n) return d;
  }
}

void factorize(uint64_t n, std::vector<uint64_t>& primes) {
  if (n == 1) return;
  if (is_prime(n)) {
    primes.push_back(n);
    return;
  }
  for (uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) {
      primes.push_back(p);
      while (n % p == 0) n /= p;
      factorize(n, primes);
      return;
    }
  }
  uint64_t d = pollard_rho(n);
  factorize(d, primes);
  factorize(n / d, primes);
}

}  // namespace

bool is_prime(uint64_t x) {
  if (x < 2) return false;
  for (uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    if (x == p) return true;
    if (x % p == 0) return false;
  }
  uint64_t d = x - 1;
  int r = std::countr_zero(d);
  d >>= r;
  // This base set is a proven deterministic test for all x < 2^64.
  for (uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    if (witness_composite(a, d, r, x)) return false;
  }
  return true;
}

Modulus::Modulus(uint64_t q_in) {
  if (q_in < 2 || q_in >= (1ULL << 62)) {
    throw std::invalid_argument("modulus must satisfy 2 <= q < 2^62, got " +
                                std::to_string(q_in));
  }
  if (!is_prime(q_in)) {
    throw std::invalid_argument("modulus must be prime, got " +
                                std::to_string(q_in));
  }
  q = q_in;
  bit_width = 64 - std::countl_zero(q_in);
  // floor(2^(2k) / q) with k <= 62, so the quotient fits in 64 bits
  // (2^(2k)/q < 2^(2k)/2^(k-1) = 2^(k+1) <= 2^63).
  barrett_factor =
      static_cast<uint64_t>((static_cast<u128>(1) << (2 * bit_width)) / q);
}

uint64_t mod_add(uint64_t a, uint64_t b, const Modulus& m) {
  assert(a < m.q && b < m.q);
  uint64_t s = a + b;
  return s >= m.q ? s - m.q : s;
}

uint64_t mod_sub(uint64_t a, uint64_t b, const Modulus& m) {
  assert(a < m.q && b < m.q);
  return a >= b ? a - b : a + m.q - b;
}

uint64_t mod_mul_barrett(uint64_t a, uint64_t b, const Modulus& m) {
  assert(a < m.q && b < m.q);
  const int k = m.bit_width;
  u128 x = static_cast<u128>(a) * b;
  uint64_t q1 = static_cast<uint64_t>(x >> (k - 1));
  u128 q2 = static_cast<u128>(q1) * m.barrett_factor;
  uint64_t q3 = static_cast<uint64_t>(q2 >> (k + 1));
  uint64_t r = static_cast<uint64_t>(x - static_cast<u128>(q3) * m.q);
  if (r >= m.q) r -= m.q;
  if (r >= m.q) r -= m.q;
  return r;
}

uint64_t mod_pow(uint64_t base, uint64_t exp, const Modulus& m) {
  assert(base < m.q);
  uint64_t acc = 1 % m.q;
  while (exp) {
    if (exp & 1) acc = mod_mul_barrett(acc, base, m);
    base = mod_mul_barrett(base, base, m);
    exp >>= 1;
  }
  return acc;
}

uint64_t mod_inv(uint64_t a, const Modulus& m) {
  if (a == 0) throw std::invalid_argument("0 has no inverse");
  return mod_pow(a, m.q - 2, m);
}

RootSet find_roots(uint64_t n, const Modulus& m) {
  if (n < 2 || !std::has_single_bit(n)) {
    throw std::invalid_argument("ring dimension must be a power of 2, >= 2");
  }
  if ((m.q - 1) % (2 * n) != 0) {
    throw std::invalid_argument("q = " + std::to_string(m.q) +
                                " is not 1 mod " + std::to_string(2 * n) +
                                "; no 2n-th root of unity exists");
  }

  std::vector<uint64_t> prime_factors;
  factorize(m.q - 1, prime_factors);

  // Smallest generator of Z_q^*: g passes iff g^((q-1)/p) != 1 for every
  // prime p | q-1.
  uint64_t g = 0;
  for (uint64_t cand = 2; cand < m.q; ++cand) {
    bool ok = true;
    for (uint64_t p : prime_factors) {
      if (mod_pow(cand, (m.q - 1) / p, m) == 1) {
        ok = false;
        break;
      }
    }
    if (ok) {
      g = cand;
      break;
    }
  }
  assert(g != 0);

  RootSet rs;
  rs.n = n;
  rs.psi = mod_pow(g, (m.q - 1) / (2 * n), m);
  rs.omega = mod_mul_barrett(rs.psi, rs.psi, m);
  rs.psi_inv = mod_inv(rs.psi, m);
  rs.omega_inv = mod_inv(rs.omega, m);
  rs.n_inv = mod_inv(n % m.q, m);
  return rs;
}

Modulus generate_ntt_prime(int bit_width, uint64_t n, uint64_t seed) {
  if (bit_width < 2 || bit_width > 62) {
    throw std::invalid_argument("bit_width must lie in [2, 62]");
  }
  if (n < 2 || !std::has_single_bit(n)) {
    throw std::invalid_argument("ring dimension must be a power of 2, >= 2");
  }
  const uint64_t lo = 1ULL << (bit_width - 1);
  const uint64_t hi = (bit_width == 62) ? (1ULL << 62) - 1
                                        : (1ULL << bit_width) - 1;
  const uint64_t step = 2 * n;
  // Candidates are q = step*c + 1 with lo <= q <= hi.
  const uint64_t c_min = (lo + step - 2) / step;  // smallest c with q >= lo
  const uint64_t c_max = (hi - 1) / step;         // largest c with q <= hi
  if (c_min > c_max) {
    throw std::runtime_error("no " + std::to_string(bit_width) +
                             "-bit candidate is 1 mod " + std::to_string(step));
  }
  const uint64_t span = c_max - c_min + 1;
  std::mt19937_64 gen(seed);
  const uint64_t start = c_min + gen() % span;
  for (uint64_t i = 0; i < span; ++i) {
    uint64_t c = c_min + (start - c_min + i) % span;
    uint64_t q = step * c + 1;
    if (is_prime(q)) return Modulus(q);
  }
  throw std::runtime_error("no " + std::to_string(bit_width) +
                           "-bit prime is 1 mod " + std::to_string(step));
}

}  // namespace pimhe::modmath
