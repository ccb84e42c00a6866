#include "pimhe/rns.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace pimhe::rns {

using modmath::mod_inv;
using modmath::mod_mul_barrett;
using modmath::Modulus;
using polyring::Polynomial;
using polyring::Reduction;
using polyring::RingParams;

namespace {

void init_garner(RnsBasis& b) {
  b.k = b.towers.size();
  b.big_q = 1;
  for (const Modulus& m : b.towers) b.big_q *= m.q;
  b.crt_garner_constants.assign(b.k, 1);
  for (uint64_t j = 1; j < b.k; ++j) {
    const Modulus& qj = b.towers[j];
    uint64_t prefix = 1;
    for (uint64_t i = 0; i < j; ++i) {
      prefix = mod_mul_barrett(prefix, b.towers[i].q % qj.q, qj);
    }
    b.crt_garner_constants[j] = mod_inv(prefix, qj);
  }
}

}  // namespace

RnsBasis::RnsBasis(const std::vector<uint64_t>& moduli) {
  if (moduli.empty()) {
    throw std::invalid_argument("basis needs at least one tower");
  }
  std::set<uint64_t> seen;
  for (uint64_t q : moduli) {
    if (!seen.insert(q).second) {
      throw std::invalid_argument("tower moduli must be pairwise distinct");
    }
    towers.emplace_back(q);  // Modulus constructor enforces primality
  }
  init_garner(*this);
}

bool RnsBasis::same_towers(const RnsBasis& other) const {
  if (k != other.k) return false;
  for (uint64_t i = 0; i < k; ++i) {
    if (towers[i].q != other.towers[i].q) return false;
  }
  return true;
}

RnsBasis build_basis(uint64_t k, int bit_width, uint64_t n, uint64_t seed) {
  if (k < 1) throw std::invalid_argument("tower count must be >= 1");
  if (bit_width < 2 || bit_width > 62) {
    throw std::invalid_argument("bit_width must lie in [2, 62]");
  }
  RnsBasis b;
  std::mt19937_64 gen(seed);
  // Same candidate walk as generate_ntt_prime, continued until k distinct
  // primes fall out.
  const uint64_t lo = 1ULL << (bit_width - 1);
  const uint64_t hi = (bit_width == 62) ? (1ULL << 62) - 1
                                        : (1ULL << bit_width) - 1;
  const uint64_t step = 2 * n;
  const uint64_t c_min = (lo + step - 2) / step;
  const uint64_t c_max = (hi - 1) / step;
  if (c_min > c_max) {
    throw std::runtime_error("bit width " + std::to_string(bit_width) +
                             " cannot supply primes that are 1 mod " +
                             std::to_string(step));
  }
  const uint64_t span = c_max - c_min + 1;
  const uint64_t start = c_min + gen() % span;
  for (uint64_t i = 0; i < span && b.towers.size() < k; ++i) {
    uint64_t c = c_min + (start - c_min + i) % span;
    uint64_t q = step * c + 1;
    if (modmath::is_prime(q)) b.towers.emplace_back(q);
  }
  if (b.towers.size() < k) {
    throw std::runtime_error("only " + std::to_string(b.towers.size()) +
                             " of " + std::to_string(k) + " primes of width " +
                             std::to_string(bit_width) + " exist with q = 1 mod " +
                             std::to_string(step));
  }
  init_garner(b);
  return b;
}

DcrtPolynomial decompose(const std::vector<BigInt>& coeffs,
                         const RnsBasis& basis) {
  const uint64_t n = coeffs.size();
  for (const BigInt& c : coeffs) {
    if (c < 0 || c >= basis.big_q) {
      throw std::invalid_argument("coefficient out of [0, big_q)");
    }
  }
  DcrtPolynomial out;
  out.n = n;
  out.towers.reserve(basis.k);
  for (const Modulus& m : basis.towers) {
    RingParams rp(n, m, Reduction::NegacyclicXnPlus1);
    Polynomial t(rp);
    for (uint64_t i = 0; i < n; ++i) {
      t.coeffs[i] = static_cast<uint64_t>(coeffs[i] % m.q);
    }
    out.towers.push_back(std::move(t));
  }
  return out;
}

std::vector<BigInt> reconstruct(const DcrtPolynomial& p,
                                const RnsBasis& basis) {
  if (p.towers.size() != basis.k) {
    throw std::invalid_argument("tower count does not match basis");
  }
  for (uint64_t i = 0; i < basis.k; ++i) {
    if (p.towers[i].params.modulus.q != basis.towers[i].q) {
      throw std::invalid_argument("tower modulus does not match basis");
    }
  }
  const uint64_t k = basis.k;
  const uint64_t n = p.n;
  std::vector<BigInt> out(n);
  std::vector<uint64_t> v(k);  // mixed-radix digits of one coefficient
  for (uint64_t c = 0; c < n; ++c) {
    v[0] = p.towers[0].coeffs[c];
    for (uint64_t j = 1; j < k; ++j) {
      const Modulus& qj = basis.towers[j];
      // Horner evaluation of v_0 + v_1 q_0 + ... + v_{j-1} q_0..q_{j-2}
      // reduced mod q_j.
      uint64_t acc = v[j - 1] % qj.q;
      for (uint64_t i = j - 1; i >= 1; --i) {
        acc = mod_mul_barrett(acc, basis.towers[i - 1].q % qj.q, qj);
        acc = modmath::mod_add(acc, v[i - 1] % qj.q, qj);
      }
      uint64_t r = p.towers[j].coeffs[c];
      uint64_t diff = modmath::mod_sub(r % qj.q, acc, qj);
      v[j] = mod_mul_barrett(diff, basis.crt_garner_constants[j], qj);
    }
    BigInt x = v[k - 1];
    for (uint64_t j = k - 1; j >= 1; --j) {
      x = x * basis.towers[j - 1].q + v[j - 1];
    }
    out[c] = x;
  }
  return out;
}

namespace {

void require_same_shape(const DcrtPolynomial& p1, const DcrtPolynomial& p2) {
  if (p1.n != p2.n || p1.towers.size() != p2.towers.size()) {
    throw std::invalid_argument("operands come from different bases");
  }
  for (size_t i = 0; i < p1.towers.size(); ++i) {
    if (!(p1.towers[i].params == p2.towers[i].params)) {
      throw std::invalid_argument("operands come from different bases");
    }
  }
}

}  // namespace

DcrtPolynomial dcrt_add(const DcrtPolynomial& p1, const DcrtPolynomial& p2) {
  require_same_shape(p1, p2);
  DcrtPolynomial out;
  out.n = p1.n;
  out.towers.reserve(p1.towers.size());
  for (size_t i = 0; i < p1.towers.size(); ++i) {
    out.towers.push_back(polyring::poly_add(p1.towers[i], p2.towers[i]));
  }
  return out;
}

DcrtPolynomial dcrt_mul(const DcrtPolynomial& p1, const DcrtPolynomial& p2,
                        const std::vector<ntt::TwiddleTable>& tables) {
  require_same_shape(p1, p2);
  if (tables.size() != p1.towers.size()) {
    throw std::invalid_argument("need one twiddle table per tower");
  }
  for (size_t i = 0; i < tables.size(); ++i) {
    if (tables[i].roots.n != p1.n ||
        tables[i].modulus.q != p1.towers[i].params.modulus.q) {
      throw std::invalid_argument("table " + std::to_string(i) +
                                  " does not match its tower");
    }
  }
  DcrtPolynomial out;
  out.n = p1.n;
  out.towers.reserve(p1.towers.size());
  for (size_t i = 0; i < p1.towers.size(); ++i) {
    out.towers.push_back(
        ntt::fast_negacyclic_mul(p1.towers[i], p2.towers[i], tables[i]));
  }
  return out;
}

}  // namespace pimhe::rns
