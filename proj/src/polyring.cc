#include "pimhe/polyring.hpp"

#include <bit>
#include <cassert>
#include <random>
#include <stdexcept>
#include <string>

namespace pimhe::polyring {

using modmath::mod_add;
using modmath::mod_mul_barrett;
using modmath::mod_sub;

RingParams::RingParams(uint64_t n_in, modmath::Modulus mod, Reduction red)
    : n(n_in), modulus(mod), reduction(red) {
  if (n < 2 || !std::has_single_bit(n)) {
    throw std::invalid_argument("ring dimension must be a power of 2, >= 2");
  }
}

Polynomial::Polynomial(std::vector<uint64_t> c, const RingParams& p)
    : coeffs(std::move(c)), params(p) {
  if (coeffs.size() != params.n) {
    throw std::invalid_argument("coefficient count " +
                                std::to_string(coeffs.size()) +
                                " does not match ring dimension " +
                                std::to_string(params.n));
  }
  for (uint64_t v : coeffs) {
    if (v >= params.modulus.q) {
      throw std::invalid_argument("coefficient " + std::to_string(v) +
                                  " out of range for q = " +
                                  std::to_string(params.modulus.q));
    }
  }
}

namespace {

void require_same_ring(const Polynomial& p1, const Polynomial& p2) {
  if (!(p1.params == p2.params)) {
    throw std::invalid_argument("operands come from different rings");
  }
}

}  // namespace

Polynomial poly_add(const Polynomial& p1, const Polynomial& p2,
                    OpCounts* counts) {
  require_same_ring(p1, p2);
  const auto& m = p1.params.modulus;
  Polynomial out(p1.params);
  for (uint64_t k = 0; k < p1.params.n; ++k) {
    out.coeffs[k] = mod_add(p1.coeffs[k], p2.coeffs[k], m);
  }
  if (counts) counts->additions += p1.params.n;
  return out;
}

Polynomial cw_mul(const Polynomial& p1, const Polynomial& p2,
                  OpCounts* counts) {
  require_same_ring(p1, p2);
  const auto& m = p1.params.modulus;
  Polynomial out(p1.params);
  for (uint64_t k = 0; k < p1.params.n; ++k) {
    out.coeffs[k] = mod_mul_barrett(p1.coeffs[k], p2.coeffs[k], m);
  }
  if (counts) counts->multiplications += p1.params.n;
  return out;
}

ConvolutionResult schoolbook_convolution(const Polynomial& p1,
                                         const Polynomial& p2,
                                         OpCounts* counts) {
  require_same_ring(p1, p2);
  const uint64_t n = p1.params.n;
  const auto& m = p1.params.modulus;
  ConvolutionResult out;
  out.coeffs.assign(2 * n - 1, 0);
  uint64_t adds = 0;
  // c_k starts as its first product and accumulates the rest, so each of the
  // 2n-1 output terms contributes (terms-1) additions: n^2 - (2n-1) = (n-1)^2
  // in total, alongside exactly n^2 products.
  for (uint64_t k = 0; k < 2 * n - 1; ++k) {
    const uint64_t i_lo = k >= n ? k - n + 1 : 0;
    const uint64_t i_hi = k < n ? k : n - 1;
    uint64_t acc = mod_mul_barrett(p1.coeffs[i_lo], p2.coeffs[k - i_lo], m);
    for (uint64_t i = i_lo + 1; i <= i_hi; ++i) {
      acc = mod_add(acc, mod_mul_barrett(p1.coeffs[i], p2.coeffs[k - i], m),
                    m);
      ++adds;
    }
    out.coeffs[k] = acc;
  }
  if (counts) {
    counts->multiplications += n * n;
    counts->additions += adds;
  }
  return out;
}

Polynomial reduce_negacyclic(const ConvolutionResult& c,
                             const RingParams& params) {
  assert(params.reduction == Reduction::NegacyclicXnPlus1);
  assert(c.coeffs.size() == 2 * params.n - 1);
  const auto& m = params.modulus;
  Polynomial out(params);
  for (uint64_t k = 0; k < params.n; ++k) {
    uint64_t high = k + params.n < c.coeffs.size() ? c.coeffs[k + params.n]
                                                   : 0;
    out.coeffs[k] = mod_sub(c.coeffs[k], high, m);
  }
  return out;
}

Polynomial reduce_cyclic(const ConvolutionResult& c, const RingParams& params) {
  assert(params.reduction == Reduction::CyclicXnMinus1);
  assert(c.coeffs.size() == 2 * params.n - 1);
  const auto& m = params.modulus;
  Polynomial out(params);
  for (uint64_t k = 0; k < params.n; ++k) {
    uint64_t high = k + params.n < c.coeffs.size() ? c.coeffs[k + params.n]
                                                   : 0;
    out.coeffs[k] = mod_add(c.coeffs[k], high, m);
  }
  return out;
}

uint64_t uniform_residue(std::mt19937_64& gen, uint64_t q) {
  // Rejection below 2^64 mod q keeps the draw unbiased and the stream
  // identical on every platform (std::uniform_int_distribution is not
  // specified tightly enough for that).
  const uint64_t threshold = (0 - q) % q;
  uint64_t r;
  do {
    r = gen();
  } while (r < threshold);
  return r % q;
}

Polynomial random_poly(const RingParams& params, uint64_t seed) {
  std::mt19937_64 gen(seed);
  Polynomial out(params);
  for (uint64_t k = 0; k < params.n; ++k) {
    out.coeffs[k] = uniform_residue(gen, params.modulus.q);
  }
  return out;
}

}  // namespace pimhe::polyring
