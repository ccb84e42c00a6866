#include "pimhe/hekernels.hpp"

#include <bit>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "pimhe/ntt.hpp"
#include "pimhe/rns.hpp"

namespace pimhe::hekernels {

using modmath::mod_add;
using modmath::mod_mul_barrett;
using modmath::mod_pow;
using modmath::mod_sub;
using modmath::Modulus;
using polyring::Polynomial;
using polyring::Reduction;
using polyring::RingParams;
using rns::BigInt;

namespace {

bool ntt_friendly(const RingParams& ring) {
  return (ring.modulus.q - 1) % (2 * ring.n) == 0;
}

Polynomial ring_mul_with(const Polynomial& p1, const Polynomial& p2,
                         const ntt::TwiddleTable* table) {
  if (table) return ntt::fast_negacyclic_mul(p1, p2, *table);
  return polyring::reduce_negacyclic(polyring::schoolbook_convolution(p1, p2),
                                     p1.params);
}

Polynomial uniform_poly(const RingParams& ring, std::mt19937_64& gen) {
  Polynomial out(ring);
  for (auto& c : out.coeffs) {
    c = polyring::uniform_residue(gen, ring.modulus.q);
  }
  return out;
}

Polynomial neg(const Polynomial& p) {
  Polynomial out(p.params);
  for (uint64_t i = 0; i < p.params.n; ++i) {
    out.coeffs[i] = mod_sub(0, p.coeffs[i], p.params.modulus);
  }
  return out;
}

// round(num / den) for den > 0; callers guarantee exact halves cannot occur
// (den is an odd prime coprime to the numerator's factors at any half).
BigInt div_round_nearest(const BigInt& num, const BigInt& den) {
  BigInt q0 = num / den;  // truncates toward zero
  BigInt r = num - q0 * den;
  if (r > 0 && 2 * r > den) ++q0;
  if (r < 0 && 2 * -r > den) --q0;
  return q0;
}

uint64_t to_residue(const BigInt& v, uint64_t q) {
  BigInt r = v % q;
  if (r < 0) r += q;
  return static_cast<uint64_t>(r);
}

// The auxiliary CRT basis for exact tensor products: three primes of the
// top permissible width, 1 mod 2n so each tower multiplies through its own
// NTT. Product exceeds 2^180, far above the 2n*(q/2)^2 < 2^132 coefficient
// bound of any tensor term, so centered values survive the round trip.
struct AuxBasis {
  rns::RnsBasis basis;
  std::vector<ntt::TwiddleTable> tables;
};

AuxBasis make_aux_basis(uint64_t n) {
  AuxBasis aux;
  aux.basis = rns::build_basis(3, 61, n, /*seed=*/0);
  aux.tables.reserve(3);
  for (const Modulus& m : aux.basis.towers) {
    aux.tables.push_back(ntt::make_table(n, m));
  }
  return aux;
}

// Wraps the centered representative of c (taken from [0, q)) into [0, P).
BigInt lift_centered(uint64_t c, uint64_t q, const BigInt& P) {
  if (c <= (q - 1) / 2) return BigInt(c);
  return P - (q - c);
}

rns::DcrtPolynomial lift_poly(const Polynomial& p, const rns::RnsBasis& b) {
  std::vector<BigInt> coeffs(p.params.n);
  const uint64_t q = p.params.modulus.q;
  for (uint64_t i = 0; i < p.params.n; ++i) {
    coeffs[i] = lift_centered(p.coeffs[i], q, b.big_q);
  }
  return rns::decompose(coeffs, b);
}

// Reconstructs a tensor component, centers it, and applies the BFV
// round(t*x/q) rescale back into [0, q).
Polynomial rescale_component(const rns::DcrtPolynomial& d,
                             const rns::RnsBasis& b,
                             const SchemeParams& params) {
  std::vector<BigInt> wide = rns::reconstruct(d, b);
  const BigInt half = b.big_q / 2;
  Polynomial out(params.ring);
  const uint64_t q = params.ring.modulus.q;
  for (uint64_t i = 0; i < params.ring.n; ++i) {
    BigInt x = wide[i];
    if (x > half) x -= b.big_q;
    out.coeffs[i] = to_residue(div_round_nearest(params.t * x, BigInt(q)), q);
  }
  return out;
}

}  // namespace

SchemeParams::SchemeParams(const RingParams& ring_in, uint64_t t_in,
                           double noise_stddev_in, uint64_t decomp_base_in)
    : ring(ring_in),
      t(t_in),
      noise_stddev(noise_stddev_in),
      decomp_base(decomp_base_in) {
  if (ring.reduction != Reduction::NegacyclicXnPlus1) {
    throw std::invalid_argument("scheme requires a negacyclic ring");
  }
  if (t < 2 || t >= ring.modulus.q) {
    throw std::invalid_argument("plaintext modulus must satisfy 2 <= t < q");
  }
  if (decomp_base < 2 || !std::has_single_bit(decomp_base)) {
    throw std::invalid_argument("decomp_base must be a power of 2, >= 2");
  }
  if (noise_stddev < 0) {
    throw std::invalid_argument("noise_stddev must be non-negative");
  }
  delta = ring.modulus.q / t;
}

uint64_t SchemeParams::digit_count() const {
  const uint64_t base_bits = std::countr_zero(decomp_base);
  return (static_cast<uint64_t>(ring.modulus.bit_width) + base_bits - 1) /
         base_bits;
}

Polynomial sample_ternary(const RingParams& ring, std::mt19937_64& gen) {
  Polynomial out(ring);
  const uint64_t q = ring.modulus.q;
  for (auto& c : out.coeffs) {
    uint64_t draw = polyring::uniform_residue(gen, 3);
    c = draw == 2 ? q - 1 : draw;
  }
  return out;
}

Polynomial sample_noise(const RingParams& ring, double noise_stddev,
                        std::mt19937_64& gen) {
  Polynomial out(ring);
  const uint64_t q = ring.modulus.q;
  // Centered binomial with 2k trials has variance k/2; k = floor(2*sigma^2)
  // lands within a percent of the requested stddev for sigma near 3.2.
  const uint64_t k = static_cast<uint64_t>(2.0 * noise_stddev * noise_stddev);
  const int64_t bound = static_cast<int64_t>(6.0 * noise_stddev);
  if (k == 0) return out;
  uint64_t pool = 0;
  int pool_bits = 0;
  auto take_bit = [&]() -> int64_t {
    if (pool_bits == 0) {
      pool = gen();
      pool_bits = 64;
    }
    int64_t b = pool & 1;
    pool >>= 1;
    --pool_bits;
    return b;
  };
  for (auto& c : out.coeffs) {
    int64_t v = 0;
    for (uint64_t i = 0; i < k; ++i) v += take_bit() - take_bit();
    if (v > bound) v = bound;
    if (v < -bound) v = -bound;
    c = v >= 0 ? static_cast<uint64_t>(v)
               : q - static_cast<uint64_t>(-v);
  }
  return out;
}

KeyMaterial keygen(const SchemeParams& params, uint64_t seed) {
  std::mt19937_64 gen(seed);
  const RingParams& ring = params.ring;
  std::optional<ntt::TwiddleTable> table;
  if (ntt_friendly(ring)) {
    table = ntt::make_table(ring.n, ring.modulus);
  }
  const ntt::TwiddleTable* tp = table ? &*table : nullptr;

  KeyMaterial keys;
  keys.sk = sample_ternary(ring, gen);
  Polynomial a = uniform_poly(ring, gen);
  Polynomial e = sample_noise(ring, params.noise_stddev, gen);
  Polynomial b = neg(polyring::poly_add(ring_mul_with(a, keys.sk, tp), e));
  keys.pk = {std::move(a), std::move(b)};

  Polynomial s2 = ring_mul_with(keys.sk, keys.sk, tp);
  const uint64_t digits = params.digit_count();
  const Modulus& q = ring.modulus;
  keys.ek.reserve(digits);
  for (uint64_t i = 0; i < digits; ++i) {
    Polynomial ai = uniform_poly(ring, gen);
    Polynomial ei = sample_noise(ring, params.noise_stddev, gen);
    Polynomial bi = neg(polyring::poly_add(ring_mul_with(ai, keys.sk, tp), ei));
    // add base^i * s^2 onto the b side
    const uint64_t scale = mod_pow(params.decomp_base % q.q, i, q);
    for (uint64_t j = 0; j < ring.n; ++j) {
      bi.coeffs[j] =
          mod_add(bi.coeffs[j], mod_mul_barrett(scale, s2.coeffs[j], q), q);
    }
    keys.ek.emplace_back(std::move(bi), std::move(ai));
  }
  return keys;
}

Ciphertext encrypt(const std::vector<uint64_t>& m, const KeyMaterial& keys,
                   const SchemeParams& params, uint64_t seed) {
  const RingParams& ring = params.ring;
  if (m.size() != ring.n) {
    throw std::invalid_argument("plaintext length " +
                                std::to_string(m.size()) +
                                " does not match ring dimension");
  }
  for (uint64_t v : m) {
    if (v >= params.t) {
      throw std::invalid_argument("plaintext coefficient " +
                                  std::to_string(v) + " is not below t = " +
                                  std::to_string(params.t));
    }
  }
  std::mt19937_64 gen(seed);
  std::optional<ntt::TwiddleTable> table;
  if (ntt_friendly(ring)) {
    table = ntt::make_table(ring.n, ring.modulus);
  }
  const ntt::TwiddleTable* tp = table ? &*table : nullptr;
  const Modulus& q = ring.modulus;

  Polynomial u = sample_ternary(ring, gen);
  Polynomial e1 = sample_noise(ring, params.noise_stddev, gen);
  Polynomial e2 = sample_noise(ring, params.noise_stddev, gen);

  Polynomial c0 = polyring::poly_add(ring_mul_with(u, keys.pk.second, tp), e1);
  for (uint64_t i = 0; i < ring.n; ++i) {
    c0.coeffs[i] = mod_add(
        c0.coeffs[i], mod_mul_barrett(params.delta % q.q, m[i], q), q);
  }
  Polynomial c1 = polyring::poly_add(ring_mul_with(u, keys.pk.first, tp), e2);

  Ciphertext out;
  out.elements = {std::move(c0), std::move(c1)};
  return out;
}

std::vector<uint64_t> decrypt(const Ciphertext& c, const KeyMaterial& keys,
                              const SchemeParams& params) {
  if (c.elements.empty() || c.degree() > 2) {
    throw std::invalid_argument("decrypt handles degrees 0 through 2");
  }
  const RingParams& ring = params.ring;
  std::optional<ntt::TwiddleTable> table;
  if (ntt_friendly(ring)) {
    table = ntt::make_table(ring.n, ring.modulus);
  }
  const ntt::TwiddleTable* tp = table ? &*table : nullptr;

  Polynomial acc = c.elements[0];
  if (c.elements.size() >= 2) {
    acc = polyring::poly_add(acc, ring_mul_with(c.elements[1], keys.sk, tp));
  }
  if (c.elements.size() == 3) {
    Polynomial s2 = ring_mul_with(keys.sk, keys.sk, tp);
    acc = polyring::poly_add(acc, ring_mul_with(c.elements[2], s2, tp));
  }

  using u128 = unsigned __int128;
  const uint64_t q = ring.modulus.q;
  std::vector<uint64_t> m(ring.n);
  for (uint64_t i = 0; i < ring.n; ++i) {
    // round(t * x / q) = floor((2tx + q) / 2q); q odd prime, never a tie
    u128 num = static_cast<u128>(params.t) * acc.coeffs[i] * 2 + q;
    m[i] = static_cast<uint64_t>(num / (static_cast<u128>(q) * 2)) % params.t;
  }
  return m;
}

Ciphertext eval_add(const Ciphertext& c1, const Ciphertext& c2,
                    HeOpCounts* counts) {
  if (c1.elements.size() != c2.elements.size()) {
    throw std::invalid_argument("ciphertext degrees differ");
  }
  Ciphertext out;
  out.elements.reserve(c1.elements.size());
  for (size_t i = 0; i < c1.elements.size(); ++i) {
    out.elements.push_back(polyring::poly_add(c1.elements[i], c2.elements[i]));
  }
  if (counts) counts->poly_adds += c1.elements.size();
  return out;
}

Ciphertext eval_mult(const Ciphertext& c1, const Ciphertext& c2,
                     const SchemeParams& params, HeOpCounts* counts) {
  if (c1.degree() != 1 || c2.degree() != 1) {
    throw std::invalid_argument(
        "eval_mult expects two degree-1 ciphertexts; relinearize first");
  }
  AuxBasis aux = make_aux_basis(params.ring.n);

  rns::DcrtPolynomial a0 = lift_poly(c1.elements[0], aux.basis);
  rns::DcrtPolynomial a1 = lift_poly(c1.elements[1], aux.basis);
  rns::DcrtPolynomial b0 = lift_poly(c2.elements[0], aux.basis);
  rns::DcrtPolynomial b1 = lift_poly(c2.elements[1], aux.basis);

  rns::DcrtPolynomial d0 = rns::dcrt_mul(a0, b0, aux.tables);
  rns::DcrtPolynomial cross = rns::dcrt_add(
      rns::dcrt_mul(a0, b1, aux.tables), rns::dcrt_mul(a1, b0, aux.tables));
  rns::DcrtPolynomial d2 = rns::dcrt_mul(a1, b1, aux.tables);
  if (counts) {
    counts->poly_mults += 4;
    counts->poly_adds += 1;
  }

  Ciphertext out;
  out.elements.push_back(rescale_component(d0, aux.basis, params));
  out.elements.push_back(rescale_component(cross, aux.basis, params));
  out.elements.push_back(rescale_component(d2, aux.basis, params));
  return out;
}

Ciphertext relinearize(const Ciphertext& c, const KeyMaterial& keys,
                       const SchemeParams& params, HeOpCounts* counts) {
  if (c.degree() != 2) {
    throw std::invalid_argument("relinearize expects a degree-2 ciphertext");
  }
  const RingParams& ring = params.ring;
  std::optional<ntt::TwiddleTable> table;
  if (ntt_friendly(ring)) {
    table = ntt::make_table(ring.n, ring.modulus);
  }
  const ntt::TwiddleTable* tp = table ? &*table : nullptr;

  const uint64_t digits = params.digit_count();
  if (keys.ek.size() != digits) {
    throw std::invalid_argument("evaluation key does not cover the modulus");
  }
  const uint64_t base_bits = std::countr_zero(params.decomp_base);
  const uint64_t mask = params.decomp_base - 1;

  Polynomial out0 = c.elements[0];
  Polynomial out1 = c.elements[1];
  for (uint64_t i = 0; i < digits; ++i) {
    Polynomial digit(ring);
    for (uint64_t j = 0; j < ring.n; ++j) {
      digit.coeffs[j] = (c.elements[2].coeffs[j] >> (i * base_bits)) & mask;
    }
    out0 = polyring::poly_add(out0, ring_mul_with(digit, keys.ek[i].first, tp));
    out1 = polyring::poly_add(out1,
                              ring_mul_with(digit, keys.ek[i].second, tp));
    if (counts) {
      counts->poly_mults += 2;
      counts->poly_adds += 2;
    }
  }
  Ciphertext out;
  out.elements = {std::move(out0), std::move(out1)};
  return out;
}

Polynomial ring_mul(const Polynomial& p1, const Polynomial& p2) {
  if (!(p1.params == p2.params)) {
    throw std::invalid_argument("operands come from different rings");
  }
  std::optional<ntt::TwiddleTable> table;
  if (ntt_friendly(p1.params)) {
    table = ntt::make_table(p1.params.n, p1.params.modulus);
  }
  return ring_mul_with(p1, p2, table ? &*table : nullptr);
}

}  // namespace pimhe::hekernels
