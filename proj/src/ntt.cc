#include "pimhe/ntt.hpp"

#include <bit>
#include <cassert>
#include <stdexcept>
#include <string>

namespace pimhe::ntt {

using modmath::mod_add;
using modmath::mod_inv;
using modmath::mod_mul_barrett;
using modmath::mod_pow;
using modmath::mod_sub;
using modmath::Modulus;
using polyring::Polynomial;

namespace {

uint64_t bitrev(uint64_t x, int bits) {
  uint64_t r = 0;
  for (int i = 0; i < bits; ++i) {
    r = (r << 1) | ((x >> i) & 1);
  }
  return r;
}

void check_compatible(const Polynomial& a, const TwiddleTable& t) {
  if (a.params.n != t.roots.n) {
    throw std::invalid_argument("polynomial dimension " +
                                std::to_string(a.params.n) +
                                " does not match table dimension " +
                                std::to_string(t.roots.n));
  }
  if (a.params.modulus.q != t.modulus.q) {
    throw std::invalid_argument("polynomial modulus does not match table");
  }
}

// Raw Cooley-Tukey network: natural order in, bit-reversed out. The stage
// with m blocks reads its twiddles at tab[m..2m).
void ct_kernel(std::vector<uint64_t>& a, const std::vector<uint64_t>& tab,
               const Modulus& q) {
  const uint64_t n = a.size();
  uint64_t t = n;
  for (uint64_t m = 1; m < n; m <<= 1) {
    t >>= 1;
    for (uint64_t i = 0; i < m; ++i) {
      const uint64_t w = tab[m + i];
      const uint64_t j0 = 2 * i * t;
      for (uint64_t j = j0; j < j0 + t; ++j) {
        const uint64_t u = a[j];
        const uint64_t v = mod_mul_barrett(a[j + t], w, q);
        a[j] = mod_add(u, v, q);
        a[j + t] = mod_sub(u, v, q);
      }
    }
  }
}

// Raw Gentleman-Sande network: bit-reversed in, natural out, with the 1/n
// scaling folded into the final stage.
void gs_kernel(std::vector<uint64_t>& a, const std::vector<uint64_t>& tab,
               uint64_t n_inv, const Modulus& q) {
  const uint64_t n = a.size();
  uint64_t t = 1;
  for (uint64_t m = n; m > 1; m >>= 1) {
    const uint64_t h = m >> 1;
    const bool last = (m == 2);
    for (uint64_t i = 0; i < h; ++i) {
      const uint64_t w = tab[h + i];
      const uint64_t j0 = 2 * i * t;
      for (uint64_t j = j0; j < j0 + t; ++j) {
        const uint64_t u = a[j];
        const uint64_t v = a[j + t];
        uint64_t s = mod_add(u, v, q);
        uint64_t d = mod_mul_barrett(mod_sub(u, v, q), w, q);
        if (last) {
          s = mod_mul_barrett(s, n_inv, q);
          d = mod_mul_barrett(d, n_inv, q);
        }
        a[j] = s;
        a[j + t] = d;
      }
    }
    t <<= 1;
  }
}

}  // namespace

TwiddleTable::TwiddleTable(const modmath::RootSet& rs, const Modulus& m)
    : roots(rs), modulus(m) {
  const uint64_t n = rs.n;
  if (n < 2 || !std::has_single_bit(n)) {
    throw std::invalid_argument("root set dimension must be a power of 2");
  }
  if (mod_mul_barrett(rs.psi, rs.psi, m) != rs.omega ||
      mod_pow(rs.psi, n, m) != m.q - 1 ||
      mod_mul_barrett(rs.psi, rs.psi_inv, m) != 1 ||
      mod_mul_barrett(rs.omega, rs.omega_inv, m) != 1 ||
      mod_mul_barrett(rs.n_inv, n % m.q, m) != 1) {
    throw std::invalid_argument("root set is inconsistent with modulus");
  }
  const int bits = std::countr_zero(n);

  forward_twiddles.resize(n);
  inverse_twiddles.resize(n);
  for (uint64_t i = 0; i < n; ++i) {
    const uint64_t e = bitrev(i, bits);
    forward_twiddles[i] = mod_pow(rs.psi, e, m);
    inverse_twiddles[i] = mod_pow(rs.psi_inv, e, m);
  }

  // Cyclic kernels reuse the same network; the stage with m blocks evaluates
  // sub-transforms of size n/m, so block i needs omega^((n/(2m))*bitrev(i)).
  cyclic_forward.assign(n, 1);
  cyclic_inverse.assign(n, 1);
  for (uint64_t blk = 1; blk < n; blk <<= 1) {
    const int blk_bits = std::countr_zero(blk);
    const uint64_t stride = n / (2 * blk);
    for (uint64_t i = 0; i < blk; ++i) {
      const uint64_t e = stride * bitrev(i, blk_bits);
      cyclic_forward[blk + i] = mod_pow(rs.omega, e, m);
      cyclic_inverse[blk + i] = mod_pow(rs.omega_inv, e, m);
    }
  }
}

TwiddleTable make_table(uint64_t n, const Modulus& m) {
  return TwiddleTable(modmath::find_roots(n, m), m);
}

std::pair<uint64_t, uint64_t> butterfly_ct(uint64_t u, uint64_t v, uint64_t w,
                                           const Modulus& m) {
  const uint64_t wv = mod_mul_barrett(v, w, m);
  return {mod_add(u, wv, m), mod_sub(u, wv, m)};
}

std::pair<uint64_t, uint64_t> butterfly_gs(uint64_t u, uint64_t v, uint64_t w,
                                           const Modulus& m) {
  return {mod_add(u, v, m), mod_mul_barrett(mod_sub(u, v, m), w, m)};
}

void forward_nwc_inplace(std::vector<uint64_t>& a, const TwiddleTable& t) {
  assert(a.size() == t.roots.n);
  ct_kernel(a, t.forward_twiddles, t.modulus);
}

void inverse_nwc_inplace(std::vector<uint64_t>& a, const TwiddleTable& t) {
  assert(a.size() == t.roots.n);
  gs_kernel(a, t.inverse_twiddles, t.roots.n_inv, t.modulus);
}

void forward_cyclic_inplace(std::vector<uint64_t>& a, const TwiddleTable& t) {
  assert(a.size() == t.roots.n);
  ct_kernel(a, t.cyclic_forward, t.modulus);
}

void inverse_cyclic_inplace(std::vector<uint64_t>& a, const TwiddleTable& t) {
  assert(a.size() == t.roots.n);
  gs_kernel(a, t.cyclic_inverse, t.roots.n_inv, t.modulus);
}

void bit_reverse_permute(std::vector<uint64_t>& a) {
  const int bits = std::countr_zero(a.size());
  for (uint64_t i = 0; i < a.size(); ++i) {
    const uint64_t j = bitrev(i, bits);
    if (i < j) std::swap(a[i], a[j]);
  }
}

Polynomial ntt_forward(const Polynomial& a, const TwiddleTable& t) {
  check_compatible(a, t);
  Polynomial out = a;
  forward_cyclic_inplace(out.coeffs, t);
  bit_reverse_permute(out.coeffs);
  return out;
}

Polynomial ntt_inverse(const Polynomial& a, const TwiddleTable& t) {
  check_compatible(a, t);
  Polynomial out = a;
  bit_reverse_permute(out.coeffs);
  inverse_cyclic_inplace(out.coeffs, t);
  return out;
}

Polynomial ntt_forward_nwc(const Polynomial& a, const TwiddleTable& t) {
  check_compatible(a, t);
  Polynomial out = a;
  forward_nwc_inplace(out.coeffs, t);
  bit_reverse_permute(out.coeffs);
  return out;
}

Polynomial ntt_inverse_nwc(const Polynomial& a, const TwiddleTable& t) {
  check_compatible(a, t);
  Polynomial out = a;
  bit_reverse_permute(out.coeffs);
  inverse_nwc_inplace(out.coeffs, t);
  return out;
}

Polynomial ct_iteration(const Polynomial& state, uint64_t stage,
                        const TwiddleTable& t) {
  check_compatible(state, t);
  const uint64_t n = state.params.n;
  const uint64_t log_n = std::countr_zero(n);
  if (stage >= log_n) {
    throw std::out_of_range("stage " + std::to_string(stage) +
                            " out of range for log2(n) = " +
                            std::to_string(log_n));
  }
  const Modulus& q = t.modulus;
  Polynomial out = state;
  auto& a = out.coeffs;
  const uint64_t m = 1ULL << stage;  // block count at this stage
  const uint64_t stride = n >> (stage + 1);
  for (uint64_t i = 0; i < m; ++i) {
    const uint64_t w = t.forward_twiddles[m + i];
    const uint64_t j0 = 2 * i * stride;
    for (uint64_t j = j0; j < j0 + stride; ++j) {
      auto [x, y] = butterfly_ct(a[j], a[j + stride], w, q);
      a[j] = x;
      a[j + stride] = y;
    }
  }
  return out;
}

Polynomial fast_negacyclic_mul(const Polynomial& p1, const Polynomial& p2,
                               const TwiddleTable& t) {
  check_compatible(p1, t);
  check_compatible(p2, t);
  const Modulus& q = t.modulus;
  std::vector<uint64_t> a = p1.coeffs;
  std::vector<uint64_t> b = p2.coeffs;
  forward_nwc_inplace(a, t);
  forward_nwc_inplace(b, t);
  for (uint64_t i = 0; i < a.size(); ++i) {
    a[i] = mod_mul_barrett(a[i], b[i], q);
  }
  inverse_nwc_inplace(a, t);
  Polynomial out(p1.params);
  out.coeffs = std::move(a);
  return out;
}

Polynomial fast_cyclic_mul(const Polynomial& p1, const Polynomial& p2,
                           const TwiddleTable& t) {
  check_compatible(p1, t);
  check_compatible(p2, t);
  const Modulus& q = t.modulus;
  std::vector<uint64_t> a = p1.coeffs;
  std::vector<uint64_t> b = p2.coeffs;
  forward_cyclic_inplace(a, t);
  forward_cyclic_inplace(b, t);
  for (uint64_t i = 0; i < a.size(); ++i) {
    a[i] = mod_mul_barrett(a[i], b[i], q);
  }
  inverse_cyclic_inplace(a, t);
  Polynomial out(p1.params);
  out.coeffs = std::move(a);
  return out;
}

}  // namespace pimhe::ntt
