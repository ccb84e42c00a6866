#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pimhe/modmath.hpp"
#include "pimhe/polyring.hpp"

// Number theoretic transforms over Z_q: the cyclic transform evaluating at
// powers of omega and the negacyclic (negative wrapped convolution) variant
// evaluating with powers of psi, plus O(n log n) ring multiplication through
// the convolution theorem.
//
// Kernel ordering convention: the Cooley-Tukey butterfly network consumes
// natural order and emits bit-reversed order; Gentleman-Sande consumes
// bit-reversed and emits natural. The public transforms below return natural
// order (they match the direct sums exactly); the fast multiplication path
// composes the raw kernels and never materializes a permutation.

namespace pimhe::ntt {

// Per-(n, q) precomputed twiddles, immutable after construction and safe to
// share across threads. forward_twiddles[i] = psi^bitrev(i), length n;
// inverse_twiddles[i] = psi^-bitrev(i). The cyclic tables hold the omega
// powers the cyclic kernels consume, laid out per stage block.
struct TwiddleTable {
  modmath::RootSet roots;
  modmath::Modulus modulus;
  std::vector<uint64_t> forward_twiddles;
  std::vector<uint64_t> inverse_twiddles;
  std::vector<uint64_t> cyclic_forward;
  std::vector<uint64_t> cyclic_inverse;

  TwiddleTable() = default;
  // Throws std::invalid_argument if the root set is inconsistent with m.
  TwiddleTable(const modmath::RootSet& roots, const modmath::Modulus& m);
};

// Builds the table from find_roots(n, m).
TwiddleTable make_table(uint64_t n, const modmath::Modulus& m);

// (u + w*v, u - w*v) mod q: Cooley-Tukey decimation-in-time butterfly.
std::pair<uint64_t, uint64_t> butterfly_ct(uint64_t u, uint64_t v, uint64_t w,
                                           const modmath::Modulus& m);

// (u + v, (u - v)*w) mod q: Gentleman-Sande decimation-in-frequency
// butterfly.
std::pair<uint64_t, uint64_t> butterfly_gs(uint64_t u, uint64_t v, uint64_t w,
                                           const modmath::Modulus& m);

// Cyclic transform: output_j = sum_i omega^(i*j) * a_i mod q, natural order.
// Throws std::invalid_argument on dimension or modulus mismatch.
polyring::Polynomial ntt_forward(const polyring::Polynomial& a,
                                 const TwiddleTable& t);

// Exact inverse of ntt_forward: a_i = n_inv * sum_j omega^(-i*j) * in_j.
polyring::Polynomial ntt_inverse(const polyring::Polynomial& a,
                                 const TwiddleTable& t);

// Negacyclic transform: output_j = sum_i psi^(2*i*j + i) * a_i mod q,
// natural order; no zero padding.
polyring::Polynomial ntt_forward_nwc(const polyring::Polynomial& a,
                                     const TwiddleTable& t);

// Exact inverse of ntt_forward_nwc.
polyring::Polynomial ntt_inverse_nwc(const polyring::Polynomial& a,
                                     const TwiddleTable& t);

// One Cooley-Tukey stage of the negacyclic kernel: exactly n/2 butterflies,
// stride halving with the stage index. Composing stages 0..log2(n)-1 yields
// ntt_forward_nwc in bit-reversed order. Throws std::out_of_range for
// stage >= log2(n).
polyring::Polynomial ct_iteration(const polyring::Polynomial& state,
                                  uint64_t stage, const TwiddleTable& t);

// reduce_negacyclic(schoolbook_convolution(p1, p2)) computed in O(n log n):
// CT kernels, pointwise product, GS kernel. Bit-exact with the naive path.
polyring::Polynomial fast_negacyclic_mul(const polyring::Polynomial& p1,
                                         const polyring::Polynomial& p2,
                                         const TwiddleTable& t);

// reduce_cyclic(schoolbook_convolution(p1, p2)) in O(n log n).
polyring::Polynomial fast_cyclic_mul(const polyring::Polynomial& p1,
                                     const polyring::Polynomial& p2,
                                     const TwiddleTable& t);

// In-place raw kernels operating on bare coefficient vectors. These are what
// the simulator stages: forward leaves bit-reversed order, inverse expects
// it. size must equal roots.n.
void forward_nwc_inplace(std::vector<uint64_t>& a, const TwiddleTable& t);
void inverse_nwc_inplace(std::vector<uint64_t>& a, const TwiddleTable& t);
void forward_cyclic_inplace(std::vector<uint64_t>& a, const TwiddleTable& t);
void inverse_cyclic_inplace(std::vector<uint64_t>& a, const TwiddleTable& t);

// Bit-reversal permutation on a power-of-2-length vector.
void bit_reverse_permute(std::vector<uint64_t>& a);

}  // namespace pimhe::ntt
