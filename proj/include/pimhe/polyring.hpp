#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pimhe/modmath.hpp"

// Polynomials over Z_q[x] reduced by x^n+1 (negacyclic) or x^n-1 (cyclic),
// plus the naive O(n^2) convolution baseline with instrumented op counts.
//
// Coefficients are stored little-endian by degree: index k holds the
// coefficient of x^k.

namespace pimhe::polyring {

enum class Reduction { NegacyclicXnPlus1, CyclicXnMinus1 };

struct RingParams {
  uint64_t n = 0;  // power of 2, >= 2
  modmath::Modulus modulus;
  Reduction reduction = Reduction::NegacyclicXnPlus1;

  RingParams() = default;
  // Throws std::invalid_argument unless n is a power of 2 with n >= 2.
  RingParams(uint64_t n_in, modmath::Modulus mod,
             Reduction red = Reduction::NegacyclicXnPlus1);

  bool operator==(const RingParams&) const = default;
};

struct Polynomial {
  std::vector<uint64_t> coeffs;  // length params.n, entries in [0, q)
  RingParams params;

  Polynomial() = default;
  explicit Polynomial(const RingParams& p)
      : coeffs(p.n, 0), params(p) {}
  Polynomial(std::vector<uint64_t> c, const RingParams& p);

  bool operator==(const Polynomial&) const = default;
};

// Full product of two degree-(n-1) polynomials, length 2n-1, before any
// quotient-ring reduction.
struct ConvolutionResult {
  std::vector<uint64_t> coeffs;
};

// Exact modular operation counts accumulated by one call; never shared
// between calls.
struct OpCounts {
  uint64_t additions = 0;
  uint64_t multiplications = 0;
};

// Coefficient-wise sum; exactly n modular additions.
// Throws std::invalid_argument on mismatched RingParams.
Polynomial poly_add(const Polynomial& p1, const Polynomial& p2,
                    OpCounts* counts = nullptr);

// Coefficient-wise (Hadamard) product; exactly n modular multiplications.
// Throws std::invalid_argument on mismatched RingParams.
Polynomial cw_mul(const Polynomial& p1, const Polynomial& p2,
                  OpCounts* counts = nullptr);

// c_k = sum_{i+j=k} a_i * b_j mod q for k in [0, 2n-2]; counts exactly n^2
// multiplications and (n-1)^2 additions.
// Throws std::invalid_argument on mismatched RingParams.
ConvolutionResult schoolbook_convolution(const Polynomial& p1,
                                         const Polynomial& p2,
                                         OpCounts* counts = nullptr);

// Folds x^n = -1: result_k = c_k - c_{k+n}, missing high terms read as 0.
Polynomial reduce_negacyclic(const ConvolutionResult& c,
                             const RingParams& params);

// Folds x^n = 1: result_k = c_k + c_{k+n}.
Polynomial reduce_cyclic(const ConvolutionResult& c, const RingParams& params);

// Uniform coefficients in [0, q), deterministic per seed. Draws come from
// mt19937_64 with explicit rejection sampling so the stream is identical
// across platforms and standard libraries.
Polynomial random_poly(const RingParams& params, uint64_t seed);

// One unbiased draw from [0, q) off the given generator; the rejection
// sampling primitive behind random_poly, shared so every module consumes
// the same portable stream.
uint64_t uniform_residue(std::mt19937_64& gen, uint64_t q);

}  // namespace pimhe::polyring
