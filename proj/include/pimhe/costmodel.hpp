#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pimhe/pimsim.hpp"

// Analytic CPU-vs-PIM time model. The PIM side reuses the simulator's
// transfer and launch formulas without executing any data, so model and
// simulator agree by construction; the CPU side is a roofline over op
// counts and DRAM bandwidth. Calibration constants are configuration, not
// measurements: the model is meant to reproduce orderings and shapes, not
// absolute wall-clock times.

namespace pimhe::costmodel {

enum class OpKind { Addition, CwMul, Convolution };

// Exact on-DPU-operations-per-copied-element ratio.
struct Rational {
  uint64_t num = 0;
  uint64_t den = 1;
  double value() const { return static_cast<double>(num) / den; }
};

struct CostParams {
  double cpu_freq_hz = 2.4e9;
  uint64_t cpu_threads = 16;
  uint64_t cpu_cycles_per_add = 1;
  uint64_t cpu_cycles_per_mul = 5;
  double dram_bandwidth_bytes_per_s = 20e9;
  pimsim::DpuSystemConfig dpu{.num_dpus = 1024};

  // Throws std::invalid_argument unless every rate and count is positive.
  void validate() const;
};

struct CostEstimate {
  double cpu_time_s = 0;
  double dpu_kernel_time_s = 0;  // includes launch overhead
  double host_dpu_time_s = 0;
  double dpu_host_time_s = 0;
  double alpha = 0;
  uint64_t host_dpu_bytes = 0;
  uint64_t dpu_host_bytes = 0;

  double dpu_total_s() const {
    return dpu_kernel_time_s + host_dpu_time_s + dpu_host_time_s;
  }
};

// Operations per copied element: 1/3 for the element-wise ops (n ops,
// 3n elements moved), (n^2 + (n-1)^2) / (3n) for convolution.
// Throws std::invalid_argument for n == 0.
Rational alpha_ratio(OpKind op, uint64_t n);

// Predicts one operation of size n. The DPU terms follow the simulator's
// formulas on the padded partition (sizes that do not divide the DPU/tasklet
// grid are modeled as padded up); degenerate parameters (zero bandwidth)
// yield infinite copy terms rather than errors.
CostEstimate estimate(OpKind op, uint64_t n, const CostParams& params);

// Smallest power-of-2 n in [2^4, 2^24] where the full PIM pipeline
// (kernel + both copy directions) beats the CPU; nullopt when the CPU wins
// across the whole range.
std::optional<uint64_t> crossover_n(OpKind op, const CostParams& params);

struct ValidationRow {
  uint64_t n = 0;
  CostEstimate model;
  pimsim::TransferLedger measured;
  double rel_error = 0;  // worst of the three time terms
  bool bytes_match = false;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  double max_rel_error = 0;
  bool all_bytes_match = true;
};

// Runs the simulator workflow at each size (padding forced on so every size
// is admissible) and compares its ledger against estimate(). Shared formulas
// mean the agreement should be exact; the report guards against drift.
// Throws std::invalid_argument on an empty size list.
ValidationReport validate_against_sim(OpKind op,
                                      const std::vector<uint64_t>& sizes,
                                      const CostParams& params);

}  // namespace pimhe::costmodel
