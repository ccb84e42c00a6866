#include "pimhe/costmodel.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "pimhe/polyring.hpp"

namespace pimhe::costmodel {

namespace {

struct PimTerms {
  uint64_t num_dpus = 0;
  uint64_t per_dpu = 0;         // padded slice length, elements
  uint64_t in_transfers = 0;    // per-DPU copy calls, host to DPU
  uint64_t max_in_bytes = 0;    // largest per-DPU inbound payload
  uint64_t in_bytes = 0;        // total inbound
  uint64_t max_out_bytes = 0;
  uint64_t out_bytes = 0;
  uint64_t adds = 0;            // per-DPU kernel op counts
  uint64_t muls = 0;
};

// Mirrors plan_partition's padded geometry for 8-byte elements and the
// scatter/launch/gather accounting, without touching data.
PimTerms pim_terms(OpKind op, uint64_t n, const pimsim::DpuSystemConfig& d) {
  PimTerms t;
  t.num_dpus = d.num_dpus;
  const uint64_t unit = d.num_dpus * d.tasklets_per_dpu;
  const uint64_t padded = (n + unit - 1) / unit * unit;
  t.per_dpu = padded / d.num_dpus;
  const uint64_t nd = t.per_dpu;
  switch (op) {
    case OpKind::Addition:
    case OpKind::CwMul:
      t.in_transfers = 2 * d.num_dpus;
      t.max_in_bytes = 2 * nd * 8;
      t.in_bytes = 2 * padded * 8;
      t.max_out_bytes = nd * 8;
      t.out_bytes = padded * 8;
      t.adds = op == OpKind::Addition ? nd : 0;
      t.muls = op == OpKind::CwMul ? nd : 0;
      break;
    case OpKind::Convolution:
      // Operand a sliced, operand b broadcast whole; each DPU returns a
      // partial of length N_D + n - 1.
      t.in_transfers = 2 * d.num_dpus;
      t.max_in_bytes = nd * 8 + n * 8;
      t.in_bytes = padded * 8 + d.num_dpus * n * 8;
      t.max_out_bytes = (nd + n - 1) * 8;
      t.out_bytes = d.num_dpus * (nd + n - 1) * 8;
      t.adds = nd * n;
      t.muls = nd * n;
      break;
  }
  return t;
}

}  // namespace

void CostParams::validate() const {
  if (!(cpu_freq_hz > 0) || !(dram_bandwidth_bytes_per_s > 0))
    throw std::invalid_argument("CPU rates must be positive");
  if (cpu_threads == 0 || cpu_cycles_per_add == 0 || cpu_cycles_per_mul == 0)
    throw std::invalid_argument("CPU counts must be positive");
  dpu.validate();
}

Rational alpha_ratio(OpKind op, uint64_t n) {
  if (n == 0) throw std::invalid_argument("n must be positive");
  switch (op) {
    case OpKind::Addition:
    case OpKind::CwMul:
      return {1, 3};
    case OpKind::Convolution:
      return {n * n + (n - 1) * (n - 1), 3 * n};
  }
  throw std::invalid_argument("unknown operation kind");
}

CostEstimate estimate(OpKind op, uint64_t n, const CostParams& params) {
  if (n == 0) throw std::invalid_argument("n must be positive");
  CostEstimate est;
  est.alpha = alpha_ratio(op, n).value();

  // CPU side: thread-parallel op throughput with a DRAM-bandwidth floor.
  uint64_t cpu_adds = 0, cpu_muls = 0, cpu_bytes = 0;
  switch (op) {
    case OpKind::Addition:
      cpu_adds = n;
      cpu_bytes = 3 * n * 8;
      break;
    case OpKind::CwMul:
      cpu_muls = n;
      cpu_bytes = 3 * n * 8;
      break;
    case OpKind::Convolution:
      cpu_muls = n * n;
      cpu_adds = (n - 1) * (n - 1);
      cpu_bytes = (2 * n + 2 * n - 1) * 8;
      break;
  }
  const double cpu_cycles =
      static_cast<double>(cpu_adds) * params.cpu_cycles_per_add +
      static_cast<double>(cpu_muls) * params.cpu_cycles_per_mul;
  est.cpu_time_s =
      std::max(cpu_cycles / (params.cpu_freq_hz * params.cpu_threads),
               static_cast<double>(cpu_bytes) /
                   params.dram_bandwidth_bytes_per_s);

  // DPU side: the simulator's own accounting, evaluated symbolically.
  const auto& d = params.dpu;
  const PimTerms t = pim_terms(op, n, d);
  est.host_dpu_bytes = t.in_bytes;
  est.dpu_host_bytes = t.out_bytes;
  est.host_dpu_time_s = d.per_transfer_latency_s * t.in_transfers +
                        static_cast<double>(t.max_in_bytes) /
                            d.per_dpu_bandwidth_bytes_per_s;
  est.dpu_host_time_s = d.per_transfer_latency_s * t.num_dpus +
                        static_cast<double>(t.max_out_bytes) /
                            d.per_dpu_bandwidth_bytes_per_s;
  const double cycles = static_cast<double>(t.adds) * d.add_cycle_cost +
                        static_cast<double>(t.muls) * d.mul_cycle_cost;
  const double pipeline =
      std::max(1.0, 11.0 / static_cast<double>(d.tasklets_per_dpu));
  est.dpu_kernel_time_s =
      d.launch_overhead_s + cycles * pipeline / d.dpu_freq_hz;
  return est;
}

std::optional<uint64_t> crossover_n(OpKind op, const CostParams& params) {
  for (int log_n = 4; log_n <= 24; ++log_n) {
    const uint64_t n = 1ULL << log_n;
    const CostEstimate est = estimate(op, n, params);
    if (est.dpu_total_s() < est.cpu_time_s) return n;
  }
  return std::nullopt;
}

ValidationReport validate_against_sim(OpKind op,
                                      const std::vector<uint64_t>& sizes,
                                      const CostParams& params) {
  if (sizes.empty()) throw std::invalid_argument("no sizes to validate");
  params.validate();

  auto cfg = params.dpu;
  cfg.allow_padding = true;  // admit sizes off the DPU/tasklet grid

  // Ledger accounting is data-independent; any in-range operands work.
  const modmath::Modulus q(65537);
  ValidationReport report;
  for (uint64_t n : sizes) {
    std::mt19937_64 gen(n);
    std::vector<uint64_t> a(n), b(n);
    for (auto& w : a) w = polyring::uniform_residue(gen, q.q);
    for (auto& w : b) w = polyring::uniform_residue(gen, q.q);

    pimsim::DpuKernel kernel = op == OpKind::Addition
                                   ? pimsim::DpuKernel::poly_add(q)
                               : op == OpKind::CwMul
                                   ? pimsim::DpuKernel::cw_mul(q)
                                   : pimsim::DpuKernel::convolution(q);
    auto run = pimsim::run_workflow(kernel, {a, b, {}}, cfg);

    ValidationRow row;
    row.n = n;
    row.model = estimate(op, n, params);
    row.measured = run.ledger;
    auto rel = [](double model, double sim) {
      const double denom = std::max(std::abs(sim), 1e-300);
      return std::abs(model - sim) / denom;
    };
    row.rel_error =
        std::max({rel(row.model.dpu_kernel_time_s, run.ledger.kernel_time),
                  rel(row.model.host_dpu_time_s, run.ledger.host_dpu_time),
                  rel(row.model.dpu_host_time_s, run.ledger.dpu_host_time)});
    row.bytes_match = row.model.host_dpu_bytes == run.ledger.host_dpu_bytes &&
                      row.model.dpu_host_bytes == run.ledger.dpu_host_bytes;
    report.max_rel_error = std::max(report.max_rel_error, row.rel_error);
    report.all_bytes_match = report.all_bytes_match && row.bytes_match;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace pimhe::costmodel
