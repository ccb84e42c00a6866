#include "pimhe/pimsim.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>

#include "pimhe/ntt.hpp"

namespace pimhe::pimsim {

namespace {

constexpr uint64_t kAlign = 8;
// Tasklets stream WRAM-sized chunks; this is the per-element working-set
// footprint (inputs, output, scratch) a chunk must hold at minimum.
uint64_t working_set_bytes(KernelKind kind) {
  switch (kind) {
    case KernelKind::PolyAdd:
    case KernelKind::CwMul:
    case KernelKind::Convolution:
      return 24;  // two operand words + one accumulator/output word
    case KernelKind::ButterflyStage:
      return 40;  // pair in, twiddle, pair out
  }
  return 24;
}

uint64_t round_up(uint64_t x, uint64_t unit) {
  return (x + unit - 1) / unit * unit;
}

bool is_pow2(uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

}  // namespace

void DpuSystemConfig::validate() const {
  if (num_dpus == 0) throw std::invalid_argument("num_dpus must be positive");
  if (tasklets_per_dpu < 1 || tasklets_per_dpu > 24)
    throw std::invalid_argument("tasklets_per_dpu must be in [1, 24]");
  if (mram_bytes == 0 || wram_bytes == 0)
    throw std::invalid_argument("memory capacities must be positive");
  if (!(dpu_freq_hz > 0) || !(per_dpu_bandwidth_bytes_per_s > 0))
    throw std::invalid_argument("frequency and bandwidth must be positive");
  if (per_transfer_latency_s < 0 || launch_overhead_s < 0)
    throw std::invalid_argument("latencies must be non-negative");
  if (mul_cycle_cost == 0 || add_cycle_cost == 0)
    throw std::invalid_argument("cycle costs must be positive");
}

std::vector<std::string> config_warnings(const DpuSystemConfig& cfg) {
  cfg.validate();
  std::vector<std::string> notes;
  if (cfg.tasklets_per_dpu < 11) {
    notes.push_back("tasklets_per_dpu=" + std::to_string(cfg.tasklets_per_dpu) +
                    " cannot fill the 11-stage pipeline; use at least 11");
  }
  return notes;
}

PartitionPlan plan_partition(uint64_t total, const DpuSystemConfig& cfg,
                             uint64_t element_bytes) {
  cfg.validate();
  if (total == 0) throw std::invalid_argument("nothing to partition");
  if (element_bytes == 0)
    throw std::invalid_argument("element_bytes must be positive");

  const uint64_t n_dpus = cfg.num_dpus;
  const uint64_t n_task = cfg.tasklets_per_dpu;
  // Elements per 8-byte grain: tasklet extents must land on the DMA
  // alignment boundary.
  const uint64_t grain = kAlign / std::gcd(element_bytes, kAlign);

  uint64_t padded = total;
  if (cfg.allow_padding) {
    padded = round_up(total, n_dpus * n_task * grain);
  } else {
    if (total % n_dpus != 0)
      throw IndivisibleError("total " + std::to_string(total) +
                             " not divisible by " + std::to_string(n_dpus) +
                             " DPUs");
    if ((total / n_dpus) % n_task != 0)
      throw IndivisibleError("per-DPU count " + std::to_string(total / n_dpus) +
                             " not divisible by " + std::to_string(n_task) +
                             " tasklets");
    if ((total / n_dpus / n_task) * element_bytes % kAlign != 0)
      throw AlignmentError("per-tasklet extent of " +
                           std::to_string(total / n_dpus / n_task *
                                          element_bytes) +
                           " bytes is not 8-byte aligned");
  }

  PartitionPlan plan;
  plan.total_elements = padded;
  plan.logical_elements = total;
  plan.per_dpu = padded / n_dpus;
  plan.per_tasklet = plan.per_dpu / n_task;
  plan.element_bytes = element_bytes;
  plan.num_dpus = n_dpus;
  plan.tasklets = n_task;

  if (plan.per_dpu * element_bytes > cfg.mram_bytes)
    throw MramOverflow("per-DPU slice of " +
                       std::to_string(plan.per_dpu * element_bytes) +
                       " bytes exceeds MRAM capacity of " +
                       std::to_string(cfg.mram_bytes));

  plan.ranges.resize(n_dpus);
  for (uint64_t i = 0; i < n_dpus; ++i) {
    plan.ranges[i].resize(n_task);
    for (uint64_t j = 0; j < n_task; ++j) {
      const uint64_t start = i * plan.per_dpu + j * plan.per_tasklet;
      plan.ranges[i][j] = {start, start + plan.per_tasklet - 1};
    }
  }
  return plan;
}

DpuKernel DpuKernel::poly_add(const modmath::Modulus& m) {
  return DpuKernel{KernelKind::PolyAdd, m, 0};
}
DpuKernel DpuKernel::cw_mul(const modmath::Modulus& m) {
  return DpuKernel{KernelKind::CwMul, m, 0};
}
DpuKernel DpuKernel::convolution(const modmath::Modulus& m) {
  return DpuKernel{KernelKind::Convolution, m, 0};
}
DpuKernel DpuKernel::butterfly_stage(const modmath::Modulus& m,
                                     uint64_t stage) {
  return DpuKernel{KernelKind::ButterflyStage, m, stage};
}

DpuSystem::DpuSystem(const DpuSystemConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  mram_.resize(cfg_.num_dpus);
  cursor_.assign(cfg_.num_dpus, 0);
}

void DpuSystem::write_mram(uint64_t dpu, uint64_t offset, const uint8_t* data,
                           uint64_t size) {
  if (dpu >= cfg_.num_dpus) throw std::invalid_argument("DPU index o.o.r.");
  if (offset % kAlign != 0 || size % kAlign != 0)
    throw AlignmentError("MRAM write at offset " + std::to_string(offset) +
                         " size " + std::to_string(size) +
                         " is not 8-byte aligned");
  if (offset + size > cfg_.mram_bytes)
    throw MramOverflow("MRAM write past capacity: offset " +
                       std::to_string(offset) + " + " + std::to_string(size));
  auto& m = mram_[dpu];
  if (m.size() < offset + size) m.resize(offset + size, 0);
  std::memcpy(m.data() + offset, data, size);
}

std::vector<uint8_t> DpuSystem::read_mram(uint64_t dpu, uint64_t offset,
                                          uint64_t size) const {
  if (dpu >= cfg_.num_dpus) throw std::invalid_argument("DPU index o.o.r.");
  if (offset % kAlign != 0 || size % kAlign != 0)
    throw AlignmentError("MRAM read at offset " + std::to_string(offset) +
                         " size " + std::to_string(size) +
                         " is not 8-byte aligned");
  if (offset + size > cfg_.mram_bytes)
    throw MramOverflow("MRAM read past capacity: offset " +
                       std::to_string(offset) + " + " + std::to_string(size));
  std::vector<uint8_t> out(size, 0);
  const auto& m = mram_[dpu];
  if (offset < m.size()) {
    const uint64_t have = std::min<uint64_t>(size, m.size() - offset);
    std::memcpy(out.data(), m.data() + offset, have);
  }
  return out;
}

std::vector<uint64_t> DpuSystem::read_words(uint64_t dpu,
                                            const Region& r) const {
  std::vector<uint8_t> raw = read_mram(dpu, r.offset, r.words * 8);
  std::vector<uint64_t> words(r.words);
  std::memcpy(words.data(), raw.data(), raw.size());
  return words;
}

uint64_t DpuSystem::alloc_region(uint64_t dpu, uint64_t bytes) {
  const uint64_t offset = cursor_[dpu];
  if (offset + bytes > cfg_.mram_bytes)
    throw MramOverflow("MRAM allocation of " + std::to_string(bytes) +
                       " bytes at offset " + std::to_string(offset) +
                       " exceeds capacity");
  cursor_[dpu] = offset + round_up(bytes, kAlign);
  return offset;
}

void scatter(DpuSystem& sys, const PartitionPlan& plan,
             const std::vector<ScatterSpec>& buffers, TransferLedger& ledger) {
  if (plan.num_dpus != sys.cfg_.num_dpus)
    throw std::invalid_argument("plan was made for a different DPU count");
  if (buffers.empty()) throw std::invalid_argument("nothing to scatter");

  // A scatter begins a new run; prior regions and outputs are dropped.
  sys.cursor_.assign(sys.cfg_.num_dpus, 0);
  for (auto& m : sys.mram_) m.clear();
  sys.inputs_.clear();
  sys.output_ = DpuSystem::Region{};
  sys.phase_ = DpuSystem::Phase::Idle;

  uint64_t num_transfers = 0;
  uint64_t max_dpu_bytes = 0;
  std::vector<uint64_t> dpu_bytes(sys.cfg_.num_dpus, 0);

  for (const ScatterSpec& spec : buffers) {
    if (spec.words_per_element == 0)
      throw std::invalid_argument("words_per_element must be positive");
    DpuSystem::Region region;
    region.words_per_element = spec.words_per_element;
    region.broadcast = spec.broadcast;
    if (spec.broadcast) {
      region.words = spec.data.size();
      if (region.words == 0)
        throw std::invalid_argument("empty broadcast buffer");
      const uint64_t bytes = round_up(region.words * 8, kAlign);
      std::vector<uint8_t> payload(bytes, 0);
      std::memcpy(payload.data(), spec.data.data(), region.words * 8);
      uint64_t offset = 0;
      for (uint64_t i = 0; i < sys.cfg_.num_dpus; ++i) {
        offset = sys.alloc_region(i, bytes);
        sys.write_mram(i, offset, payload.data(), bytes);
        ledger.host_dpu_bytes += bytes;
        dpu_bytes[i] += bytes;
        ++num_transfers;
      }
      region.offset = offset;
    } else {
      const uint64_t wpe = spec.words_per_element;
      if (spec.data.size() != plan.logical_elements * wpe)
        throw std::invalid_argument(
            "sliced buffer length does not match the plan");
      region.words = plan.per_dpu * wpe;
      std::vector<uint64_t> padded(plan.total_elements * wpe, 0);
      std::copy(spec.data.begin(), spec.data.end(), padded.begin());
      const uint64_t bytes = region.words * 8;
      uint64_t offset = 0;
      for (uint64_t i = 0; i < sys.cfg_.num_dpus; ++i) {
        offset = sys.alloc_region(i, bytes);
        sys.write_mram(
            i, offset,
            reinterpret_cast<const uint8_t*>(padded.data() + i * region.words),
            bytes);
        ledger.host_dpu_bytes += bytes;
        dpu_bytes[i] += bytes;
        ++num_transfers;
      }
      region.offset = offset;
    }
    sys.inputs_.push_back(region);
  }

  max_dpu_bytes = *std::max_element(dpu_bytes.begin(), dpu_bytes.end());
  ledger.host_dpu_time += sys.cfg_.per_transfer_latency_s * num_transfers +
                          static_cast<double>(max_dpu_bytes) /
                              sys.cfg_.per_dpu_bandwidth_bytes_per_s;
  sys.phase_ = DpuSystem::Phase::Scattered;
}

void launch(DpuSystem& sys, const DpuKernel& kernel, const PartitionPlan& plan,
            TransferLedger& ledger) {
  if (sys.phase_ == DpuSystem::Phase::Idle)
    throw UnloadedData("launch before scatter");
  if (plan.num_dpus != sys.cfg_.num_dpus)
    throw std::invalid_argument("plan was made for a different DPU count");

  const uint64_t ws = working_set_bytes(kernel.kind);
  if (sys.cfg_.wram_bytes / sys.cfg_.tasklets_per_dpu < ws)
    throw KernelPanic("per-tasklet WRAM share of " +
                      std::to_string(sys.cfg_.wram_bytes /
                                     sys.cfg_.tasklets_per_dpu) +
                      " bytes cannot stage a " + std::to_string(ws) +
                      " byte working set");

  // Region-shape validation per kernel kind.
  const auto& in = sys.inputs_;
  auto expect = [&](bool ok) {
    if (!ok)
      throw std::invalid_argument("scattered operands do not match the kernel");
  };
  const uint64_t nd = plan.per_dpu;
  uint64_t out_words = 0;
  switch (kernel.kind) {
    case KernelKind::PolyAdd:
    case KernelKind::CwMul:
      expect(in.size() == 2 && !in[0].broadcast && !in[1].broadcast &&
             in[0].words_per_element == 1 && in[1].words_per_element == 1 &&
             in[0].words == nd && in[1].words == nd);
      out_words = nd;
      break;
    case KernelKind::Convolution:
      expect(in.size() == 2 && !in[0].broadcast && in[1].broadcast &&
             in[0].words_per_element == 1 && in[0].words == nd &&
             in[1].words >= 1);
      out_words = nd + in[1].words - 1;
      break;
    case KernelKind::ButterflyStage:
      expect(in.size() == 2 && !in[0].broadcast && !in[1].broadcast &&
             in[0].words_per_element == 2 && in[1].words_per_element == 1 &&
             in[0].words == 2 * nd && in[1].words == nd);
      out_words = 2 * nd;
      break;
  }

  // Output region sits at a fixed spot after the inputs; a repeated launch
  // overwrites it rather than leaking MRAM.
  uint64_t out_offset = 0;
  const uint64_t out_bytes = round_up(out_words * 8, kAlign);
  std::vector<uint64_t> out_offsets(sys.cfg_.num_dpus);
  std::vector<uint64_t> saved_cursor = sys.cursor_;
  for (uint64_t i = 0; i < sys.cfg_.num_dpus; ++i) {
    out_offsets[i] = sys.alloc_region(i, out_bytes);
    out_offset = out_offsets[i];
  }
  sys.cursor_ = saved_cursor;  // keep the allocator at the post-input mark

  const modmath::Modulus& m = kernel.modulus;
  uint64_t adds = 0, muls = 0;  // per DPU; slices are equal-sized (SPMD)
  for (uint64_t i = 0; i < sys.cfg_.num_dpus; ++i) {
    std::vector<uint64_t> out(out_words, 0);
    switch (kernel.kind) {
      case KernelKind::PolyAdd: {
        auto a = sys.read_words(i, in[0]);
        auto b = sys.read_words(i, in[1]);
        for (uint64_t k = 0; k < nd; ++k) out[k] = modmath::mod_add(a[k], b[k], m);
        adds = nd;
        break;
      }
      case KernelKind::CwMul: {
        auto a = sys.read_words(i, in[0]);
        auto b = sys.read_words(i, in[1]);
        for (uint64_t k = 0; k < nd; ++k)
          out[k] = modmath::mod_mul_barrett(a[k], b[k], m);
        muls = nd;
        break;
      }
      case KernelKind::Convolution: {
        auto a = sys.read_words(i, in[0]);
        auto b = sys.read_words(i, in[1]);
        const uint64_t nb = in[1].words;
        for (uint64_t k = 0; k < nd; ++k) {
          for (uint64_t l = 0; l < nb; ++l) {
            const uint64_t p = modmath::mod_mul_barrett(a[k], b[l], m);
            out[k + l] = modmath::mod_add(out[k + l], p, m);
          }
        }
        muls = nd * nb;
        adds = nd * nb;  // accumulate into the running partial
        break;
      }
      case KernelKind::ButterflyStage: {
        auto pairs = sys.read_words(i, in[0]);
        auto tw = sys.read_words(i, in[1]);
        for (uint64_t g = 0; g < nd; ++g) {
          auto [u, v] = ntt::butterfly_ct(pairs[2 * g], pairs[2 * g + 1],
                                          tw[g], m);
          out[2 * g] = u;
          out[2 * g + 1] = v;
        }
        muls = nd;
        adds = 2 * nd;
        break;
      }
    }
    std::vector<uint8_t> raw(out_bytes, 0);
    std::memcpy(raw.data(), out.data(), out_words * 8);
    sys.write_mram(i, out_offsets[i], raw.data(), out_bytes);
  }

  sys.output_ =
      DpuSystem::Region{out_offset, out_words, 1, false};

  const double cycles =
      static_cast<double>(adds) * sys.cfg_.add_cycle_cost +
      static_cast<double>(muls) * sys.cfg_.mul_cycle_cost;
  // Below 11 tasklets the pipeline cannot issue back to back; throughput
  // degrades linearly.
  const double pipeline =
      std::max(1.0, 11.0 / static_cast<double>(sys.cfg_.tasklets_per_dpu));
  ledger.kernel_time +=
      sys.cfg_.launch_overhead_s + cycles * pipeline / sys.cfg_.dpu_freq_hz;
  ledger.launches += 1;
  sys.phase_ = DpuSystem::Phase::Launched;
}

std::vector<uint64_t> gather(DpuSystem& sys, const PartitionPlan& plan,
                             TransferLedger& ledger) {
  if (sys.phase_ != DpuSystem::Phase::Launched)
    throw UnloadedData("gather before launch");
  if (plan.num_dpus != sys.cfg_.num_dpus)
    throw std::invalid_argument("plan was made for a different DPU count");

  std::vector<uint64_t> out;
  out.reserve(sys.output_.words * sys.cfg_.num_dpus);
  uint64_t max_dpu_bytes = 0;
  for (uint64_t i = 0; i < sys.cfg_.num_dpus; ++i) {
    auto words = sys.read_words(i, sys.output_);
    out.insert(out.end(), words.begin(), words.end());
    const uint64_t bytes = sys.output_.words * 8;
    ledger.dpu_host_bytes += bytes;
    max_dpu_bytes = std::max(max_dpu_bytes, bytes);
  }
  ledger.dpu_host_time +=
      sys.cfg_.per_transfer_latency_s * sys.cfg_.num_dpus +
      static_cast<double>(max_dpu_bytes) /
          sys.cfg_.per_dpu_bandwidth_bytes_per_s;
  return out;
}

StageBuffers make_stage_buffers(const std::vector<uint64_t>& state,
                                uint64_t stage,
                                const std::vector<uint64_t>& twiddle_table) {
  const uint64_t n = state.size();
  if (!is_pow2(n) || n < 2)
    throw std::invalid_argument("state length must be a power of two >= 2");
  if (twiddle_table.size() != n)
    throw std::invalid_argument("twiddle table length must equal n");
  const uint64_t log_n = static_cast<uint64_t>(std::countr_zero(n));
  if (stage >= log_n) throw std::out_of_range("stage index out of range");

  const uint64_t blocks = 1ULL << stage;  // m
  const uint64_t t = n >> (stage + 1);    // butterfly stride
  StageBuffers out;
  out.pairs.resize(n);
  out.twiddles.resize(n / 2);
  for (uint64_t g = 0; g < n / 2; ++g) {
    const uint64_t block = g / t;
    const uint64_t r = g % t;
    const uint64_t u_pos = 2 * block * t + r;
    out.pairs[2 * g] = state[u_pos];
    out.pairs[2 * g + 1] = state[u_pos + t];
    out.twiddles[g] = twiddle_table[blocks + block];
  }
  return out;
}

void apply_stage_pairs(std::vector<uint64_t>& state,
                       const std::vector<uint64_t>& pairs, uint64_t stage) {
  const uint64_t n = state.size();
  if (!is_pow2(n) || n < 2)
    throw std::invalid_argument("state length must be a power of two >= 2");
  if (pairs.size() < n) throw std::invalid_argument("pairs buffer too short");
  const uint64_t log_n = static_cast<uint64_t>(std::countr_zero(n));
  if (stage >= log_n) throw std::out_of_range("stage index out of range");

  const uint64_t t = n >> (stage + 1);
  for (uint64_t g = 0; g < n / 2; ++g) {
    const uint64_t block = g / t;
    const uint64_t r = g % t;
    const uint64_t u_pos = 2 * block * t + r;
    state[u_pos] = pairs[2 * g];
    state[u_pos + t] = pairs[2 * g + 1];
  }
}

WorkflowResult run_workflow(const DpuKernel& kernel,
                            const WorkflowInput& inputs,
                            const DpuSystemConfig& cfg) {
  cfg.validate();
  WorkflowResult res;
  DpuSystem sys(cfg);

  switch (kernel.kind) {
    case KernelKind::PolyAdd:
    case KernelKind::CwMul: {
      const uint64_t n = inputs.a.size();
      if (n == 0 || inputs.b.size() != n)
        throw std::invalid_argument("operands must be equal-length, non-empty");
      PartitionPlan plan = plan_partition(n, cfg, 8);
      scatter(sys, plan,
              {ScatterSpec{inputs.a, 1, false}, ScatterSpec{inputs.b, 1, false}},
              res.ledger);
      launch(sys, kernel, plan, res.ledger);
      std::vector<uint64_t> full = gather(sys, plan, res.ledger);
      res.result.assign(full.begin(), full.begin() + n);
      break;
    }
    case KernelKind::Convolution: {
      const uint64_t n = inputs.a.size();
      const uint64_t nb = inputs.b.size();
      if (n == 0 || nb == 0)
        throw std::invalid_argument("operands must be non-empty");
      PartitionPlan plan = plan_partition(n, cfg, 8);
      scatter(sys, plan,
              {ScatterSpec{inputs.a, 1, false}, ScatterSpec{inputs.b, 1, true}},
              res.ledger);
      launch(sys, kernel, plan, res.ledger);
      std::vector<uint64_t> partials = gather(sys, plan, res.ledger);
      // Partial i covers output range [i*N_D, i*N_D + N_D + nb - 2]; the
      // host folds the overlaps back together.
      const uint64_t part_len = plan.per_dpu + nb - 1;
      res.result.assign(n + nb - 1, 0);
      for (uint64_t i = 0; i < plan.num_dpus; ++i) {
        const uint64_t base = i * plan.per_dpu;
        for (uint64_t k = 0; k < part_len; ++k) {
          const uint64_t idx = base + k;
          if (idx >= res.result.size()) break;
          res.result[idx] = modmath::mod_add(res.result[idx],
                                             partials[i * part_len + k],
                                             kernel.modulus);
        }
      }
      break;
    }
    case KernelKind::ButterflyStage: {
      const uint64_t n = inputs.a.size();
      if (!is_pow2(n) || n < 2)
        throw std::invalid_argument("transform length must be a power of two");
      if (inputs.twiddles.size() != n)
        throw std::invalid_argument("twiddle table length must equal n");
      const uint64_t log_n = static_cast<uint64_t>(std::countr_zero(n));
      std::vector<uint64_t> state = inputs.a;
      // One scatter/launch/gather round-trip per butterfly stage; the host
      // repacks pairs between stages.
      PartitionPlan plan = plan_partition(n / 2, cfg, 16);
      for (uint64_t s = 0; s < log_n; ++s) {
        StageBuffers bufs = make_stage_buffers(state, s, inputs.twiddles);
        scatter(sys, plan,
                {ScatterSpec{bufs.pairs, 2, false},
                 ScatterSpec{bufs.twiddles, 1, false}},
                res.ledger);
        launch(sys, DpuKernel::butterfly_stage(kernel.modulus, s), plan,
               res.ledger);
        std::vector<uint64_t> full = gather(sys, plan, res.ledger);
        full.resize(n);
        apply_stage_pairs(state, full, s);
      }
      res.result = std::move(state);
      break;
    }
  }
  return res;
}

}  // namespace pimhe::pimsim
