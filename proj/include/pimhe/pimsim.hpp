#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimhe/modmath.hpp"

// Functional and cost-accounting simulator of a UPMEM-style PIM system:
// DPUs with private MRAM, tasklet-staged WRAM, explicit host<->DPU copies
// under 8-byte alignment rules, and the scatter / launch / gather workflow.
// Kernels execute bit-exactly against the reference modules; time is
// modeled (per-op cycle-equivalents plus a latency+bandwidth transfer
// model), not cycle-accurate.
//
// Every operand physically round-trips through the per-DPU MRAM byte
// images, so functional transparency is enforced by construction rather
// than asserted.

namespace pimhe::pimsim {

struct MramOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndivisibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct KernelPanic : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnloadedData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DpuSystemConfig {
  uint64_t num_dpus = 64;
  uint64_t tasklets_per_dpu = 16;
  uint64_t mram_bytes = 64ULL << 20;
  uint64_t wram_bytes = 64ULL << 10;
  double dpu_freq_hz = 350e6;
  double per_dpu_bandwidth_bytes_per_s = 1e9;
  double per_transfer_latency_s = 20e-6;
  double launch_overhead_s = 500e-6;
  // 32-bit adds are native; wider multiplies are software-emulated, so one
  // modular multiply costs this many cycle-equivalents.
  uint64_t mul_cycle_cost = 8;
  uint64_t add_cycle_cost = 1;
  // Pad totals up to a multiple of num_dpus * tasklets_per_dpu (and the
  // 8-byte grain) instead of raising IndivisibleError / AlignmentError.
  bool allow_padding = false;

  // Throws std::invalid_argument on tasklet counts outside [1, 24] or
  // non-positive capacities/rates.
  void validate() const;
};

// Advisory lint notes for a valid config, e.g. tasklet counts too low to
// fill the 11-stage pipeline.
std::vector<std::string> config_warnings(const DpuSystemConfig& cfg);

struct TaskletRange {
  uint64_t start = 0;
  uint64_t end = 0;  // inclusive
};

struct PartitionPlan {
  uint64_t total_elements = 0;    // after any padding
  uint64_t logical_elements = 0;  // caller-visible count before padding
  uint64_t per_dpu = 0;           // N_D
  uint64_t per_tasklet = 0;       // N_T
  uint64_t element_bytes = 0;
  uint64_t num_dpus = 0;
  uint64_t tasklets = 0;
  // ranges[i][j] = elements [i*N_D + j*N_T, i*N_D + (j+1)*N_T - 1]
  std::vector<std::vector<TaskletRange>> ranges;
};

// Splits total elements evenly across DPUs and tasklets. Raises
// IndivisibleError when padding is off and num_dpus or tasklets do not
// divide evenly; AlignmentError when a tasklet extent is not 8-byte
// aligned; MramOverflow when one DPU's slice cannot fit in MRAM.
PartitionPlan plan_partition(uint64_t total, const DpuSystemConfig& cfg,
                             uint64_t element_bytes);

struct TransferLedger {
  uint64_t host_dpu_bytes = 0;
  uint64_t dpu_host_bytes = 0;
  double host_dpu_time = 0;
  double dpu_host_time = 0;
  double kernel_time = 0;  // includes per-launch overhead
  uint64_t launches = 0;
};

enum class KernelKind { PolyAdd, CwMul, Convolution, ButterflyStage };

// SPMD program descriptor. Twiddle factors for ButterflyStage travel as a
// scattered operand, not kernel state; stage is host-side metadata naming
// which network stage the scattered pairs came from.
struct DpuKernel {
  KernelKind kind = KernelKind::PolyAdd;
  modmath::Modulus modulus;
  uint64_t stage = 0;

  static DpuKernel poly_add(const modmath::Modulus& m);
  static DpuKernel cw_mul(const modmath::Modulus& m);
  static DpuKernel convolution(const modmath::Modulus& m);
  static DpuKernel butterfly_stage(const modmath::Modulus& m,
                                   uint64_t stage = 0);
};

// One host-side operand for scatter. Sliced buffers are cut per the plan
// (words_per_element u64 words per plan element, zero-padded to the plan's
// padded total); broadcast buffers are copied whole to every DPU.
struct ScatterSpec {
  std::vector<uint64_t> data;
  uint64_t words_per_element = 1;
  bool broadcast = false;
};

class DpuSystem {
 public:
  explicit DpuSystem(const DpuSystemConfig& cfg);

  const DpuSystemConfig& config() const { return cfg_; }

  // Raw MRAM access modeling the UPMEM copy primitives: offsets and sizes
  // must be 8-byte aligned (AlignmentError) and inside capacity
  // (MramOverflow).
  void write_mram(uint64_t dpu, uint64_t offset, const uint8_t* data,
                  uint64_t size);
  std::vector<uint8_t> read_mram(uint64_t dpu, uint64_t offset,
                                 uint64_t size) const;

  friend void scatter(DpuSystem& sys, const PartitionPlan& plan,
                      const std::vector<ScatterSpec>& buffers,
                      TransferLedger& ledger);
  friend void launch(DpuSystem& sys, const DpuKernel& kernel,
                     const PartitionPlan& plan, TransferLedger& ledger);
  friend std::vector<uint64_t> gather(DpuSystem& sys,
                                      const PartitionPlan& plan,
                                      TransferLedger& ledger);

 private:
  struct Region {
    uint64_t offset = 0;
    uint64_t words = 0;
    uint64_t words_per_element = 1;
    bool broadcast = false;
  };
  enum class Phase { Idle, Scattered, Launched };

  std::vector<uint64_t> read_words(uint64_t dpu, const Region& r) const;
  uint64_t alloc_region(uint64_t dpu, uint64_t bytes);

  DpuSystemConfig cfg_;
  std::vector<std::vector<uint8_t>> mram_;  // grown on demand per DPU
  std::vector<uint64_t> cursor_;
  std::vector<Region> inputs_;   // shared layout across DPUs (SPMD)
  Region output_;
  Phase phase_ = Phase::Idle;
};

// Copies each operand into every DPU's MRAM per the plan; accounts bytes
// and modeled time (fixed latency per per-DPU transfer; bandwidth applied
// to the largest per-DPU payload, transfers running in parallel across
// DPUs). Begins a fresh run: prior regions are discarded.
void scatter(DpuSystem& sys, const PartitionPlan& plan,
             const std::vector<ScatterSpec>& buffers, TransferLedger& ledger);

// Executes the kernel on every DPU over its MRAM-resident slice,
// bit-exactly equal to the reference implementation; adds launch overhead
// plus max-over-DPUs cycle time (pipeline underutilization below 11
// tasklets scales cycles by 11/T). KernelPanic when per-tasklet WRAM cannot
// stage one element's working set; UnloadedData before any scatter.
void launch(DpuSystem& sys, const DpuKernel& kernel, const PartitionPlan& plan,
            TransferLedger& ledger);

// Concatenates the per-DPU output regions (padded domain); symmetric byte
// and time accounting to scatter. UnloadedData before a launch.
std::vector<uint64_t> gather(DpuSystem& sys, const PartitionPlan& plan,
                             TransferLedger& ledger);

struct WorkflowInput {
  std::vector<uint64_t> a;
  std::vector<uint64_t> b;  // second operand; unused by ButterflyStage
  // ButterflyStage only: the full bit-reversed-order forward twiddle table
  // (psi powers), length n.
  std::vector<uint64_t> twiddles;
};

struct WorkflowResult {
  std::vector<uint64_t> result;
  TransferLedger ledger;
};

// Plan -> scatter -> launch -> gather -> host aggregation, per kernel kind:
//   PolyAdd / CwMul : element-wise result, length n.
//   Convolution     : sliced a, broadcast b; per-DPU partials of length
//                     N_D + n - 1 summed on the host into length 2n - 1.
//   ButterflyStage  : the full transform, log2(n) stage round-trips each
//                     paying scatter + launch + gather; result is the raw
//                     butterfly-network output (bit-reversed order).
WorkflowResult run_workflow(const DpuKernel& kernel,
                            const WorkflowInput& inputs,
                            const DpuSystemConfig& cfg);

// Packs the stage's butterfly pairs and per-butterfly twiddles from a
// natural kernel-order state vector; twiddles is the full bit-reversed
// table.
struct StageBuffers {
  std::vector<uint64_t> pairs;     // u, v interleaved, butterfly g at 2g
  std::vector<uint64_t> twiddles;  // per butterfly
};
StageBuffers make_stage_buffers(const std::vector<uint64_t>& state,
                                uint64_t stage,
                                const std::vector<uint64_t>& twiddle_table);

// Writes transformed pairs back into their vector positions for the stage.
void apply_stage_pairs(std::vector<uint64_t>& state,
                       const std::vector<uint64_t>& pairs, uint64_t stage);

}  // namespace pimhe::pimsim
