#include "pimhe/pimsim.hpp"

#include <cstring>
#include <numeric>

#include "doctest.h"
#include "pimhe/ntt.hpp"
#include "pimhe/polyring.hpp"

using namespace pimhe;
using namespace pimhe::pimsim;

namespace {

DpuSystemConfig small_cfg(uint64_t dpus, uint64_t tasklets) {
  DpuSystemConfig cfg;
  cfg.num_dpus = dpus;
  cfg.tasklets_per_dpu = tasklets;
  return cfg;
}

std::vector<uint64_t> random_words(uint64_t n, uint64_t q, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<uint64_t> out(n);
  for (auto& w : out) w = polyring::uniform_residue(gen, q);
  return out;
}

}  // namespace

TEST_CASE("config validation bounds tasklets and capacities") {
  DpuSystemConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  cfg.tasklets_per_dpu = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.tasklets_per_dpu = 25;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.tasklets_per_dpu = 24;
  CHECK_NOTHROW(cfg.validate());

  cfg.num_dpus = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.num_dpus = 1;
  cfg.mram_bytes = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("lint flags tasklet counts below the pipeline depth") {
  DpuSystemConfig cfg;
  CHECK(config_warnings(cfg).empty());  // default 16 is fine
  cfg.tasklets_per_dpu = 11;
  CHECK(config_warnings(cfg).empty());
  cfg.tasklets_per_dpu = 10;
  auto notes = config_warnings(cfg);
  REQUIRE(notes.size() == 1);
  CHECK(notes[0].find("11") != std::string::npos);
}

TEST_CASE("partition splits 1024 elements over 4 DPUs and 16 tasklets") {
  auto plan = plan_partition(1024, small_cfg(4, 16), 8);
  CHECK(plan.total_elements == 1024);
  CHECK(plan.logical_elements == 1024);
  CHECK(plan.per_dpu == 256);
  CHECK(plan.per_tasklet == 16);
  REQUIRE(plan.ranges.size() == 4);
  REQUIRE(plan.ranges[1].size() == 16);
  // DPU 1 owns [256, 511]; its tasklet 2 owns [288, 303].
  CHECK(plan.ranges[1][0].start == 256);
  CHECK(plan.ranges[1][15].end == 511);
  CHECK(plan.ranges[1][2].start == 288);
  CHECK(plan.ranges[1][2].end == 303);
  // Ranges tile the index space exactly.
  uint64_t covered = 0;
  for (const auto& dpu : plan.ranges)
    for (const auto& r : dpu) covered += r.end - r.start + 1;
  CHECK(covered == 1024);
}

TEST_CASE("partition rejects uneven splits unless padding is on") {
  CHECK_THROWS_AS(plan_partition(10, small_cfg(4, 1), 8), IndivisibleError);
  // Divides over DPUs but not over tasklets.
  CHECK_THROWS_AS(plan_partition(12, small_cfg(4, 2), 8), IndivisibleError);

  auto cfg = small_cfg(4, 2);
  cfg.allow_padding = true;
  auto plan = plan_partition(10, cfg, 8);
  CHECK(plan.logical_elements == 10);
  CHECK(plan.total_elements == 16);
  CHECK(plan.per_dpu == 4);
  CHECK(plan.per_tasklet == 2);
}

TEST_CASE("partition rejects tasklet extents off the 8-byte grain") {
  // One 4-byte element per tasklet: 4-byte extents.
  CHECK_THROWS_AS(plan_partition(4, small_cfg(2, 2), 4), AlignmentError);
  // Two 4-byte elements per tasklet is fine.
  CHECK_NOTHROW(plan_partition(8, small_cfg(2, 2), 4));
  // Padding rounds the total up to an aligned split instead.
  auto cfg = small_cfg(2, 2);
  cfg.allow_padding = true;
  auto plan = plan_partition(4, cfg, 4);
  CHECK(plan.total_elements == 8);
  CHECK(plan.per_tasklet * plan.element_bytes % 8 == 0);
}

TEST_CASE("partition rejects slices that overflow MRAM") {
  // 2^24 8-byte words on one DPU is 128 MiB against a 64 MiB MRAM.
  CHECK_THROWS_AS(plan_partition(1ULL << 24, small_cfg(1, 1), 8),
                  MramOverflow);
  // The same load spread over 4 DPUs fits.
  CHECK_NOTHROW(plan_partition(1ULL << 24, small_cfg(4, 1), 8));
}

TEST_CASE("raw MRAM access enforces 8-byte alignment exhaustively") {
  DpuSystem sys(small_cfg(1, 1));
  std::vector<uint8_t> buf(16, 0xab);
  CHECK_NOTHROW(sys.write_mram(0, 0, buf.data(), 16));
  for (uint64_t off = 1; off <= 7; ++off) {
    CHECK_THROWS_AS(sys.write_mram(0, off, buf.data(), 8), AlignmentError);
    CHECK_THROWS_AS(sys.write_mram(0, 0, buf.data(), off), AlignmentError);
    CHECK_THROWS_AS(sys.read_mram(0, off, 8), AlignmentError);
    CHECK_THROWS_AS(sys.read_mram(0, 0, off), AlignmentError);
  }
  CHECK_THROWS_AS(sys.write_mram(0, 64ULL << 20, buf.data(), 8), MramOverflow);
}

TEST_CASE("scattered bytes read back identically before any launch") {
  modmath::Modulus q(257);
  auto cfg = small_cfg(4, 2);
  DpuSystem sys(cfg);
  auto plan = plan_partition(64, cfg, 8);
  std::vector<uint64_t> a = random_words(64, q.q, 7);
  std::vector<uint64_t> b = random_words(64, q.q, 8);
  TransferLedger ledger;
  scatter(sys, plan, {ScatterSpec{a, 1, false}, ScatterSpec{b, 1, false}},
          ledger);

  // Buffer 0 lands first in each DPU's MRAM, buffer 1 right after it.
  for (uint64_t dpu = 0; dpu < 4; ++dpu) {
    auto raw = sys.read_mram(dpu, 0, plan.per_dpu * 8);
    std::vector<uint64_t> words(plan.per_dpu);
    std::memcpy(words.data(), raw.data(), raw.size());
    for (uint64_t k = 0; k < plan.per_dpu; ++k)
      CHECK(words[k] == a[dpu * plan.per_dpu + k]);
  }
  CHECK(ledger.host_dpu_bytes == 2 * 64 * 8);
  CHECK(ledger.dpu_host_bytes == 0);
  CHECK(ledger.launches == 0);
}

TEST_CASE("protocol violations raise UnloadedData") {
  modmath::Modulus q(257);
  auto cfg = small_cfg(2, 1);
  auto plan = plan_partition(16, cfg, 8);
  TransferLedger ledger;

  DpuSystem fresh(cfg);
  CHECK_THROWS_AS(launch(fresh, DpuKernel::poly_add(q), plan, ledger),
                  UnloadedData);

  DpuSystem loaded(cfg);
  std::vector<uint64_t> a = random_words(16, q.q, 1);
  scatter(loaded, plan, {ScatterSpec{a, 1, false}, ScatterSpec{a, 1, false}},
          ledger);
  CHECK_THROWS_AS(gather(loaded, plan, ledger), UnloadedData);
  // After a launch the gather is legal and repeatable.
  launch(loaded, DpuKernel::poly_add(q), plan, ledger);
  auto r1 = gather(loaded, plan, ledger);
  auto r2 = gather(loaded, plan, ledger);
  CHECK(r1 == r2);
}

TEST_CASE("kernel panics when per-tasklet WRAM cannot hold a working set") {
  modmath::Modulus q(257);
  auto cfg = small_cfg(2, 16);
  cfg.wram_bytes = 256;  // 16 bytes per tasklet
  auto plan = plan_partition(32, cfg, 8);
  DpuSystem sys(cfg);
  std::vector<uint64_t> a = random_words(32, q.q, 1);
  TransferLedger ledger;
  scatter(sys, plan, {ScatterSpec{a, 1, false}, ScatterSpec{a, 1, false}},
          ledger);
  CHECK_THROWS_AS(launch(sys, DpuKernel::poly_add(q), plan, ledger),
                  KernelPanic);
  // One tasklet gets the whole 256 bytes and proceeds.
  auto cfg_ok = cfg;
  cfg_ok.tasklets_per_dpu = 1;
  auto plan_ok = plan_partition(32, cfg_ok, 8);
  DpuSystem sys_ok(cfg_ok);
  TransferLedger ledger_ok;
  scatter(sys_ok, plan_ok,
          {ScatterSpec{a, 1, false}, ScatterSpec{a, 1, false}}, ledger_ok);
  CHECK_NOTHROW(launch(sys_ok, DpuKernel::poly_add(q), plan_ok, ledger_ok));
}

TEST_CASE("element-wise kernels match the reference across configs") {
  modmath::Modulus q(65537);
  polyring::RingParams ring(256, q);
  auto pa = polyring::random_poly(ring, 21);
  auto pb = polyring::random_poly(ring, 22);
  auto sum = polyring::poly_add(pa, pb);
  auto prod = polyring::cw_mul(pa, pb);

  const std::pair<uint64_t, uint64_t> grid[] = {
      {1, 1}, {1, 16}, {2, 4}, {4, 16}, {8, 11}, {16, 8}, {32, 24}, {64, 16}};
  for (auto [dpus, tasklets] : grid) {
    CAPTURE(dpus);
    CAPTURE(tasklets);
    auto cfg = small_cfg(dpus, tasklets);
    cfg.allow_padding = true;
    WorkflowInput in{pa.coeffs, pb.coeffs, {}};
    auto add_out = run_workflow(DpuKernel::poly_add(q), in, cfg);
    CHECK(add_out.result == sum.coeffs);
    auto mul_out = run_workflow(DpuKernel::cw_mul(q), in, cfg);
    CHECK(mul_out.result == prod.coeffs);
    CHECK(add_out.ledger.launches == 1);
  }
}

TEST_CASE("byte accounting for element-wise ops is two in, one out") {
  modmath::Modulus q(65537);
  const uint64_t n = 1ULL << 12;
  auto a = random_words(n, q.q, 3);
  auto b = random_words(n, q.q, 4);
  auto cfg = small_cfg(64, 16);
  auto out = run_workflow(DpuKernel::poly_add(q), {a, b, {}}, cfg);
  CHECK(out.ledger.host_dpu_bytes == 2 * n * 8);
  CHECK(out.ledger.dpu_host_bytes == n * 8);
}

TEST_CASE("scattering two length-2^20 polynomials moves exactly 16 MiB") {
  modmath::Modulus q(65537);
  const uint64_t n = 1ULL << 20;
  auto cfg = small_cfg(64, 16);
  auto plan = plan_partition(n, cfg, 8);
  std::vector<uint64_t> a(n, 1), b(n, 2);
  DpuSystem sys(cfg);
  TransferLedger ledger;
  scatter(sys, plan, {ScatterSpec{a, 1, false}, ScatterSpec{b, 1, false}},
          ledger);
  CHECK(ledger.host_dpu_bytes == 16ULL << 20);
}

TEST_CASE("transfer and launch times follow the stated model") {
  modmath::Modulus q(65537);
  const uint64_t n = 1ULL << 12;
  auto a = random_words(n, q.q, 5);
  auto b = random_words(n, q.q, 6);
  auto cfg = small_cfg(16, 16);
  auto out = run_workflow(DpuKernel::poly_add(q), {a, b, {}}, cfg);

  const double nd = static_cast<double>(n) / cfg.num_dpus;
  const double expect_in = cfg.per_transfer_latency_s * 2 * cfg.num_dpus +
                           2 * nd * 8 / cfg.per_dpu_bandwidth_bytes_per_s;
  const double expect_out = cfg.per_transfer_latency_s * cfg.num_dpus +
                            nd * 8 / cfg.per_dpu_bandwidth_bytes_per_s;
  const double expect_kernel =
      cfg.launch_overhead_s + nd * cfg.add_cycle_cost / cfg.dpu_freq_hz;
  CHECK(out.ledger.host_dpu_time == doctest::Approx(expect_in));
  CHECK(out.ledger.dpu_host_time == doctest::Approx(expect_out));
  CHECK(out.ledger.kernel_time == doctest::Approx(expect_kernel));

  // A multiply-heavy kernel scales with the configured multiply cost.
  auto cheap = cfg;
  cheap.mul_cycle_cost = 1;
  auto t8 = run_workflow(DpuKernel::cw_mul(q), {a, b, {}}, cfg).ledger;
  auto t1 = run_workflow(DpuKernel::cw_mul(q), {a, b, {}}, cheap).ledger;
  const double c8 = t8.kernel_time - cfg.launch_overhead_s;
  const double c1 = t1.kernel_time - cfg.launch_overhead_s;
  CHECK(c8 == doctest::Approx(8 * c1));
}

TEST_CASE("tasklet count changes time but never results") {
  modmath::Modulus q(65537);
  auto a = random_words(512, q.q, 9);
  auto b = random_words(512, q.q, 10);
  auto cfg = small_cfg(8, 16);
  auto base = run_workflow(DpuKernel::cw_mul(q), {a, b, {}}, cfg);
  for (uint64_t t : {1ULL, 2ULL, 8ULL, 11ULL, 24ULL}) {
    auto c = cfg;
    c.tasklets_per_dpu = t;
    c.allow_padding = true;
    auto out = run_workflow(DpuKernel::cw_mul(q), {a, b, {}}, c);
    CHECK(out.result == base.result);
  }
  // Below 11 tasklets the pipeline stalls; 1 tasklet costs 11x the cycles.
  auto c1 = cfg;
  c1.tasklets_per_dpu = 1;
  auto slow = run_workflow(DpuKernel::cw_mul(q), {a, b, {}}, c1).ledger;
  const double fast_cycles = base.ledger.kernel_time - cfg.launch_overhead_s;
  const double slow_cycles = slow.kernel_time - cfg.launch_overhead_s;
  CHECK(slow_cycles == doctest::Approx(11 * fast_cycles));
}

TEST_CASE("repeated workflows are bit-identical with identical ledgers") {
  modmath::Modulus q(65537);
  auto a = random_words(1024, q.q, 11);
  auto b = random_words(1024, q.q, 12);
  auto cfg = small_cfg(16, 16);
  auto r1 = run_workflow(DpuKernel::poly_add(q), {a, b, {}}, cfg);
  auto r2 = run_workflow(DpuKernel::poly_add(q), {a, b, {}}, cfg);
  CHECK(r1.result == r2.result);
  CHECK(r1.ledger.host_dpu_bytes == r2.ledger.host_dpu_bytes);
  CHECK(r1.ledger.dpu_host_bytes == r2.ledger.dpu_host_bytes);
  CHECK(r1.ledger.host_dpu_time == r2.ledger.host_dpu_time);
  CHECK(r1.ledger.dpu_host_time == r2.ledger.dpu_host_time);
  CHECK(r1.ledger.kernel_time == r2.ledger.kernel_time);
}

TEST_CASE("convolution slices one operand, broadcasts the other") {
  modmath::Modulus q(65537);
  polyring::RingParams ring(64, q);
  auto pa = polyring::random_poly(ring, 31);
  auto pb = polyring::random_poly(ring, 32);
  auto expect = polyring::schoolbook_convolution(pa, pb);

  auto cfg = small_cfg(4, 2);
  auto out = run_workflow(DpuKernel::convolution(q), {pa.coeffs, pb.coeffs, {}},
                          cfg);
  CHECK(out.result == expect.coeffs);

  // Bytes: sliced a (64 words) plus b broadcast to all 4 DPUs, and each DPU
  // returns a partial of length N_D + n - 1.
  CHECK(out.ledger.host_dpu_bytes == (64 + 4 * 64) * 8);
  CHECK(out.ledger.dpu_host_bytes == 4 * (16 + 64 - 1) * 8);

  // Same answer under padding with an uneven split.
  auto cfg_pad = small_cfg(8, 3);
  cfg_pad.allow_padding = true;
  auto padded = run_workflow(DpuKernel::convolution(q),
                             {pa.coeffs, pb.coeffs, {}}, cfg_pad);
  CHECK(padded.result == expect.coeffs);
}

TEST_CASE("one butterfly stage on DPUs matches the reference iteration") {
  modmath::Modulus q(17);
  auto table = ntt::make_table(8, q);
  polyring::RingParams ring(8, q);
  auto state = polyring::random_poly(ring, 41);

  auto cfg = small_cfg(2, 2);
  for (uint64_t stage = 0; stage < 3; ++stage) {
    CAPTURE(stage);
    auto expect = ntt::ct_iteration(state, stage, table);

    auto bufs = make_stage_buffers(state.coeffs, stage,
                                   table.forward_twiddles);
    auto plan = plan_partition(4, cfg, 16);  // 4 butterflies per stage
    CHECK(plan.per_dpu == 2);
    DpuSystem sys(cfg);
    TransferLedger ledger;
    scatter(sys, plan,
            {ScatterSpec{bufs.pairs, 2, false},
             ScatterSpec{bufs.twiddles, 1, false}},
            ledger);
    launch(sys, DpuKernel::butterfly_stage(q, stage), plan, ledger);
    auto pairs = gather(sys, plan, ledger);
    std::vector<uint64_t> got = state.coeffs;
    apply_stage_pairs(got, pairs, stage);
    CHECK(got == expect.coeffs);
  }
}

TEST_CASE("staged transform equals the raw kernel and pays per-stage trips") {
  modmath::Modulus q = modmath::generate_ntt_prime(30, 64, 5);
  auto table = ntt::make_table(64, q);
  auto a = random_words(64, q.q, 51);

  std::vector<uint64_t> expect = a;
  ntt::forward_nwc_inplace(expect, table);  // bit-reversed order

  auto cfg = small_cfg(4, 2);
  WorkflowInput in{a, {}, table.forward_twiddles};
  auto out = run_workflow(DpuKernel::butterfly_stage(q), in, cfg);
  CHECK(out.result == expect);
  CHECK(out.ledger.launches == 6);  // log2(64) stage round-trips

  // Per-stage copies cost strictly more than one single-shot copy of the
  // polynomial in and out.
  TransferLedger single;
  auto plan = plan_partition(64, cfg, 8);
  DpuSystem sys(cfg);
  scatter(sys, plan, {ScatterSpec{a, 1, false}}, single);
  CHECK(out.ledger.host_dpu_time > single.host_dpu_time);
  CHECK(out.ledger.host_dpu_bytes > 2 * single.host_dpu_bytes);

  // The inverse raw kernel returns the staged output to the input.
  std::vector<uint64_t> back = out.result;
  ntt::inverse_nwc_inplace(back, table);
  CHECK(back == a);
}

TEST_CASE("padding preserves element-wise results on awkward sizes") {
  modmath::Modulus q(40961);
  const uint64_t n = 100;  // not divisible by 8 DPUs * 3 tasklets
  auto a = random_words(n, q.q, 61);
  auto b = random_words(n, q.q, 62);
  auto cfg = small_cfg(8, 3);
  CHECK_THROWS_AS(run_workflow(DpuKernel::poly_add(q), {a, b, {}}, cfg),
                  IndivisibleError);
  cfg.allow_padding = true;
  auto out = run_workflow(DpuKernel::poly_add(q), {a, b, {}}, cfg);
  REQUIRE(out.result.size() == n);
  for (uint64_t k = 0; k < n; ++k)
    CHECK(out.result[k] == modmath::mod_add(a[k], b[k], q));
}

TEST_CASE("workflow rejects operands inconsistent with the kernel") {
  modmath::Modulus q(257);
  auto cfg = small_cfg(2, 1);
  CHECK_THROWS_AS(
      run_workflow(DpuKernel::poly_add(q), {{1, 2, 3, 4}, {1, 2}, {}}, cfg),
      std::invalid_argument);
  CHECK_THROWS_AS(run_workflow(DpuKernel::butterfly_stage(q),
                               {{1, 2, 3, 4}, {}, {1, 2}}, cfg),
                  std::invalid_argument);
  // Mis-shaped scatter against a launch kind.
  auto plan = plan_partition(16, cfg, 8);
  DpuSystem sys(cfg);
  TransferLedger ledger;
  std::vector<uint64_t> a = random_words(16, q.q, 1);
  scatter(sys, plan, {ScatterSpec{a, 1, false}}, ledger);
  CHECK_THROWS_AS(launch(sys, DpuKernel::poly_add(q), plan, ledger),
                  std::invalid_argument);
}
