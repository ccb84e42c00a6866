// pimbench: CPU-reference vs simulated-PIM sweeps over polynomial kernels,
// homomorphic round-trip demos, and cost-model queries, emitting CSV with
// the fixed column set op,n,backend,dpus,tasklets,cpu_time,dpu_time,
// host_dpu,dpu_host,alpha,correct.
//
// Modeled (pim) rows are deterministic per seed and byte-identical across
// runs; cpu-backend and he-* rows carry measured wall-clock medians and are
// not. Exit codes: 0 ok, 2 usage error, 3 correctness mismatch.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pimhe/costmodel.hpp"
#include "pimhe/hekernels.hpp"
#include "pimhe/ntt.hpp"
#include "pimhe/pimsim.hpp"
#include "pimhe/polyring.hpp"

namespace {

using namespace pimhe;

enum class Op { Add, CwMul, Conv, Ntt, NttStage, HeAdd, HeMult };
enum class Backend { Cpu, Pim, Both };

volatile uint64_t g_sink;  // keeps timed kernels from being elided

struct Vars {
  std::string op_str;
  std::string log_n_spec;
  std::string backend_str = "pim";
  std::string output;
  std::vector<uint64_t> dpus;
  uint64_t tasklets = 16;
  uint64_t reps = 100;
  uint64_t warmup = 20;
  uint64_t seed = 42;
};

std::optional<Op> parse_op(const std::string& s) {
  if (s == "add") return Op::Add;
  if (s == "cwmul") return Op::CwMul;
  if (s == "conv") return Op::Conv;
  if (s == "ntt") return Op::Ntt;
  if (s == "ntt-stage") return Op::NttStage;
  if (s == "he-add") return Op::HeAdd;
  if (s == "he-mult") return Op::HeMult;
  return std::nullopt;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::CwMul: return "cwmul";
    case Op::Conv: return "conv";
    case Op::Ntt: return "ntt";
    case Op::NttStage: return "ntt-stage";
    case Op::HeAdd: return "he-add";
    case Op::HeMult: return "he-mult";
  }
  return "?";
}

std::optional<Backend> parse_backend(const std::string& s) {
  if (s == "cpu") return Backend::Cpu;
  if (s == "pim") return Backend::Pim;
  if (s == "both") return Backend::Both;
  return std::nullopt;
}

// "6", "10..20", or a comma list of either.
std::optional<std::vector<int>> parse_log_ns(const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) return std::nullopt;
    int lo = 0, hi = 0;
    const auto dots = token.find("..");
    try {
      if (dots == std::string::npos) {
        lo = hi = std::stoi(token);
      } else {
        lo = std::stoi(token.substr(0, dots));
        hi = std::stoi(token.substr(dots + 2));
      }
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (lo < 1 || hi < lo || hi > 30) return std::nullopt;
    for (int v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

// Past these sizes the CPU reference cost (quadratic for conv and the
// he-mult expected-product check) stops being desk-scale.
int desk_cap(Op op) {
  switch (op) {
    case Op::Conv:
    case Op::HeMult:
      return 13;
    default:
      return 20;
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t k = v.size() / 2;
  if (v.size() % 2 == 1) return v[k];
  return (v[k - 1] + v[k]) / 2;
}

uint64_t mix(uint64_t seed, uint64_t n, uint64_t salt) {
  return seed ^ (n * 0x9e3779b97f4a7c15ULL) ^ (salt << 56);
}

std::vector<uint64_t> draw_words(uint64_t n, uint64_t bound, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<uint64_t> out(n);
  for (auto& w : out) w = polyring::uniform_residue(gen, bound);
  return out;
}

void emit_row(std::ostream& os, Op op, uint64_t n, const char* backend,
              uint64_t dpus, uint64_t tasklets, double cpu_time,
              double dpu_time, double host_dpu, double dpu_host, double alpha,
              bool correct) {
  os << op_name(op) << ',' << n << ',' << backend << ',' << dpus << ','
     << tasklets << ',' << fmt(cpu_time) << ',' << fmt(dpu_time) << ','
     << fmt(host_dpu) << ',' << fmt(dpu_host) << ',' << fmt(alpha) << ','
     << (correct ? "true" : "false") << '\n';
}

std::optional<costmodel::OpKind> model_kind(Op op) {
  switch (op) {
    case Op::Add: return costmodel::OpKind::Addition;
    case Op::CwMul: return costmodel::OpKind::CwMul;
    case Op::Conv: return costmodel::OpKind::Convolution;
    default: return std::nullopt;
  }
}

// ------------------------------------------------------------- cpu side ---

double time_loop(uint64_t reps, uint64_t warmup, const auto& body) {
  for (uint64_t i = 0; i < warmup; ++i) body();
  std::vector<double> samples;
  samples.reserve(reps);
  for (uint64_t i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return median(std::move(samples));
}

double measure_cpu(Op op, uint64_t n, uint64_t seed, uint64_t reps,
                   uint64_t warmup) {
  const modmath::Modulus q(65537);
  switch (op) {
    case Op::Add:
    case Op::CwMul:
    case Op::Conv: {
      polyring::RingParams ring(n, q);
      auto pa = polyring::random_poly(ring, mix(seed, n, 1));
      auto pb = polyring::random_poly(ring, mix(seed, n, 2));
      if (op == Op::Add)
        return time_loop(reps, warmup, [&] {
          g_sink = g_sink + polyring::poly_add(pa, pb).coeffs[0];
        });
      if (op == Op::CwMul)
        return time_loop(reps, warmup,
                         [&] { g_sink = g_sink + polyring::cw_mul(pa, pb).coeffs[0]; });
      return time_loop(reps, warmup, [&] {
        g_sink = g_sink + polyring::schoolbook_convolution(pa, pb).coeffs[0];
      });
    }
    case Op::Ntt:
    case Op::NttStage: {
      const modmath::Modulus nq = modmath::generate_ntt_prime(60, n, seed);
      const ntt::TwiddleTable table = ntt::make_table(n, nq);
      polyring::RingParams ring(n, nq);
      auto pa = polyring::random_poly(ring, mix(seed, n, 1));
      if (op == Op::Ntt)
        return time_loop(reps, warmup, [&] {
          std::vector<uint64_t> state = pa.coeffs;
          ntt::forward_nwc_inplace(state, table);
          g_sink = g_sink + state[0];
        });
      return time_loop(reps, warmup, [&] {
        g_sink = g_sink + ntt::ct_iteration(pa, 0, table).coeffs[0];
      });
    }
    default:
      throw std::logic_error("he ops are timed by run_he");
  }
}

// ------------------------------------------------------------- pim side ---

struct PimEval {
  double model_cpu = 0;  // cost-model CPU estimate; 0 for ops it lacks
  double dpu_time = 0;
  double host_dpu = 0;
  double dpu_host = 0;
  double alpha = 0;
  bool correct = false;
};

PimEval eval_pim(Op op, uint64_t n, uint64_t dpus, uint64_t tasklets,
                 uint64_t seed) {
  pimsim::DpuSystemConfig dc;
  dc.num_dpus = dpus;
  dc.tasklets_per_dpu = tasklets;
  dc.allow_padding = true;

  PimEval ev;
  if (auto kind = model_kind(op)) {
    costmodel::CostParams cp;
    cp.dpu = dc;
    const auto est = costmodel::estimate(*kind, n, cp);
    ev.model_cpu = est.cpu_time_s;
    ev.alpha = est.alpha;
  }

  switch (op) {
    case Op::Add:
    case Op::CwMul: {
      const modmath::Modulus q(65537);
      polyring::RingParams ring(n, q);
      auto pa = polyring::random_poly(ring, mix(seed, n, 1));
      auto pb = polyring::random_poly(ring, mix(seed, n, 2));
      auto kernel = op == Op::Add ? pimsim::DpuKernel::poly_add(q)
                                  : pimsim::DpuKernel::cw_mul(q);
      auto run = pimsim::run_workflow(kernel, {pa.coeffs, pb.coeffs, {}}, dc);
      auto ref = op == Op::Add ? polyring::poly_add(pa, pb)
                               : polyring::cw_mul(pa, pb);
      ev.correct = run.result == ref.coeffs;
      ev.dpu_time = run.ledger.kernel_time;
      ev.host_dpu = run.ledger.host_dpu_time;
      ev.dpu_host = run.ledger.dpu_host_time;
      break;
    }
    case Op::Conv: {
      const modmath::Modulus q(65537);
      polyring::RingParams ring(n, q);
      auto pa = polyring::random_poly(ring, mix(seed, n, 1));
      auto pb = polyring::random_poly(ring, mix(seed, n, 2));
      auto run = pimsim::run_workflow(pimsim::DpuKernel::convolution(q),
                                      {pa.coeffs, pb.coeffs, {}}, dc);
      ev.correct =
          run.result == polyring::schoolbook_convolution(pa, pb).coeffs;
      ev.dpu_time = run.ledger.kernel_time;
      ev.host_dpu = run.ledger.host_dpu_time;
      ev.dpu_host = run.ledger.dpu_host_time;
      break;
    }
    case Op::Ntt: {
      const modmath::Modulus q = modmath::generate_ntt_prime(60, n, seed);
      const ntt::TwiddleTable table = ntt::make_table(n, q);
      auto a = draw_words(n, q.q, mix(seed, n, 1));
      auto run = pimsim::run_workflow(pimsim::DpuKernel::butterfly_stage(q),
                                      {a, {}, table.forward_twiddles}, dc);
      std::vector<uint64_t> ref = a;
      ntt::forward_nwc_inplace(ref, table);
      ev.correct = run.result == ref;
      ev.dpu_time = run.ledger.kernel_time;
      ev.host_dpu = run.ledger.host_dpu_time;
      ev.dpu_host = run.ledger.dpu_host_time;
      break;
    }
    case Op::NttStage: {
      const modmath::Modulus q = modmath::generate_ntt_prime(60, n, seed);
      const ntt::TwiddleTable table = ntt::make_table(n, q);
      polyring::RingParams ring(n, q);
      auto pa = polyring::random_poly(ring, mix(seed, n, 1));
      auto bufs =
          pimsim::make_stage_buffers(pa.coeffs, 0, table.forward_twiddles);
      auto plan = pimsim::plan_partition(n / 2, dc, 16);
      pimsim::DpuSystem sys(dc);
      pimsim::TransferLedger ledger;
      pimsim::scatter(sys, plan,
                      {pimsim::ScatterSpec{bufs.pairs, 2, false},
                       pimsim::ScatterSpec{bufs.twiddles, 1, false}},
                      ledger);
      pimsim::launch(sys, pimsim::DpuKernel::butterfly_stage(q, 0), plan,
                     ledger);
      auto pairs = pimsim::gather(sys, plan, ledger);
      pairs.resize(n);
      std::vector<uint64_t> state = pa.coeffs;
      pimsim::apply_stage_pairs(state, pairs, 0);
      ev.correct = state == ntt::ct_iteration(pa, 0, table).coeffs;
      ev.dpu_time = ledger.kernel_time;
      ev.host_dpu = ledger.host_dpu_time;
      ev.dpu_host = ledger.dpu_host_time;
      break;
    }
    default:
      throw std::logic_error("he ops have no pim backend");
  }
  return ev;
}

// -------------------------------------------------------------- he side ---

struct HeEval {
  double cpu_median = 0;
  bool correct = false;
};

HeEval run_he(Op op, uint64_t n, uint64_t seed, uint64_t reps,
              uint64_t warmup) {
  const uint64_t t = 65537;
  const modmath::Modulus q = modmath::generate_ntt_prime(60, n, seed);
  polyring::RingParams ring(n, q);
  hekernels::SchemeParams sp(ring, t);
  auto keys = hekernels::keygen(sp, mix(seed, n, 11));
  auto m1 = draw_words(n, t, mix(seed, n, 12));
  auto m2 = draw_words(n, t, mix(seed, n, 13));
  auto c1 = hekernels::encrypt(m1, keys, sp, mix(seed, n, 14));
  auto c2 = hekernels::encrypt(m2, keys, sp, mix(seed, n, 15));

  hekernels::Ciphertext last;
  HeEval ev;
  if (op == Op::HeAdd) {
    ev.cpu_median = time_loop(reps, warmup, [&] {
      last = hekernels::eval_add(c1, c2);
      g_sink = g_sink + last.elements[0].coeffs[0];
    });
  } else {
    ev.cpu_median = time_loop(reps, warmup, [&] {
      last = hekernels::relinearize(hekernels::eval_mult(c1, c2, sp), keys, sp);
      g_sink = g_sink + last.elements[0].coeffs[0];
    });
  }

  // Decrypt-match against the plaintext-ring result.
  const modmath::Modulus tq(t);
  polyring::RingParams tring(n, tq);
  polyring::Polynomial pm1(m1, tring), pm2(m2, tring);
  std::vector<uint64_t> expect =
      op == Op::HeAdd
          ? polyring::poly_add(pm1, pm2).coeffs
          : polyring::reduce_negacyclic(
                polyring::schoolbook_convolution(pm1, pm2), tring)
                .coeffs;
  ev.correct = hekernels::decrypt(last, keys, sp) == expect;
  return ev;
}

// ------------------------------------------------------------- commands ---

int run_bench(const Vars& v, bool scaling) {
  const auto op = parse_op(v.op_str);
  if (!op) {
    std::cerr << "unknown --op '" << v.op_str
              << "' (add, cwmul, conv, ntt, ntt-stage, he-add, he-mult)\n";
    return 2;
  }
  const auto backend = parse_backend(v.backend_str);
  if (!backend) {
    std::cerr << "unknown --backend '" << v.backend_str
              << "' (cpu, pim, both)\n";
    return 2;
  }
  const auto log_ns = parse_log_ns(v.log_n_spec);
  if (!log_ns) {
    std::cerr << "bad --log-n '" << v.log_n_spec
              << "': expected K, K..L, or a comma list, 1 <= K <= 30\n";
    return 2;
  }
  if (scaling && log_ns->size() != 1) {
    std::cerr << "scaling takes a single --log-n value\n";
    return 2;
  }
  if (v.reps < 1) {
    std::cerr << "--reps must be at least 1\n";
    return 2;
  }
  std::vector<uint64_t> dpus = v.dpus;
  if (dpus.empty())
    dpus = scaling ? std::vector<uint64_t>{64, 128, 256, 512, 1024}
                   : std::vector<uint64_t>{64};
  for (uint64_t d : dpus)
    if (d == 0) {
      std::cerr << "--dpus entries must be positive\n";
      return 2;
    }
  if (v.tasklets < 1 || v.tasklets > 24) {
    std::cerr << "--tasklets must be in [1, 24]\n";
    return 2;
  }
  {
    pimsim::DpuSystemConfig lint;
    lint.tasklets_per_dpu = v.tasklets;
    for (const auto& note : pimsim::config_warnings(lint))
      std::cerr << "note: " << note << '\n';
  }
  for (int log_n : *log_ns)
    if (log_n > desk_cap(*op))
      std::cerr << "warning: n=2^" << log_n << " is past the desk-scale cap (2^"
                << desk_cap(*op) << ") for " << op_name(*op)
                << "; expect a long reference computation\n";

  const bool he = *op == Op::HeAdd || *op == Op::HeMult;
  if (he && *backend != Backend::Cpu)
    std::cerr << "note: " << op_name(*op)
              << " runs on the cpu backend only; emitting cpu rows\n";

  std::ostringstream csv;
  csv << "op,n,backend,dpus,tasklets,cpu_time,dpu_time,host_dpu,dpu_host,"
         "alpha,correct\n";

  for (int log_n : *log_ns) {
    const uint64_t n = 1ULL << log_n;
    if (he) {
      HeEval ev = run_he(*op, n, v.seed, v.reps, v.warmup);
      emit_row(csv, *op, n, "cpu", 0, 0, ev.cpu_median, 0, 0, 0, 0,
               ev.correct);
      if (!ev.correct) {
        std::cerr << "correctness mismatch: " << op_name(*op) << " n=" << n
                  << " decrypt differs from the plaintext result\n";
        return 3;
      }
      continue;
    }

    if (*backend == Backend::Cpu || *backend == Backend::Both) {
      const double med = measure_cpu(*op, n, v.seed, v.reps, v.warmup);
      emit_row(csv, *op, n, "cpu", 0, 0, med, 0, 0, 0,
               model_kind(*op)
                   ? costmodel::alpha_ratio(*model_kind(*op), n).value()
                   : 0.0,
               true);
    }
    if (*backend == Backend::Pim || *backend == Backend::Both) {
      for (uint64_t d : dpus) {
        PimEval ev = eval_pim(*op, n, d, v.tasklets, v.seed);
        emit_row(csv, *op, n, "pim", d, v.tasklets, ev.model_cpu, ev.dpu_time,
                 ev.host_dpu, ev.dpu_host, ev.alpha, ev.correct);
        if (!ev.correct) {
          std::cerr << "correctness mismatch: " << op_name(*op) << " n=" << n
                    << " dpus=" << d
                    << " simulated result differs from the reference\n";
          return 3;
        }
      }
    }
  }

  if (v.output.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(v.output, std::ios::binary);
    if (!f) {
      std::cerr << "cannot open output file '" << v.output << "'\n";
      return 2;
    }
    f << csv.str();
  }
  return 0;
}

int run_explain(const Vars& v) {
  const auto op = parse_op(v.op_str);
  if (!op || !model_kind(*op)) {
    std::cerr << "explain covers the modeled ops: add, cwmul, conv\n";
    return 2;
  }
  const auto log_ns = parse_log_ns(v.log_n_spec);
  if (!log_ns || log_ns->size() != 1) {
    std::cerr << "explain takes a single --log-n value\n";
    return 2;
  }
  const uint64_t n = 1ULL << (*log_ns)[0];

  costmodel::CostParams cp;
  if (!v.dpus.empty()) cp.dpu.num_dpus = v.dpus[0];
  cp.dpu.tasklets_per_dpu = v.tasklets;
  const auto kind = *model_kind(*op);
  const auto ratio = costmodel::alpha_ratio(kind, n);
  const auto est = costmodel::estimate(kind, n, cp);
  const auto cross = costmodel::crossover_n(kind, cp);

  std::cout << "operation " << op_name(*op) << ", n=" << n << " (2^"
            << (*log_ns)[0] << "), dpus=" << cp.dpu.num_dpus
            << ", tasklets=" << cp.dpu.tasklets_per_dpu << '\n'
            << "alpha = " << ratio.num << "/" << ratio.den << " = "
            << fmt(ratio.value()) << '\n'
            << "cpu_time        = " << fmt(est.cpu_time_s) << " s\n"
            << "dpu_kernel_time = " << fmt(est.dpu_kernel_time_s) << " s\n"
            << "host_dpu_time   = " << fmt(est.host_dpu_time_s) << " s\n"
            << "dpu_host_time   = " << fmt(est.dpu_host_time_s) << " s\n"
            << "pim_total       = " << fmt(est.dpu_total_s()) << " s\n"
            << "predicted winner: "
            << (est.dpu_total_s() < est.cpu_time_s ? "pim" : "cpu") << '\n'
            << "crossover_n: "
            << (cross ? std::to_string(*cross) : std::string("none")) << '\n';
  return 0;
}

bool overlay_env_config(Vars& v, std::string& err) {
  const char* path = std::getenv("PIMBENCH_CONFIG");
  if (!path || !*path) return true;
  std::ifstream f(path);
  if (!f) {
    err = std::string("cannot read config file '") + path + "'";
    return false;
  }
  try {
    const nlohmann::json j = nlohmann::json::parse(f);
    if (j.contains("dpus")) v.dpus = j.at("dpus").get<std::vector<uint64_t>>();
    if (j.contains("tasklets")) v.tasklets = j.at("tasklets").get<uint64_t>();
    if (j.contains("repetitions"))
      v.reps = j.at("repetitions").get<uint64_t>();
    if (j.contains("warmup")) v.warmup = j.at("warmup").get<uint64_t>();
    if (j.contains("seed")) v.seed = j.at("seed").get<uint64_t>();
    if (j.contains("backend")) v.backend_str = j.at("backend").get<std::string>();
    if (j.contains("output")) v.output = j.at("output").get<std::string>();
  } catch (const std::exception& e) {
    err = std::string("bad config file '") + path + "': " + e.what();
    return false;
  }
  return true;
}

void add_bench_options(CLI::App* cmd, Vars& v, bool with_backend) {
  cmd->add_option("--op", v.op_str,
                  "add, cwmul, conv, ntt, ntt-stage, he-add, he-mult");
  cmd->add_option("--log-n", v.log_n_spec, "log2 sizes: K, K..L, or a list");
  cmd->add_option("--dpus", v.dpus, "DPU counts to sweep")->delimiter(',');
  cmd->add_option("--tasklets", v.tasklets, "tasklets per DPU, 1..24");
  cmd->add_option("--reps", v.reps, "timed repetitions per measured row");
  cmd->add_option("--warmup", v.warmup, "untimed warmup repetitions");
  cmd->add_option("--seed", v.seed, "RNG seed for operands and primes");
  if (with_backend)
    cmd->add_option("--backend", v.backend_str, "cpu, pim, or both");
  cmd->add_option("--output,-o", v.output, "CSV path (default stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "polynomial / NTT / HE benchmark harness with a simulated PIM backend"};

  Vars seed_vars;
  {
    std::string err;
    if (!overlay_env_config(seed_vars, err)) {
      std::cerr << err << '\n';
      return 2;
    }
  }
  Vars bench_vars = seed_vars;
  Vars scaling_vars = seed_vars;
  Vars explain_vars = seed_vars;

  add_bench_options(&app, bench_vars, true);
  CLI::App* scaling =
      app.add_subcommand("scaling", "sweep DPU counts at a fixed size");
  add_bench_options(scaling, scaling_vars, true);
  CLI::App* explain =
      app.add_subcommand("explain", "print the cost-model breakdown");
  add_bench_options(explain, explain_vars, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (scaling->parsed()) {
      if (scaling_vars.op_str.empty() || scaling_vars.log_n_spec.empty()) {
        std::cerr << "scaling requires --op and --log-n\n";
        return 2;
      }
      return run_bench(scaling_vars, true);
    }
    if (explain->parsed()) {
      if (explain_vars.op_str.empty() || explain_vars.log_n_spec.empty()) {
        std::cerr << "explain requires --op and --log-n\n";
        return 2;
      }
      return run_explain(explain_vars);
    }
    if (bench_vars.op_str.empty() || bench_vars.log_n_spec.empty()) {
      std::cerr << "usage: pimbench --op OP --log-n SPEC [options], or a "
                   "subcommand (scaling, explain); see --help\n";
      return 2;
    }
    return run_bench(bench_vars, false);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
