// Python bindings: list-in, list-out wrappers around the core kernels plus a
// small BFV context object. Twiddle tables are rebuilt per call, which keeps
// the surface stateless; heavy sweeps belong in the C++ CLI, not here.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimhe/costmodel.hpp"
#include "pimhe/hekernels.hpp"
#include "pimhe/ntt.hpp"
#include "pimhe/pimsim.hpp"
#include "pimhe/polyring.hpp"

namespace py = pybind11;
using namespace pimhe;

namespace {

using Words = std::vector<uint64_t>;

polyring::Polynomial wrap(const Words& coeffs, uint64_t q,
                          polyring::Reduction red) {
  modmath::Modulus m(q);
  polyring::RingParams ring(coeffs.size(), m, red);
  return polyring::Polynomial(coeffs, ring);
}

costmodel::OpKind parse_op(const std::string& op) {
  if (op == "add") return costmodel::OpKind::Addition;
  if (op == "cwmul") return costmodel::OpKind::CwMul;
  if (op == "conv") return costmodel::OpKind::Convolution;
  throw std::invalid_argument("unknown op '" + op +
                              "' (expected add, cwmul, or conv)");
}

py::dict ledger_dict(const pimsim::TransferLedger& led) {
  py::dict d;
  d["host_dpu_bytes"] = led.host_dpu_bytes;
  d["dpu_host_bytes"] = led.dpu_host_bytes;
  d["host_dpu_time"] = led.host_dpu_time;
  d["dpu_host_time"] = led.dpu_host_time;
  d["kernel_time"] = led.kernel_time;
  d["launches"] = led.launches;
  return d;
}

// Owns scheme parameters and key material; encryption seeds advance from the
// construction seed so a given call sequence is reproducible.
struct BfvContext {
  hekernels::SchemeParams params;
  hekernels::KeyMaterial keys;
  uint64_t next_seed;

  BfvContext(uint64_t n, uint64_t plaintext_modulus, uint64_t q_bits,
             uint64_t seed)
      : params(polyring::RingParams(
                   n, modmath::generate_ntt_prime(q_bits, n, seed)),
               plaintext_modulus),
        keys(hekernels::keygen(params, seed)),
        next_seed(seed + 1) {}

  hekernels::Ciphertext encrypt(const Words& message) {
    return hekernels::encrypt(message, keys, params, next_seed++);
  }
  Words decrypt(const hekernels::Ciphertext& c) const {
    return hekernels::decrypt(c, keys, params);
  }
  hekernels::Ciphertext add(const hekernels::Ciphertext& c1,
                            const hekernels::Ciphertext& c2) const {
    return hekernels::eval_add(c1, c2);
  }
  hekernels::Ciphertext multiply(const hekernels::Ciphertext& c1,
                                 const hekernels::Ciphertext& c2) const {
    return hekernels::relinearize(hekernels::eval_mult(c1, c2, params), keys,
                                  params);
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Polynomial arithmetic, BFV kernels, and a processing-in-memory "
      "system model";
  m.attr("__version__") = "0.1.0";

  m.def("is_prime", &modmath::is_prime, py::arg("x"));
  m.def(
      "generate_prime",
      [](uint64_t bit_width, uint64_t n, uint64_t seed) {
        return modmath::generate_ntt_prime(bit_width, n, seed).q;
      },
      py::arg("bit_width"), py::arg("n"), py::arg("seed") = 1,
      "Prime q of the given width with 2n dividing q-1");

  m.def(
      "poly_add",
      [](const Words& a, const Words& b, uint64_t q) {
        return polyring::poly_add(
                   wrap(a, q, polyring::Reduction::NegacyclicXnPlus1),
                   wrap(b, q, polyring::Reduction::NegacyclicXnPlus1))
            .coeffs;
      },
      py::arg("a"), py::arg("b"), py::arg("q"));
  m.def(
      "cw_mul",
      [](const Words& a, const Words& b, uint64_t q) {
        return polyring::cw_mul(
                   wrap(a, q, polyring::Reduction::NegacyclicXnPlus1),
                   wrap(b, q, polyring::Reduction::NegacyclicXnPlus1))
            .coeffs;
      },
      py::arg("a"), py::arg("b"), py::arg("q"));
  m.def(
      "convolution",
      [](const Words& a, const Words& b, uint64_t q) {
        return polyring::schoolbook_convolution(
                   wrap(a, q, polyring::Reduction::NegacyclicXnPlus1),
                   wrap(b, q, polyring::Reduction::NegacyclicXnPlus1))
            .coeffs;
      },
      py::arg("a"), py::arg("b"), py::arg("q"),
      "Full linear convolution, length 2n-1");
  m.def(
      "negacyclic_mul",
      [](const Words& a, const Words& b, uint64_t q) {
        auto pa = wrap(a, q, polyring::Reduction::NegacyclicXnPlus1);
        auto pb = wrap(b, q, polyring::Reduction::NegacyclicXnPlus1);
        auto table = ntt::make_table(a.size(), modmath::Modulus(q));
        return ntt::fast_negacyclic_mul(pa, pb, table).coeffs;
      },
      py::arg("a"), py::arg("b"), py::arg("q"),
      "Product in Z_q[x]/(x^n + 1) via the transform pipeline");
  m.def(
      "ntt_forward",
      [](const Words& a, uint64_t q) {
        auto p = wrap(a, q, polyring::Reduction::CyclicXnMinus1);
        auto table = ntt::make_table(a.size(), modmath::Modulus(q));
        return ntt::ntt_forward(p, table).coeffs;
      },
      py::arg("a"), py::arg("q"));
  m.def(
      "ntt_inverse",
      [](const Words& a, uint64_t q) {
        auto p = wrap(a, q, polyring::Reduction::CyclicXnMinus1);
        auto table = ntt::make_table(a.size(), modmath::Modulus(q));
        return ntt::ntt_inverse(p, table).coeffs;
      },
      py::arg("a"), py::arg("q"));

  py::class_<hekernels::Ciphertext>(m, "Ciphertext")
      .def_property_readonly("degree", &hekernels::Ciphertext::degree);
  py::class_<BfvContext>(m, "BfvContext")
      .def(py::init<uint64_t, uint64_t, uint64_t, uint64_t>(), py::arg("n"),
           py::arg("plaintext_modulus") = 65537, py::arg("q_bits") = 60,
           py::arg("seed") = 1)
      .def_property_readonly(
          "n", [](const BfvContext& c) { return c.params.ring.n; })
      .def_property_readonly(
          "q", [](const BfvContext& c) { return c.params.ring.modulus.q; })
      .def_property_readonly(
          "plaintext_modulus",
          [](const BfvContext& c) { return c.params.t; })
      .def("encrypt", &BfvContext::encrypt, py::arg("message"))
      .def("decrypt", &BfvContext::decrypt, py::arg("ciphertext"))
      .def("add", &BfvContext::add, py::arg("c1"), py::arg("c2"))
      .def("multiply", &BfvContext::multiply, py::arg("c1"), py::arg("c2"),
           "Tensor product followed by relinearization back to degree 1");

  m.def(
      "simulate",
      [](const std::string& op, const Words& a, const Words& b, uint64_t q,
         uint64_t dpus, uint64_t tasklets, bool allow_padding) {
        pimsim::DpuSystemConfig cfg;
        cfg.num_dpus = dpus;
        cfg.tasklets_per_dpu = tasklets;
        cfg.allow_padding = allow_padding;
        modmath::Modulus mod(q);
        pimsim::WorkflowResult r = [&] {
          if (op == "add")
            return pimsim::run_workflow(pimsim::DpuKernel::poly_add(mod),
                                        {a, b, {}}, cfg);
          if (op == "cwmul")
            return pimsim::run_workflow(pimsim::DpuKernel::cw_mul(mod),
                                        {a, b, {}}, cfg);
          if (op == "conv")
            return pimsim::run_workflow(pimsim::DpuKernel::convolution(mod),
                                        {a, b, {}}, cfg);
          if (op == "ntt") {
            auto table = ntt::make_table(a.size(), mod);
            return pimsim::run_workflow(
                pimsim::DpuKernel::butterfly_stage(mod),
                {a, {}, table.forward_twiddles}, cfg);
          }
          throw std::invalid_argument(
              "unknown op '" + op + "' (expected add, cwmul, conv, or ntt)");
        }();
        py::dict d = ledger_dict(r.ledger);
        d["result"] = r.result;
        return d;
      },
      py::arg("op"), py::arg("a"), py::arg("b"), py::arg("q"),
      py::arg("dpus") = 64, py::arg("tasklets") = 16,
      py::arg("allow_padding") = true,
      "Run one kernel on the simulated DPU system; returns the result "
      "together with the transfer ledger");

  m.def(
      "estimate",
      [](const std::string& op, uint64_t n, uint64_t dpus,
         uint64_t tasklets) {
        costmodel::CostParams p;
        p.dpu.num_dpus = dpus;
        p.dpu.tasklets_per_dpu = tasklets;
        auto est = costmodel::estimate(parse_op(op), n, p);
        py::dict d;
        d["cpu_time"] = est.cpu_time_s;
        d["dpu_kernel_time"] = est.dpu_kernel_time_s;
        d["host_dpu_time"] = est.host_dpu_time_s;
        d["dpu_host_time"] = est.dpu_host_time_s;
        d["dpu_total_time"] = est.dpu_total_s();
        d["alpha"] = est.alpha;
        d["host_dpu_bytes"] = est.host_dpu_bytes;
        d["dpu_host_bytes"] = est.dpu_host_bytes;
        return d;
      },
      py::arg("op"), py::arg("n"), py::arg("dpus") = 1024,
      py::arg("tasklets") = 16,
      "Analytic CPU and PIM cost breakdown under the default calibration");
  m.def(
      "crossover",
      [](const std::string& op) -> std::optional<uint64_t> {
        costmodel::CostParams p;
        return costmodel::crossover_n(parse_op(op), p);
      },
      py::arg("op"),
      "Smallest power-of-two size where the PIM estimate wins, or None");
  m.def(
      "alpha",
      [](const std::string& op, uint64_t n) {
        auto r = costmodel::alpha_ratio(parse_op(op), n);
        return py::make_tuple(r.num, r.den);
      },
      py::arg("op"), py::arg("n"),
      "Operations-per-transferred-element ratio as an exact fraction");
}
