// Python bindings for the core operations: dataset generation and the oracle,
// the DV bound and Gaussian MI harness, gradient checks, both training stages
// and leakage evaluation. Configs cross the boundary as JSON text.

#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mist/config.hpp"
#include "mist/evaluation.hpp"
#include "mist/mine.hpp"
#include "mist/selftest.hpp"
#include "mist/synth.hpp"
#include "mist/training.hpp"

namespace py = pybind11;
using namespace mist;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor::from(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

RunConfig parse(const std::string& config_json) {
  return config_json.empty() ? RunConfig{} : run_config_from_json(json::parse(config_json));
}

double round_trip_ter(const std::string& config_json, std::size_t n, double noise_scale, std::uint64_t seed) {
  RunConfig c = parse(config_json);
  World w = make_world(c.dataset);
  Rng rng = Rng::stream(seed, "roundtrip");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> tokens(c.dataset.min_length + rng.index(c.dataset.max_length - c.dataset.min_length + 1));
    for (auto& t : tokens) t = rng.index(c.dataset.vocab);
    const std::size_t style = rng.index(c.dataset.num_styles);
    Frames f = render(w, tokens, style, rng, noise_scale);
    total += token_error_rate(oracle_recognize(w, f).tokens, tokens);
  }
  return total / static_cast<double>(n);
}

py::dict train_and_evaluate(const std::string& config_json, const std::string& data_dir) {
  RunConfig c = parse(config_json);
  Dataset d = read_dataset(data_dir);
  c.dataset = d.world.config;
  PretrainResult pre = pretrain(d.splits.pretrain, d.splits.heldout, c.model, c.train);
  TrainResult tr = train_mist(d.splits.train, pre.content_encoder, c.model, c.train);
  LeakageReport rep = evaluate_leakage(tr.model, d.world, d.splits.eval_pairs);
  py::dict out;
  out["heldout_l1"] = pre.heldout_l1;
  out["epoch_recon"] = tr.epoch_recon;
  out["mean_ter"] = rep.mean_ter;
  out["style_match_rate"] = rep.style_match_rate;
  out["ter"] = rep.ter;
  return out;
}

}  // namespace

PYBIND11_MODULE(_mist, m) {
  m.doc() = "MIST core: style/content disentanglement by adversarial MI minimization";

  m.def("default_config", [] { return run_config_to_json(RunConfig{}).dump(); });
  m.def("config_hash", [](const std::string& cfg) { return config_hash(parse(cfg)); }, py::arg("config_json"));

  m.def("softmax", [](const Array& a) { return to_array(softmax(to_tensor(a))); }, py::arg("x"));
  m.def("log_sum_exp", [](const Array& a) { return log_sum_exp(to_tensor(a)).item(); }, py::arg("x"));
  m.def(
      "dv_bound",
      [](const Array& joint, const Array& marginal) {
        MineEstimate e = dv_from_statistics(to_tensor(joint), to_tensor(marginal));
        return py::make_tuple(e.raw_value(), e.clipped_value());
      },
      py::arg("joint"), py::arg("marginal"), "DV bound from statistics values: returns (raw, clipped).");
  m.def(
      "estimate_gaussian_mi",
      [](double rho, std::size_t steps, std::uint64_t seed) {
        Rng rng = Rng::stream(seed, "gaussian_mi");
        py::gil_scoped_release release;
        return estimate_gaussian_mi(rho, steps, rng);
      },
      py::arg("rho"), py::arg("steps") = 3000, py::arg("seed") = 0);

  m.def("gradient_cases", [] {
    std::vector<std::string> names;
    for (const auto& c : op_gradient_cases()) names.push_back("op:" + c.name);
    for (const auto& c : network_gradient_cases()) names.push_back("net:" + c.name);
    return names;
  });
  m.def(
      "gradient_check",
      [](const std::string& name, std::uint64_t seed) {
        for (const auto& [prefix, cases] : {std::pair{std::string("op:"), op_gradient_cases()},
                                            std::pair{std::string("net:"), network_gradient_cases()}})
          for (const auto& c : cases)
            if (prefix + c.name == name) return run_gradient_case(c, seed).max_rel_error();
        throw py::key_error("unknown gradient case: " + name);
      },
      py::arg("name"), py::arg("seed") = 0, "Max relative error of backward() against central differences.");

  m.def(
      "generate_dataset",
      [](const std::string& cfg, const std::string& out_dir) {
        World w = make_world(parse(cfg).dataset);
        write_dataset(out_dir, w, make_splits(w));
        return w.separable;
      },
      py::arg("config_json"), py::arg("out_dir"), "Writes the dataset; returns the separability check result.");
  m.def("round_trip_ter", &round_trip_ter, py::arg("config_json"), py::arg("n") = 1000, py::arg("noise_scale") = 0.0,
        py::arg("seed") = 0, "Mean oracle TER over rendered utterances.");
  m.def(
      "pretrain_heldout_l1",
      [](const std::string& cfg, const std::string& data_dir) {
        RunConfig c = parse(cfg);
        Dataset d = read_dataset(data_dir);
        py::gil_scoped_release release;
        return pretrain(d.splits.pretrain, d.splits.heldout, c.model, c.train).heldout_l1;
      },
      py::arg("config_json"), py::arg("data_dir"));
  m.def("train_and_evaluate", &train_and_evaluate, py::arg("config_json"), py::arg("data_dir"),
        "Both training stages then leakage evaluation.");
  m.def(
      "selftest",
      [](const std::string& fault_op) {
        std::ostringstream sink;
        std::vector<py::tuple> out;
        for (const auto& c : run_selftest({.fault_op = fault_op}, sink)) out.push_back(py::make_tuple(c.name, c.ok, c.detail));
        return out;
      },
      py::arg("fault_op") = "");
}
