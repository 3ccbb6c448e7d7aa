#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "actsub/error.hpp"
#include "actsub/eval.hpp"
#include "actsub/linalg.hpp"
#include "actsub/scoring.hpp"
#include "actsub/store.hpp"
#include "actsub/subspace.hpp"
#include "actsub/synth.hpp"
#include "cli.hpp"
#include "pipeline.hpp"

namespace py = pybind11;
using namespace actsub;
using linalg::Mat;
using linalg::Vec;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Mat to_mat(const Array& a) {
  if (a.ndim() != 2) throw InvalidInput("expected a 2-D array");
  const auto* p = a.data();
  return Mat(a.shape(0), a.shape(1), std::vector<double>(p, p + a.size()));
}

Vec to_vec(const Array& a) {
  if (a.ndim() != 1) throw InvalidInput("expected a 1-D array");
  return Vec(a.data(), a.data() + a.size());
}

Array from_mat(const Mat& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array from_vec(const Vec& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ActivationBank make_bank(const Array& features, std::optional<std::vector<std::uint32_t>> labels) {
  return ActivationBank(to_mat(features), std::move(labels));
}

WeightHead make_head(const Array& w, std::optional<Array> bias) {
  WeightHead h;
  h.w = to_mat(w);
  if (bias) h.bias = to_vec(*bias);
  return h;
}

py::dict world_dict(const World& w) {
  py::dict d;
  d["head"] = w.head;
  d["train"] = w.train;
  d["id_test"] = w.id_test;
  d["ood_test"] = w.ood_test;
  if (w.val_id) d["val_id"] = *w.val_id;
  if (w.val_ood) d["val_ood"] = *w.val_ood;
  return d;
}

// Calibrated detector assembled from keyword settings.
class PyDetector {
 public:
  PyDetector(const WeightHead& head, const ActivationBank& train, double lambda, std::optional<std::size_t> k,
             const std::string& shaping, double p, const std::string& basis, std::size_t top_n,
             double sample_fraction, std::uint64_t seed)
      : det_(make(head, train, lambda, k, shaping, p, basis, top_n, sample_fraction, seed)) {}

  Array score(const std::string& method, const Array& rows) const {
    return from_vec(det_.score_batch(parse_score_method(method), to_mat(rows)).scores);
  }
  std::size_t k() const { return det_.subspaces().k; }
  Array v_dec() const { return from_mat(det_.subspaces().v_dec); }
  Array v_insig() const { return from_mat(det_.subspaces().v_insig); }

 private:
  static Detector make(const WeightHead& head, const ActivationBank& train, double lambda,
                       std::optional<std::size_t> k, const std::string& shaping, double p, const std::string& basis,
                       std::size_t top_n, double sample_fraction, std::uint64_t seed) {
    store::RunConfig cfg;
    cfg.lambda = lambda;
    cfg.k = k;
    cfg.shaping_method = parse_shaping_method(shaping);
    cfg.shaping_p = p;
    cfg.basis = parse_basis_kind(basis);
    cfg.top_n = top_n;
    cfg.sample_fraction = sample_fraction;
    cfg.seed = seed;
    const cli::Calibration cal = cli::prepare(head, train, cfg);
    return cli::build_detector(cal, cfg, train.size());
  }

  Detector det_;
};

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"actsub"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ActSub core bindings";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<ActivationBank>(m, "ActivationBank")
      .def(py::init(&make_bank), py::arg("features"), py::arg("labels") = std::nullopt)
      .def_property_readonly("features", [](const ActivationBank& b) { return from_mat(b.features()); })
      .def_property_readonly("labels", [](const ActivationBank& b) { return b.labels(); })
      .def("__len__", &ActivationBank::size)
      .def_property_readonly("dim", &ActivationBank::dim);

  py::class_<WeightHead>(m, "WeightHead")
      .def(py::init(&make_head), py::arg("w"), py::arg("bias") = std::nullopt)
      .def_property_readonly("w", [](const WeightHead& h) { return from_mat(h.w); })
      .def_property_readonly("bias",
                             [](const WeightHead& h) -> std::optional<Array> {
                               if (!h.bias) return std::nullopt;
                               return from_vec(*h.bias);
                             })
      .def("logits", [](const WeightHead& h, const Array& a, bool with_bias) { return from_vec(h.logits(to_vec(a), with_bias)); },
           py::arg("a"), py::arg("with_bias") = false);

  py::class_<PyDetector>(m, "Detector")
      .def(py::init<const WeightHead&, const ActivationBank&, double, std::optional<std::size_t>, const std::string&,
                    double, const std::string&, std::size_t, double, std::uint64_t>(),
           py::arg("head"), py::arg("train"), py::arg("lam") = 1.0, py::arg("k") = std::nullopt,
           py::arg("shaping") = "scale", py::arg("p") = 0.85, py::arg("basis") = "svd", py::arg("top_n") = 10,
           py::arg("sample_fraction") = 0.1, py::arg("seed") = 0)
      .def("score", &PyDetector::score, py::arg("method"), py::arg("rows"))
      .def_property_readonly("k", &PyDetector::k)
      .def_property_readonly("v_dec", &PyDetector::v_dec)
      .def_property_readonly("v_insig", &PyDetector::v_insig);

  m.def("softmax", [](const Array& l) { return from_vec(softmax(to_vec(l))); });
  m.def("msp_score", [](const Array& l) { return msp_score(to_vec(l)); });
  m.def("energy_score", [](const Array& l) { return energy_score(to_vec(l)); });
  m.def("percentile", [](const Array& v, double p) { return linalg::percentile(to_vec(v), p); });
  m.def("auroc", [](const Array& id, const Array& ood) { return auroc(to_vec(id), to_vec(ood)); });
  m.def("fpr_at_tpr",
        [](const Array& id, const Array& ood, double tpr) { return fpr_at_tpr(to_vec(id), to_vec(ood), tpr); },
        py::arg("id"), py::arg("ood"), py::arg("tpr") = 0.95);
  m.def("select_k", [](const WeightHead& h, const ActivationBank& train) { return select_k(factorize(h), train); });

  m.def("read_actb", [](const std::filesystem::path& p) { return store::read_actb(p); });
  m.def("write_actb", [](const std::filesystem::path& p, const ActivationBank& b) { store::write_actb(p, b); });
  m.def("read_wgt", [](const std::filesystem::path& p) { return store::read_wgt(p); });
  m.def("write_wgt", [](const std::filesystem::path& p, const WeightHead& h) { store::write_wgt(p, h); });

  m.def("gen_world", [](const std::string& spec_text) { return world_dict(gen_world(store::parse_synth_spec(spec_text))); },
        py::arg("spec") = "");
  m.def("run_cli", &run_cli, py::arg("args"));
}
