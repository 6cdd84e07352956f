// NumPy-facing wrapper over the core library.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "thinslice/commands.hpp"
#include "thinslice/distance_transform.hpp"
#include "thinslice/errors.hpp"
#include "thinslice/evaluation.hpp"
#include "thinslice/selfcheck.hpp"
#include "thinslice/synthetic.hpp"
#include "thinslice/warp.hpp"

namespace py = pybind11;
using namespace thinslice;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Heatmap to_heatmap(const Array& a) {
  if (a.ndim() != 2) throw ArgumentError("expected a 2-D array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return Heatmap(h, w, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_heatmap(const Heatmap& m) {
  Array out({m.height(), m.width()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

HeatmapSequence to_sequence(const Array& a) {
  if (a.ndim() != 4) throw ArgumentError("unaries must have shape (T, K, H, W)");
  const int t = static_cast<int>(a.shape(0)), k = static_cast<int>(a.shape(1));
  const int h = static_cast<int>(a.shape(2)), w = static_cast<int>(a.shape(3));
  HeatmapSequence s(t, k, h, w);
  const double* p = a.data();
  for (Heatmap& m : s.maps()) {
    std::copy(p, p + m.size(), m.values().begin());
    p += m.size();
  }
  return s;
}

Array from_sequence(const HeatmapSequence& s) {
  Array out({s.frames(), s.parts(), s.height(), s.width()});
  double* p = out.mutable_data();
  for (const Heatmap& m : s.maps()) p = std::copy(m.values().begin(), m.values().end(), p);
  return out;
}

// (P, 2, H, W): dx then dy per stored pair.
FlowSet to_flows(const Array& a, int frames) {
  if (a.size() == 0) return FlowSet(frames, {});
  if (a.ndim() != 4 || a.shape(1) != 2) throw ArgumentError("flows must have shape (P, 2, H, W)");
  const int h = static_cast<int>(a.shape(2)), w = static_cast<int>(a.shape(3));
  std::vector<FlowField> fields;
  const double* p = a.data();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    FlowField f(h, w);
    std::copy(p, p + f.size(), f.dx_values().begin());
    p += f.size();
    std::copy(p, p + f.size(), f.dy_values().begin());
    p += f.size();
    fields.push_back(std::move(f));
  }
  return FlowSet(frames, std::move(fields));
}

Array from_flows(const FlowSet& flows, int h, int w) {
  Array out({static_cast<py::ssize_t>(flows.fields().size()), py::ssize_t{2},
             static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w)});
  double* p = out.mutable_data();
  for (const FlowField& f : flows.fields()) {
    p = std::copy(f.dx_values().begin(), f.dx_values().end(), p);
    p = std::copy(f.dy_values().begin(), f.dy_values().end(), p);
  }
  return out;
}

// (T, K, 3): x, y, visible.
Array from_track(const JointTrack& t) {
  Array out({t.frames(), t.parts(), 3});
  double* p = out.mutable_data();
  for (int f = 0; f < t.frames(); ++f) {
    for (int k = 0; k < t.parts(); ++k) {
      const Joint& j = t.at(f, k);
      *p++ = j.x;
      *p++ = j.y;
      *p++ = j.visible ? 1.0 : 0.0;
    }
  }
  return out;
}

JointTrack to_track(const Array& a) {
  if (a.ndim() != 3 || (a.shape(2) != 2 && a.shape(2) != 3)) {
    throw ArgumentError("tracks must have shape (T, K, 2) or (T, K, 3)");
  }
  JointTrack t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  const double* p = a.data();
  const auto stride = a.shape(2);
  for (int f = 0; f < t.frames(); ++f) {
    for (int k = 0; k < t.parts(); ++k) {
      t.at(f, k) = {p[0], p[1], stride == 3 ? p[2] != 0.0 : true};
      p += stride;
    }
  }
  return t;
}

PartGraph graph_from(const py::object& g) {
  if (py::isinstance<py::str>(g)) return build_graph(builtin_graph_spec(g.cast<std::string>()));
  const py::object dumps = py::module_::import("json").attr("dumps");
  return build_graph(graph_spec_from_json(nlohmann::json::parse(dumps(g).cast<std::string>())));
}

InferenceMode mode_from(const std::string& s) {
  if (s == "paper") return InferenceMode::kPaper;
  if (s == "bp") return InferenceMode::kBp;
  throw ArgumentError("mode must be \"paper\" or \"bp\"");
}

SpringParams params_from(const PartGraph& g, const py::object& params) {
  if (params.is_none()) return init_spring_params(g);
  const Array a = params.cast<Array>();
  if (a.ndim() != 2 || a.shape(0) != g.slot_count() || a.shape(1) != 4) {
    throw ArgumentError("params must have shape (slots, 4)");
  }
  SpringParams p;
  for (int s = 0; s < g.slot_count(); ++s) {
    p.springs.push_back({a.at(s, 0), a.at(s, 1), a.at(s, 2), a.at(s, 3)});
  }
  return clamp_spring_params(p);
}

}  // namespace

PYBIND11_MODULE(_thinslice, m) {
  m.doc() = "Spatio-temporal part-graph inference over thin video slices";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);

  m.def("gdt_1d", [](const Array& score, double w_quad, double w_lin) {
    const Dt1dResult r = gdt_1d({score.data(), static_cast<std::size_t>(score.size())}, w_quad, w_lin);
    return py::make_tuple(py::array_t<double>(r.values.size(), r.values.data()),
                          py::array_t<int>(r.argmax.size(), r.argmax.data()));
  }, py::arg("score"), py::arg("w_quad"), py::arg("w_lin") = 0.0,
     "max_j score[j] - w_quad (j-i)^2 - w_lin (j-i) and its argmax.");

  m.def("gdt_2d", [](const Array& score, std::array<double, 4> w) {
    const DtResult r = gdt_2d(to_heatmap(score), Spring::from_array(w));
    py::array_t<int> arg({r.values.height(), r.values.width()});
    std::copy(r.argmax.begin(), r.argmax.end(), arg.mutable_data());
    return py::make_tuple(from_heatmap(r.values), arg);
  }, py::arg("score"), py::arg("spring"),
     "Max-sum distance transform; spring = (x_lin, x_quad, y_lin, y_quad).");

  m.def("bilinear_sample", [](const Array& map, double x, double y) {
    return bilinear_sample(to_heatmap(map), x, y);
  }, py::arg("map"), py::arg("x"), py::arg("y"));

  m.def("warp", [](const Array& map, const Array& dx, const Array& dy) {
    const Heatmap hx = to_heatmap(dx), hy = to_heatmap(dy);
    FlowField f(hx.height(), hx.width());
    std::copy(hx.values().begin(), hx.values().end(), f.dx_values().begin());
    std::copy(hy.values().begin(), hy.values().end(), f.dy_values().begin());
    return from_heatmap(warp_heatmap(to_heatmap(map), f));
  }, py::arg("map"), py::arg("dx"), py::arg("dy"));

  m.def("slot_count", [](const py::object& graph) { return graph_from(graph).slot_count(); },
        py::arg("graph"));

  m.def("init_params", [](const py::object& graph) {
    const PartGraph g = graph_from(graph);
    Array out({g.slot_count(), 4});
    const SpringParams p = init_spring_params(g);
    for (int s = 0; s < g.slot_count(); ++s) {
      const auto w = p.springs[static_cast<std::size_t>(s)].as_array();
      std::copy(w.begin(), w.end(), out.mutable_data() + 4 * s);
    }
    return out;
  }, py::arg("graph"));

  m.def("predict", [](const Array& unaries, const Array& flows, const py::object& graph,
                      const std::string& model, const py::object& params, int iterations,
                      const std::string& mode, bool normalize) {
    const HeatmapSequence u = to_sequence(unaries);
    const PartGraph g = graph_from(graph);
    const InferenceConfig cfg{iterations, mode_from(mode), normalize};
    return from_track(predict(parse_model(model), u, to_flows(flows, u.frames()), g,
                              params_from(g, params), cfg));
  }, py::arg("unaries"), py::arg("flows"), py::arg("graph") = "penn13",
     py::arg("model") = "st-infer", py::arg("params") = py::none(),
     py::arg("iterations") = 3, py::arg("mode") = "paper", py::arg("normalize") = true,
     "Decoded joints (T, K, 3) for baseline, s-infer or st-infer.");

  m.def("generate_slice", [](const py::object& graph, std::uint64_t seed, int frames,
                             int height, int width, double occlusion_prob,
                             double distractor_prob, double blur_sigma,
                             double noise_sigma, double flow_noise) {
    SliceOptions o;
    o.frames = frames;
    o.height = height;
    o.width = width;
    o.corruption = {occlusion_prob, distractor_prob, blur_sigma, noise_sigma, 0};
    o.flow_noise = flow_noise;
    const SyntheticSlice s = generate_slice(graph_from(graph), o, seed);
    py::dict d;
    d["unaries"] = from_sequence(s.unaries);
    d["flows"] = from_flows(s.flows, height, width);
    d["track"] = from_track(s.track);
    return d;
  }, py::arg("graph") = "penn13", py::arg("seed") = 0, py::arg("frames") = 5,
     py::arg("height") = 48, py::arg("width") = 48, py::arg("occlusion_prob") = 0.0,
     py::arg("distractor_prob") = 0.0, py::arg("blur_sigma") = 0.0,
     py::arg("noise_sigma") = 0.0, py::arg("flow_noise") = 0.0);

  m.def("pck", [](const Array& pred, const Array& truth, double alpha) {
    const PckReport r = pck(to_track(pred), to_track(truth), alpha);
    py::dict d;
    d["alpha"] = r.alpha;
    d["per_part"] = r.per_part;
    d["mean"] = r.mean;
    d["counts"] = r.counts;
    return d;
  }, py::arg("pred"), py::arg("truth"), py::arg("alpha") = 0.2);

  m.def("hinge_loss", [](const Array& pred, const Array& truth, double radius) {
    const LossResult r = hinge_loss(to_sequence(pred), to_track(truth), radius);
    return py::make_tuple(r.loss, from_sequence(r.gradient));
  }, py::arg("pred"), py::arg("truth"), py::arg("radius") = 2.0);

  m.def("selfcheck", [](std::uint64_t seed, double effort) {
    SelfCheckOptions o;
    o.seed = seed;
    o.effort = effort;
    py::list out;
    for (const SuiteResult& r : run_selfcheck(o)) {
      py::dict d;
      d["name"] = r.name;
      d["cases"] = r.cases;
      d["failures"] = r.failures;
      d["max_error"] = r.max_error;
      d["passed"] = r.passed();
      out.append(d);
    }
    return out;
  }, py::arg("seed") = 1, py::arg("effort") = 0.2);
}
