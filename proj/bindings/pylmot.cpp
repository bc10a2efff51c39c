// Python bindings for the core operations: tensor numerics, the adaptive
// low-pass downsampling block and its losses, noise synthesis, the tracker,
// and the evaluation metrics. NumPy arrays cross the boundary as copies.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "lmot/ald.hpp"
#include "lmot/gradsuite.hpp"
#include "lmot/hungarian.hpp"
#include "lmot/metrics.hpp"
#include "lmot/mot_io.hpp"
#include "lmot/noise.hpp"
#include "lmot/toy.hpp"
#include "lmot/tracker.hpp"

namespace py = pybind11;
using namespace lmot;
using numerics::Tensor;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 4) throw lmot::DimensionError("expected a 4-D (N,C,H,W) array");
    std::vector<double> data(a.data(), a.data() + a.size());
    return Tensor::from_data(a.shape(0), a.shape(1), a.shape(2), a.shape(3), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    py::array_t<double> out({t.n(), t.c(), t.h(), t.w()});
    std::memcpy(out.mutable_data(), t.data().data(), t.data().size() * sizeof(double));
    return out;
}

noise::NoiseParams params_from_kwargs(const std::string& kind, double K, double sigma_read,
                                      double sigma_row, double quant_step, double gp_a, double gp_b,
                                      double ratio) {
    noise::NoiseParams p;
    if (kind == "physics") p.kind = noise::NoiseKind::Physics;
    else if (kind == "gaussian_poisson") p.kind = noise::NoiseKind::GaussianPoisson;
    else throw lmot::ContractViolation("kind must be 'physics' or 'gaussian_poisson'");
    p.K = K;
    p.sigma_read = sigma_read;
    p.sigma_row = sigma_row;
    p.quant_step = quant_step;
    p.gp_a = gp_a;
    p.gp_b = gp_b;
    p.ratio = ratio;
    p.validate();
    return p;
}

}  // namespace

PYBIND11_MODULE(pylmot, m) {
    m.doc() = "Low-light tracking toolkit: numerics, downsampling block, noise model, "
              "tracker and metrics";

    // ---- numerics ----
    m.def(
        "conv2d",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& input,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& kernel, int stride,
           const std::string& padding, int pad, int groups) {
            numerics::Conv2dSpec spec;
            spec.stride = stride;
            spec.pad = pad;
            spec.groups = groups;
            if (padding == "zero") spec.padding = numerics::Padding::Zero;
            else if (padding == "reflect") spec.padding = numerics::Padding::Reflect;
            else throw lmot::ContractViolation("padding must be 'zero' or 'reflect'");
            return array_from_tensor(numerics::conv2d(tensor_from_array(input), tensor_from_array(kernel), spec));
        },
        py::arg("input"), py::arg("kernel"), py::arg("stride") = 1, py::arg("padding") = "zero",
        py::arg("pad") = 0, py::arg("groups") = 1,
        "Cross-correlation of (N,Cin,H,W) input with (Cout,Cin/groups,k,k) kernel.");

    m.def(
        "softmax_kernel",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits, int groups) {
            return array_from_tensor(numerics::softmax_normalize({tensor_from_array(logits), groups}));
        },
        py::arg("logits"), py::arg("groups") = 1,
        "Per-filter softmax over the (Cin/groups,k,k) support; positive, unit-sum filters.");

    m.def("gaussian_kernel_5x5", [] { return array_from_tensor(ald::gaussian_kernel_5x5()); },
          "The normalized discrete sigma=1 5x5 Gaussian used to initialize the low-pass branch.");

    m.def(
        "run_gradient_suite",
        [](int seeds, double eps, double tol) {
            py::dict out;
            for (const auto& r : gradsuite::run_suite(seeds, eps, tol, false)) {
                out[py::str(r.name)] = py::make_tuple(r.pass, r.max_rel_err);
            }
            return out;
        },
        py::arg("seeds") = 5, py::arg("eps") = 1e-5, py::arg("tol") = 1e-4,
        "Run the analytic-vs-central-difference gradient checks; returns {op: (pass, max_rel_err)}.");

    // ---- downsampling block ----
    py::class_<ald::ALDBlock>(m, "DownsampleBlock")
        .def(py::init([](int channels, std::uint64_t seed) { return ald::ald_init(channels, seed); }),
             py::arg("channels"), py::arg("seed"))
        .def_readonly("channels", &ald::ALDBlock::channels)
        .def("forward",
             [](const ald::ALDBlock& block,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
                 ald::ALDCache cache;
                 py::array_t<double> y = array_from_tensor(ald::ald_forward(block, tensor_from_array(x), cache));
                 return py::make_tuple(y, array_from_tensor(cache.fusion_weights));
             },
             py::arg("x"),
             "Half-resolution output plus the per-channel fusion weights, as (y, w).");

    m.def(
        "feature_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& well,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& low) {
            return ald::loss_ds({tensor_from_array(well)}, {tensor_from_array(low)}).value;
        },
        py::arg("well_lit"), py::arg("low_light"), "Sum of squared feature differences.");

    m.def(
        "smoothness_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& f) {
            return ald::loss_tv({tensor_from_array(f)}).value;
        },
        py::arg("features"), "Sum of squared first differences along both spatial axes.");

    m.def(
        "total_loss",
        [](double det_well, double det_low, double feat, double smooth, double alpha, double beta,
           double gamma) {
            return ald::loss_total(det_well, det_low, feat, smooth, {alpha, beta, gamma, false});
        },
        py::arg("det_well"), py::arg("det_low"), py::arg("feature"), py::arg("smoothness"),
        py::arg("alpha") = 1.0, py::arg("beta") = 1.0, py::arg("gamma") = 0.01);

    // ---- noise model ----
    m.def(
        "synthesize_noise",
        [](const py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>& clean,
           std::uint64_t seed, const std::string& kind, double K, double sigma_read, double sigma_row,
           double quant_step, double gp_a, double gp_b, double ratio, int frame_index) {
            if (clean.ndim() != 2) throw lmot::DimensionError("expected a 2-D uint16 array");
            raw::RawFrame f;
            f.height = static_cast<int>(clean.shape(0));
            f.width = static_cast<int>(clean.shape(1));
            f.frame_index = frame_index;
            f.data.assign(clean.data(), clean.data() + clean.size());
            raw::RawFrame noisy = noise::synthesize(
                f, params_from_kwargs(kind, K, sigma_read, sigma_row, quant_step, gp_a, gp_b, ratio), seed);
            py::array_t<std::uint16_t> out({static_cast<py::ssize_t>(noisy.height),
                                            static_cast<py::ssize_t>(noisy.width)});
            std::memcpy(out.mutable_data(), noisy.data.data(), noisy.data.size() * sizeof(std::uint16_t));
            return out;
        },
        py::arg("clean"), py::arg("seed"), py::arg("kind") = "physics", py::arg("K") = 1.0,
        py::arg("sigma_read") = 1.0, py::arg("sigma_row") = 0.0, py::arg("quant_step") = 0.0,
        py::arg("gp_a") = 0.0, py::arg("gp_b") = 0.0, py::arg("ratio") = 1.0, py::arg("frame_index") = 0,
        "Darken and noise a clean 2-D uint16 frame; deterministic per (inputs, seed).");

    m.def(
        "noise_model_variance",
        [](double s, const std::string& kind, double K, double sigma_read, double sigma_row,
           double quant_step, double gp_a, double gp_b, double ratio) {
            return noise::model_variance(
                s, params_from_kwargs(kind, K, sigma_read, sigma_row, quant_step, gp_a, gp_b, ratio));
        },
        py::arg("signal"), py::arg("kind") = "physics", py::arg("K") = 1.0, py::arg("sigma_read") = 1.0,
        py::arg("sigma_row") = 0.0, py::arg("quant_step") = 0.0, py::arg("gp_a") = 0.0,
        py::arg("gp_b") = 0.0, py::arg("ratio") = 1.0);

    // ---- tracking ----
    m.def(
        "iou",
        [](double ax, double ay, double aw, double ah, double bx, double by, double bw, double bh) {
            return track::iou({ax, ay, aw, ah}, {bx, by, bw, bh});
        },
        py::arg("ax"), py::arg("ay"), py::arg("aw"), py::arg("ah"), py::arg("bx"), py::arg("by"),
        py::arg("bw"), py::arg("bh"), "IoU of two (x, y, w, h) boxes.");

    m.def(
        "hungarian",
        [](const std::vector<std::vector<double>>& cost) {
            track::Assignment a = track::hungarian(cost);
            return py::make_tuple(a.pairs, a.total_cost);
        },
        py::arg("cost"), "Minimum-cost maximum-cardinality assignment; returns (pairs, total_cost).");

    m.def(
        "run_tracker",
        [](const std::vector<std::tuple<int, double, double, double, double, double, int>>& detections,
           bool interpolate) {
            std::map<int, std::vector<track::Detection>> by_frame;
            for (const auto& [frame, x, y, w, h, score, cls] : detections) {
                track::Detection d;
                d.frame = frame;
                d.box = {x, y, w, h};
                d.score = score;
                d.class_id = cls;
                by_frame[frame].push_back(d);
            }
            track::TrackerConfig cfg;
            track::TrackerEngine engine(cfg);
            std::vector<track::ResultRow> rows;
            for (const auto& [frame, dets] : by_frame) {
                auto out = engine.step(frame, dets);
                rows.insert(rows.end(), out.begin(), out.end());
            }
            if (interpolate) rows = track::linear_interpolation(std::move(rows), cfg.interp_max_gap);
            std::vector<std::tuple<int, int, double, double, double, double, double, int>> out;
            for (const auto& r : rows)
                out.emplace_back(r.frame, r.id, r.box.x, r.box.y, r.box.w, r.box.h, r.score, r.class_id);
            return out;
        },
        py::arg("detections"), py::arg("interpolate") = true,
        "Track detections given as (frame, x, y, w, h, score, class_id) tuples; returns "
        "(frame, id, x, y, w, h, score, class_id) rows.");

    // ---- evaluation ----
    m.def(
        "evaluate",
        [](const std::vector<std::tuple<int, int, double, double, double, double, int>>& gt_rows,
           const std::vector<std::tuple<int, int, double, double, double, double, int>>& pred_rows,
           const std::string& mode) {
            io::ParsedTable gt;
            for (const auto& [frame, id, x, y, w, h, cls] : gt_rows)
                gt.records.push_back({frame, id, x, y, w, h, 1.0, cls, 1.0});
            std::vector<track::ResultRow> pred;
            for (const auto& [frame, id, x, y, w, h, cls] : pred_rows)
                pred.push_back({frame, id, {x, y, w, h}, 1.0, cls});
            metrics::CombineMode cm =
                mode == "class_avg" ? metrics::CombineMode::ClassAvg : metrics::CombineMode::DetAvg;
            metrics::EvalReport r = metrics::evaluate(gt, pred, cm);
            py::dict out;
            out["hota"] = r.scalars.hota;
            out["deta"] = r.scalars.deta;
            out["assa"] = r.scalars.assa;
            out["loca"] = r.scalars.loca;
            out["mota"] = r.scalars.mota;
            out["idf1"] = r.scalars.idf1;
            out["idsw"] = r.scalars.idsw;
            out["fp"] = r.scalars.fp;
            out["fn"] = r.scalars.fn;
            out["mota_defined"] = r.scalars.mota_defined;
            return out;
        },
        py::arg("gt"), py::arg("pred"), py::arg("mode") = "det_avg",
        "Evaluate (frame, id, x, y, w, h, class_id) tuples; returns the scalar metrics.");

    // ---- toy training ----
    m.def(
        "toy_train",
        [](bool use_dsl, int steps, std::uint64_t seed) {
            ald::ToyTrainConfig cfg;
            cfg.use_dsl = use_dsl;
            cfg.steps = steps;
            cfg.seed = seed;
            ald::ToyReport r = ald::toy_train(cfg);
            py::dict out;
            out["heldout_feature_distance"] = r.heldout_feature_distance;
            out["heldout_det_loss_well"] = r.heldout_det_loss_well;
            out["heldout_det_loss_low"] = r.heldout_det_loss_low;
            out["final_train_loss"] = r.final_train_loss;
            return out;
        },
        py::arg("use_dsl") = true, py::arg("steps") = 100, py::arg("seed") = 7,
        "Train the small detector on synthetic blob scenes and report held-out numbers.");

    // map the library's error taxonomy onto Python exceptions
    py::register_exception<lmot::ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<lmot::DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<lmot::ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<lmot::IoError>(m, "IoError", PyExc_IOError);
}
