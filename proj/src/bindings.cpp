#include "sgsplat/convert.hpp"
#include "sgsplat/metrics.hpp"
#include "sgsplat/synth.hpp"
#include "sgsplat/train.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace sgsplat;

namespace {

py::array_t<double> image_to_numpy(const Image& img) {
    py::array_t<double> arr({img.height, img.width, img.channels});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
}

Image numpy_to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3) throw InvalidArgument("image array must have shape (H, W, C)");
    Image img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)),
              static_cast<int>(arr.shape(2)));
    std::copy(arr.data(), arr.data() + img.size(), img.data.begin());
    return img;
}

RenderConfig make_config(int tile_size, std::pair<double, double> thresholds, int threads,
                         int degree_override) {
    RenderConfig cfg;
    cfg.tile_size = tile_size;
    cfg.degree_threshold_lo = thresholds.first;
    cfg.degree_threshold_hi = thresholds.second;
    cfg.threads = threads;
    if (degree_override >= 0) cfg.sh_degree_override = degree_override;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gaussian splatting with spherical-gaussian color models";

    py::register_exception<InvalidArgument>(m, "InvalidArgumentError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<Camera>(m, "Camera")
        .def(py::init<>())
        .def_readwrite("fx", &Camera::fx)
        .def_readwrite("fy", &Camera::fy)
        .def_readwrite("cx", &Camera::cx)
        .def_readwrite("cy", &Camera::cy)
        .def_readwrite("width", &Camera::width)
        .def_readwrite("height", &Camera::height)
        .def_readwrite("near", &Camera::near)
        .def_readwrite("rotation", &Camera::rotation)
        .def_readwrite("translation", &Camera::translation)
        .def("center", &Camera::center);

    m.def("load_camera", &load_camera_json, py::arg("path"));
    m.def("save_camera", &save_camera_json, py::arg("camera"), py::arg("path"));
    m.def("orbit_camera", &make_orbit_camera, py::arg("target"), py::arg("distance"),
          py::arg("angle"), py::arg("elevation"), py::arg("width"), py::arg("height"),
          py::arg("focal"));

    py::class_<Scene>(m, "Scene")
        .def(py::init<>())
        .def_property_readonly("num_gaussians",
                               [](const Scene& s) { return s.gaussians.size(); })
        .def_property_readonly("model_kind",
                               [](const Scene& s) { return std::string(to_string(s.model_kind())); })
        .def_property(
            "background", [](const Scene& s) { return s.background; },
            [](Scene& s, const Vec3& bg) { s.background = bg; })
        .def_property(
            "shared_axes", [](const Scene& s) { return s.shared_axes; },
            [](Scene& s, const Mat3& axes) { s.set_shared_axes(axes); })
        .def("param_count_per_gaussian",
             [](const Scene& s) {
                 return s.gaussians.empty() ? 0 : param_count(s.gaussians.front().color);
             })
        .def("total_params", &Scene::total_params);

    m.def("load_scene", &load_ply, py::arg("path"));
    m.def(
        "save_scene",
        [](const Scene& scene, const std::string& path, const std::string& layout) {
            PlyLayout l = detect_layout(scene);
            if (layout == "reference") l = PlyLayout::Reference3DGS;
            else if (layout == "extended") l = PlyLayout::SGExtended;
            else if (layout != "auto") throw InvalidArgument("layout must be auto, reference or extended");
            save_ply(scene, path, l);
        },
        py::arg("scene"), py::arg("path"), py::arg("layout") = "auto");

    m.def(
        "synth_scene",
        [](std::size_t count, const std::string& model, std::uint64_t seed) {
            SynthOptions opts;
            opts.kind = color_model_kind_from_string(model);
            return make_synthetic_scene(count, seed, opts);
        },
        py::arg("count"), py::arg("model") = "sh", py::arg("seed") = 0);

    m.def(
        "render",
        [](const Scene& scene, const Camera& cam, int tile_size,
           std::pair<double, double> thresholds, int threads, int degree_override,
           bool return_transmittance) -> py::object {
            RenderResult r =
                render(scene, cam, make_config(tile_size, thresholds, threads, degree_override));
            if (!return_transmittance) return image_to_numpy(r.image);
            return py::make_tuple(image_to_numpy(r.image), image_to_numpy(r.transmittance));
        },
        py::arg("scene"), py::arg("camera"), py::arg("tile_size") = 16,
        py::arg("thresholds") = std::pair<double, double>(2.0, 8.0), py::arg("threads") = 0,
        py::arg("degree_override") = -1, py::arg("return_transmittance") = false);

    m.def("eval_sh_basis", &eval_sh_basis, py::arg("direction"), py::arg("degree"));
    m.def(
        "eval_sg",
        [](const Vec3& alpha, double lambda, const Vec3& mu, const Vec3& direction) {
            return eval_sg(SGLobe{alpha, lambda, mu.normalized()}, direction);
        },
        py::arg("alpha"), py::arg("sharpness"), py::arg("axis"), py::arg("direction"));

    m.def(
        "param_count",
        [](const std::string& kind, int degree) {
            return param_count(color_model_kind_from_string(kind), degree);
        },
        py::arg("kind"), py::arg("sh_degree") = 3);
    m.def(
        "shared_param_count",
        [](const std::string& kind) {
            return shared_param_count(color_model_kind_from_string(kind));
        },
        py::arg("kind"));
    m.def(
        "flops_per_gaussian",
        [](const std::string& kind, int degree) {
            return flops_per_gaussian(color_model_kind_from_string(kind), degree);
        },
        py::arg("kind"), py::arg("sh_degree") = 3);

    m.def(
        "psnr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return psnr(numpy_to_image(a), numpy_to_image(b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "ssim",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return ssim(numpy_to_image(a), numpy_to_image(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "convert_checkpoint",
        [](const std::string& in_path, const std::string& out_path, const std::string& target,
           int samples, int iters, std::uint64_t seed, int threads) {
            ConvertOptions opts;
            opts.target = color_model_kind_from_string(target == "sh2" ? "sh" : target);
            opts.fit.samples = samples;
            opts.fit.iters = iters;
            opts.fit.seed = seed;
            opts.threads = threads;
            ConvertSummary s = convert_checkpoint(in_path, out_path, opts);
            py::dict d;
            d["num_gaussians"] = s.num_gaussians;
            d["input_payload_bytes"] = s.input_payload_bytes;
            d["output_payload_bytes"] = s.output_payload_bytes;
            d["payload_ratio"] = s.payload_ratio;
            d["reduction_percent"] = s.reduction_percent;
            d["rmse_mean"] = s.rmse_mean;
            d["rmse_max"] = s.rmse_max;
            return d;
        },
        py::arg("input"), py::arg("output"), py::arg("target") = "sg3", py::arg("samples") = 256,
        py::arg("iters") = 4, py::arg("seed") = 0, py::arg("threads") = 0);

    m.def(
        "train",
        [](const Scene& scene,
           const std::vector<std::pair<Camera, py::array_t<double, py::array::c_style |
                                                                       py::array::forcecast>>>& views,
           int iterations, int sg_start_iteration, double sg_learning_rate, std::uint64_t seed,
           int threads) {
            TrainConfig cfg;
            cfg.total_iterations = iterations;
            cfg.sg_start_iteration = sg_start_iteration;
            cfg.sg_learning_rate = sg_learning_rate;
            cfg.seed = seed;
            cfg.render.threads = threads;
            std::vector<TrainView> tv;
            tv.reserve(views.size());
            for (const auto& [cam, img] : views) tv.emplace_back(cam, numpy_to_image(img));
            TrainResult r = train(scene, tv, cfg);
            return py::make_tuple(r.scene, r.loss_history);
        },
        py::arg("scene"), py::arg("views"), py::arg("iterations") = 100,
        py::arg("sg_start_iteration") = 0, py::arg("sg_learning_rate") = 0.0025,
        py::arg("seed") = 0, py::arg("threads") = 0);

    m.def("prune", &prune, py::arg("scene"), py::arg("opacity_floor"));

    m.def(
        "save_png",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
           const std::string& path) { save_png(numpy_to_image(img).clamped01(), path); },
        py::arg("image"), py::arg("path"));
    m.def(
        "load_png", [](const std::string& path) { return image_to_numpy(load_png(path)); },
        py::arg("path"));
}
