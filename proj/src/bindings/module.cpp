#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "retarget/core/io.hpp"
#include "retarget/degrade/classic.hpp"
#include "retarget/degrade/isp.hpp"
#include "retarget/diffusion/train.hpp"
#include "retarget/guidance/targets.hpp"
#include "retarget/metrics/metrics.hpp"
#include "retarget/pipeline/cli.hpp"
#include "retarget/pipeline/config.hpp"
#include "retarget/restore/train.hpp"

namespace py = pybind11;
using namespace retarget;

namespace {

Domain parse_domain(const std::string& name) {
    if (name == "pixel01") return Domain::pixel01;
    if (name == "diffusion11") return Domain::diffusion11;
    throw param_error("domain must be 'pixel01' or 'diffusion11'");
}

Image to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
               const std::string& domain = "pixel01") {
    if (arr.ndim() != 3)
        throw param_error("expected a (channels, height, width) float array");
    auto c = static_cast<int>(arr.shape(0));
    auto h = static_cast<int>(arr.shape(1));
    auto w = static_cast<int>(arr.shape(2));
    Image img(c, h, w, parse_domain(domain));
    std::copy_n(arr.data(), img.size(), img.data().data());
    return img;
}

py::array_t<double> to_array(const Image& img) {
    py::array_t<double> arr({img.channels(), img.height(), img.width()});
    std::copy_n(img.data().data(), img.size(), arr.mutable_data());
    return arr;
}

guidance::LowPassFilter make_filter(int factor, const std::string& up) {
    guidance::LowPassFilter f;
    f.factor = factor;
    if (up == "nearest")
        f.up = guidance::LowPassFilter::Upsample::nearest;
    else if (up == "bilinear")
        f.up = guidance::LowPassFilter::Upsample::bilinear;
    else
        throw param_error("upsample must be 'nearest' or 'bilinear'");
    return f;
}

// Keeps the loaded net and exposes target generation over numpy arrays.
struct PyDiffusion {
    diffusion::LoadedDenoiser loaded;

    py::array_t<double> generate_target(const py::array_t<double>& y0, int k_start, int l_stop,
                                        int n_factor, int steps, std::uint64_t seed,
                                        const std::string& sampler, const std::string& upsample) {
        Image img = to_image(y0);
        diffusion::NetDenoiser nd(*loaded.net);
        auto f = make_filter(n_factor, upsample);
        RngStream rng(seed, "targets");
        if (sampler == "ours") {
            guidance::TargetGenConfig cfg;
            cfg.start_t = k_start;
            cfg.constrain_to = l_stop;
            cfg.filter = f;
            cfg.respaced_steps = steps;
            return to_array(guidance::generate_pseudo_target(img, cfg, nd, loaded.sched, rng));
        }
        if (sampler == "difface")
            return to_array(
                guidance::difface_sample(img, k_start, nd, loaded.sched, rng, steps));
        if (sampler == "ilvr")
            return to_array(
                guidance::ilvr_sample(img, k_start, f, nd, loaded.sched, rng, steps));
        if (sampler == "dr2")
            return to_array(
                guidance::dr2_sample(img, k_start, l_stop, f, nd, loaded.sched, rng, steps));
        throw param_error("sampler must be one of ours, difface, ilvr, dr2");
    }
};

struct PyRestorer {
    restore::LoadedRestorer loaded;

    py::array_t<double> restore(const py::array_t<double>& lq) {
        return to_array(loaded.net->restore(to_image(lq)));
    }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "restoration retargeting core: schedules, guided sampling, degradations, metrics";

    py::class_<diffusion::NoiseSchedule>(m, "Schedule")
        .def_readonly("T", &diffusion::NoiseSchedule::T)
        .def_readonly("betas", &diffusion::NoiseSchedule::betas)
        .def_readonly("alpha_bars", &diffusion::NoiseSchedule::alpha_bars)
        .def("alpha_bar", &diffusion::NoiseSchedule::alpha_bar_at, py::arg("t"),
             "cumulative signal fraction at timestep t (t = 0 gives 1)");

    m.def(
        "make_schedule",
        [](int T, double beta_start, double beta_end, const std::string& variance) {
            auto vm = variance == "beta" ? diffusion::VarianceMode::beta
                                         : diffusion::VarianceMode::posterior_small;
            if (variance != "beta" && variance != "posterior")
                throw param_error("variance must be 'posterior' or 'beta'");
            return diffusion::make_schedule(T, beta_start, beta_end, vm);
        },
        py::arg("T") = 1000, py::arg("beta_start") = 1e-4, py::arg("beta_end") = 0.02,
        py::arg("variance") = "posterior", "linear beta schedule");

    m.def(
        "respaced_grid",
        [](const diffusion::NoiseSchedule& s, int S) {
            return diffusion::respace(s, S).kept_timesteps;
        },
        py::arg("schedule"), py::arg("steps"),
        "original timesteps kept on an accelerated grid");

    m.def(
        "q_sample",
        [](const py::array_t<double>& x0, int t, const py::array_t<double>& eps,
           const diffusion::NoiseSchedule& sched) {
            return to_array(diffusion::q_sample(to_image(x0, "diffusion11"), t,
                                                to_image(eps, "diffusion11"), sched));
        },
        py::arg("x0"), py::arg("t"), py::arg("eps"), py::arg("schedule"),
        "forward noising jump in the [-1, 1] domain");

    m.def(
        "lowpass",
        [](const py::array_t<double>& x, int factor, const std::string& up) {
            return to_array(lowpass(to_image(x), make_filter(factor, up)));
        },
        py::arg("x"), py::arg("factor"), py::arg("up") = "nearest",
        "block-average low-frequency projection");

    m.def(
        "classic_degrade",
        [](const py::array_t<double>& x, double sigma, double r, double delta, int q,
           std::uint64_t seed) {
            degrade::ClassicDegradationParams p{sigma, r, delta, q};
            RngStream rng(seed, "degrade");
            return to_array(degrade::classic_degrade(to_image(x), p, rng));
        },
        py::arg("x"), py::arg("sigma") = 2.0, py::arg("r") = 4.0, py::arg("delta") = 5.0,
        py::arg("q") = 80, py::arg("seed") = 0,
        "blur, downscale, noise, JPEG, upscale");

    m.def(
        "realistic_degrade",
        [](const py::array_t<double>& x, int scale, const std::string& iso,
           std::uint64_t seed) {
            degrade::RealisticDegradationParams p;
            p.r = scale;
            p.noise = degrade::NoiseModel::preset(iso);
            RngStream rng(seed, "degrade");
            return to_array(degrade::realistic_degrade(to_image(x), p, rng));
        },
        py::arg("x"), py::arg("scale") = 4, py::arg("iso") = "moderate", py::arg("seed") = 0,
        "camera-pipeline simulation with sensor noise");

    m.def(
        "psnr",
        [](const py::array_t<double>& a, const py::array_t<double>& b, double peak) {
            return metrics::psnr(to_image(a), to_image(b), peak);
        },
        py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);

    m.def(
        "ssim",
        [](const py::array_t<double>& a, const py::array_t<double>& b) {
            return metrics::ssim(to_image(a), to_image(b));
        },
        py::arg("a"), py::arg("b"));

    py::class_<PyDiffusion>(m, "DiffusionModel")
        .def_static(
            "load",
            [](const std::string& path) {
                auto d = std::make_unique<PyDiffusion>();
                d->loaded = diffusion::load_denoiser(path);
                return d;
            },
            py::arg("path"))
        .def_property_readonly("T",
                               [](const PyDiffusion& d) { return d.loaded.sched.T; })
        .def("generate_target", &PyDiffusion::generate_target, py::arg("y0"),
             py::arg("k_start") = 600, py::arg("l_stop") = 360, py::arg("n_factor") = 16,
             py::arg("steps") = 250, py::arg("seed") = 0, py::arg("sampler") = "ours",
             py::arg("upsample") = "nearest",
             "regenerate y0 through the constrained reverse walk");

    py::class_<PyRestorer>(m, "Restorer")
        .def_static(
            "load",
            [](const std::string& path) {
                auto r = std::make_unique<PyRestorer>();
                r->loaded = restore::load_restorer(path);
                return r;
            },
            py::arg("path"))
        .def_property_readonly(
            "channels", [](const PyRestorer& r) { return r.loaded.net->channels; })
        .def("restore", &PyRestorer::restore, py::arg("lq"));

    m.def(
        "read_png", [](const std::string& path) { return to_array(read_png(path)); },
        py::arg("path"), "PNG to a (channels, height, width) array in [0, 1]");
    m.def(
        "write_png",
        [](const std::string& path, const py::array_t<double>& x) {
            write_png(path, to_image(x));
        },
        py::arg("path"), py::arg("x"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> argv_s = args;
            argv_s.insert(argv_s.begin(), "retarget");
            std::vector<char*> argv;
            argv.reserve(argv_s.size());
            for (auto& a : argv_s) argv.push_back(a.data());
            return pipeline::run_cli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "command-line front end; returns the exit code");

    py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<data_error>(m, "DataError", PyExc_ValueError);
    py::register_exception<param_error>(m, "ParamError", PyExc_ValueError);
}
