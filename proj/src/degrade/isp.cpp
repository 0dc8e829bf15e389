#include "retarget/degrade/isp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "retarget/core/resize.hpp"

namespace retarget::degrade {

double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

IspParams IspParams::identity() {
    IspParams p;
    p.wb_gains = {1.0, 1.0, 1.0};
    p.ccm = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    p.gamma = false;
    return p;
}

namespace {

Eigen::Matrix3d ccm_matrix(const IspParams& isp) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = isp.ccm[3 * i + j];
    return m;
}

void validate_isp(const IspParams& isp, const Eigen::Matrix3d& m, const std::string& where) {
    for (double g : isp.wb_gains)
        if (!(g > 0.0) || !std::isfinite(g)) throw param_error(where + ": gains must be finite positive");
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0.0) || smax / smin >= 1e6)
        throw param_error(where + ": color matrix is not usably invertible");
}

void require_rgb(const Image& img, const std::string& where) {
    if (img.channels() != 3) throw shape_error(where + ": needs a 3-channel image");
}

}  // namespace

Image unprocess(const Image& img, const IspParams& isp) {
    require_rgb(img, "unprocess");
    Eigen::Matrix3d m = ccm_matrix(isp);
    validate_isp(isp, m, "unprocess");
    Eigen::Matrix3d inv = m.inverse();

    Image out = img;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            Eigen::Vector3d v(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
            if (isp.gamma)
                for (int c = 0; c < 3; ++c) v(c) = srgb_to_linear(v(c));
            v = inv * v;
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = v(c) / isp.wb_gains[c];
        }
    return out;
}

Image process(const Image& raw, const IspParams& isp) {
    require_rgb(raw, "process");
    Eigen::Matrix3d m = ccm_matrix(isp);
    validate_isp(isp, m, "process");

    Image out = raw;
    for (int y = 0; y < raw.height(); ++y)
        for (int x = 0; x < raw.width(); ++x) {
            Eigen::Vector3d v(raw.at(0, y, x), raw.at(1, y, x), raw.at(2, y, x));
            for (int c = 0; c < 3; ++c) v(c) *= isp.wb_gains[c];
            v = m * v;
            for (int c = 0; c < 3; ++c) {
                double u = std::clamp(v(c), 0.0, 1.0);
                out.at(c, y, x) = isp.gamma ? linear_to_srgb(u) : u;
            }
        }
    out.set_domain(Domain::pixel01);
    return out;
}

NoiseModel NoiseModel::preset(Preset p) {
    double scale = p == Preset::mild ? 1.0 : p == Preset::moderate ? 2.0 : 4.0;
    NoiseModel base;
    return NoiseModel{base.shot * scale, base.read * scale};
}

NoiseModel NoiseModel::preset(const std::string& name) {
    if (name == "mild") return preset(Preset::mild);
    if (name == "moderate") return preset(Preset::moderate);
    if (name == "severe") return preset(Preset::severe);
    throw param_error("NoiseModel: unknown preset '" + name + "'");
}

Image add_camera_noise(const Image& raw, const NoiseModel& nm, RngStream& rng) {
    if (nm.shot < 0.0 || nm.read < 0.0) throw param_error("add_camera_noise: variances must be >= 0");
    Image out = raw;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double var = nm.shot * std::max(out[i], 0.0) + nm.read;
        out[i] += std::sqrt(var) * rng.normal();
    }
    return out;
}

Image realistic_degrade(const Image& img, const RealisticDegradationParams& p, RngStream& rng) {
    require_domain(img, Domain::pixel01, "realistic_degrade");
    require_rgb(img, "realistic_degrade");
    if (p.r < 1) throw param_error("realistic_degrade: scale factor must be >= 1");
    if (img.height() % p.r != 0 || img.width() % p.r != 0)
        throw shape_error("realistic_degrade: image sides must be divisible by the scale factor");

    Image x = area_resize(img, img.height() / p.r, img.width() / p.r);
    x = unprocess(x, p.isp);
    x = add_camera_noise(x, p.noise, rng);
    x = process(x, p.isp);
    x = bilinear_resize(x, img.height(), img.width());
    return clip01(x);
}

}  // namespace retarget::degrade
