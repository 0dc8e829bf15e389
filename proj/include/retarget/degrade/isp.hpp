#pragma once

#include <array>

#include "retarget/core/image.hpp"
#include "retarget/core/rng.hpp"

namespace retarget::degrade {

using retarget::Image;
using retarget::RngStream;

double srgb_to_linear(double v);
double linear_to_srgb(double v);

// Simplified invertible camera pipeline: white-balance gains, a 3x3 color
// matrix, and the sRGB transfer. No mosaic; the point is an exact round trip
// so noise can be injected in the linear RAW domain.
struct IspParams {
    std::array<double, 3> wb_gains{2.0, 1.0, 1.6};
    std::array<double, 9> ccm{0.82, 0.12, 0.06,   // row-major, rows sum to 1
                              0.08, 0.84, 0.08,
                              0.05, 0.13, 0.82};
    bool gamma = true;

    static IspParams identity();
};

// sRGB -> linear RAW: inverse gamma, inverse CCM, divide by gains.
// Values may leave [0,1]; nothing clips here.
Image unprocess(const Image& img, const IspParams& isp);

// Linear RAW -> sRGB: gains, CCM, clip to [0,1], gamma.
Image process(const Image& raw, const IspParams& isp);

// Heteroscedastic sensor noise: var = shot * max(v, 0) + read per element.
struct NoiseModel {
    double shot = 2.5e-3;
    double read = 1.0e-4;

    enum class Preset { mild, moderate, severe };
    // mild/moderate/severe scale the base model by 1x/2x/4x.
    static NoiseModel preset(Preset p);
    static NoiseModel preset(const std::string& name);
};

Image add_camera_noise(const Image& raw, const NoiseModel& nm, RngStream& rng);

struct RealisticDegradationParams {
    int r = 4;
    IspParams isp;
    NoiseModel noise;
};

// Realistic low-quality simulation: scale down by r, unprocess, add sensor
// noise in the RAW domain, process back, scale up. Sides must divide by r.
Image realistic_degrade(const Image& img, const RealisticDegradationParams& p, RngStream& rng);

}  // namespace retarget::degrade
