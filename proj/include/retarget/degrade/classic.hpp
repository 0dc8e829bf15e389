#pragma once

#include "retarget/core/image.hpp"
#include "retarget/core/rng.hpp"

namespace retarget::degrade {

using retarget::Image;
using retarget::RngStream;

// Separable Gaussian blur, kernel size 2*ceil(3*sigma)+1, reflected border.
// sigma 0 is the identity.
Image gaussian_blur(const Image& img, double sigma);

// Classic synthetic degradation: blur, scale down by r, Gaussian noise with
// std delta in 8-bit units, JPEG at quality q, scale back up.
struct ClassicDegradationParams {
    double sigma = 2.0;
    double r = 4.0;
    double delta = 5.0;   // noise std in [0, 255] units
    int q = 80;           // JPEG quality in [1, 100]
};

Image classic_degrade(const Image& img, const ClassicDegradationParams& p, RngStream& rng);

// Sampling ranges for restorer pretraining. r is drawn log-uniform, the rest
// uniform; q is an integer.
struct ClassicRange {
    double sigma_lo = 0.1, sigma_hi = 15.0;
    double r_lo = 0.8, r_hi = 32.0;
    double delta_lo = 0.0, delta_hi = 20.0;
    int q_lo = 30, q_hi = 100;
};

ClassicDegradationParams sample_classic_params(const ClassicRange& range, RngStream& rng);

}  // namespace retarget::degrade
