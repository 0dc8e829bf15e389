#pragma once

#include "retarget/core/image.hpp"

namespace retarget {

// Low-frequency projector: block-average downsample by `factor`, then
// upsample back. Nearest upsampling makes it an exact linear projection
// (idempotent); bilinear is available for smoother guidance.
struct LowPassFilter {
    enum class Upsample { nearest, bilinear };

    int factor = 16;
    Upsample up = Upsample::nearest;
};

// Applies the projector. Image sides must be divisible by the factor.
// factor 1 is the identity.
Image lowpass(const Image& x, const LowPassFilter& f);

// Replaces the low-frequency band of x_prev with that of y_prev:
//   x_prev - lowpass(x_prev) + lowpass(y_prev)
Image constrained_step(const Image& x_prev, const Image& y_prev, const LowPassFilter& f);

}  // namespace retarget
