#pragma once

#include "retarget/core/image.hpp"

namespace retarget {

// Box-overlap area resampling. Exact block average for integer reductions;
// handles fractional and enlarging factors by partial-overlap weighting.
Image area_resize(const Image& img, int out_h, int out_w);

// Bilinear resampling with half-pixel center alignment, edge clamped.
Image bilinear_resize(const Image& img, int out_h, int out_w);

// Nearest-neighbor upsampling by an integer factor.
Image nearest_upsample(const Image& img, int factor);

}  // namespace retarget
