#include "retarget/guidance/lowpass.hpp"

#include "retarget/core/resize.hpp"

namespace retarget {

Image lowpass(const Image& x, const LowPassFilter& f) {
    if (f.factor < 1) throw param_error("lowpass: factor must be >= 1");
    if (f.factor == 1) return x;
    if (x.height() % f.factor != 0 || x.width() % f.factor != 0)
        throw shape_error("lowpass: image sides must be divisible by the filter factor");

    int dh = x.height() / f.factor;
    int dw = x.width() / f.factor;
    Image down = area_resize(x, dh, dw);
    if (f.up == LowPassFilter::Upsample::nearest) return nearest_upsample(down, f.factor);
    return bilinear_resize(down, x.height(), x.width());
}

Image constrained_step(const Image& x_prev, const Image& y_prev, const LowPassFilter& f) {
    require_same_shape(x_prev, y_prev, "constrained_step");
    Image lx = lowpass(x_prev, f);
    Image ly = lowpass(y_prev, f);
    Image out = x_prev;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x_prev[i] - lx[i] + ly[i];
    return out;
}

}  // namespace retarget
