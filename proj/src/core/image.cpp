#include "retarget/core/image.hpp"

#include <algorithm>
#include <cmath>

namespace retarget {

Image::Image(int channels, int height, int width, Domain domain)
    : c_(channels), h_(height), w_(width), domain_(domain) {
    if (channels != 1 && channels != 3)
        throw shape_error("Image: channel count must be 1 or 3, got " + std::to_string(channels));
    if (height <= 0 || width <= 0)
        throw shape_error("Image: non-positive dimensions");
    data_.assign(static_cast<std::size_t>(c_) * h_ * w_, 0.0);
}

Image Image::constant(int c, int h, int w, Domain d, double value) {
    Image img(c, h, w, d);
    std::fill(img.data_.begin(), img.data_.end(), value);
    return img;
}

void require_same_shape(const Image& a, const Image& b, const std::string& where) {
    if (!a.same_shape(b))
        throw shape_error(where + ": shape mismatch (" + std::to_string(a.channels()) + "x" +
                          std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                          std::to_string(b.channels()) + "x" + std::to_string(b.height()) + "x" +
                          std::to_string(b.width()) + ")");
}

void require_domain(const Image& img, Domain d, const std::string& where) {
    if (img.domain() != d)
        throw param_error(where + ": image is in the wrong value domain");
}

Image to_diffusion(const Image& pixel) {
    Image out = pixel;
    out.set_domain(Domain::diffusion11);
    for (auto& v : out.data()) v = 2.0 * v - 1.0;
    return out;
}

Image to_pixel(const Image& diffusion, bool clip) {
    Image out = diffusion;
    out.set_domain(Domain::pixel01);
    for (auto& v : out.data()) {
        v = (v + 1.0) / 2.0;
        if (clip) v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

Image clip01(const Image& img) {
    Image out = img;
    for (auto& v : out.data()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

double max_abs_diff(const Image& a, const Image& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double mean_abs(const Image& img) {
    double s = 0.0;
    for (double v : img.data()) s += std::abs(v);
    return img.size() ? s / static_cast<double>(img.size()) : 0.0;
}

bool all_finite(const Image& img) {
    for (double v : img.data())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace retarget
