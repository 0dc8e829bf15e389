#include "retarget/degrade/classic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "retarget/core/io.hpp"
#include "retarget/core/resize.hpp"

namespace retarget::degrade {

namespace {

// Index reflection without edge repeat: -1 -> 1, n -> n-2.
int reflect(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(double sigma) {
    int half = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        k[i + half] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + half];
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma < 0.0) throw param_error("gaussian_blur: sigma must be >= 0");
    if (sigma == 0.0) return img;

    std::vector<double> k = gaussian_kernel(sigma);
    int half = (static_cast<int>(k.size()) - 1) / 2;

    Image tmp = img;
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                double acc = 0.0;
                for (int i = -half; i <= half; ++i)
                    acc += k[i + half] * img.at(c, y, reflect(x + i, img.width()));
                tmp.at(c, y, x) = acc;
            }

    Image out = img;
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                double acc = 0.0;
                for (int i = -half; i <= half; ++i)
                    acc += k[i + half] * tmp.at(c, reflect(y + i, img.height()), x);
                out.at(c, y, x) = acc;
            }
    return out;
}

Image classic_degrade(const Image& img, const ClassicDegradationParams& p, RngStream& rng) {
    require_domain(img, Domain::pixel01, "classic_degrade");
    if (p.sigma < 0.0) throw param_error("classic_degrade: sigma must be >= 0");
    if (p.r <= 0.0) throw param_error("classic_degrade: scale factor must be > 0");
    if (p.delta < 0.0) throw param_error("classic_degrade: noise std must be >= 0");
    if (p.q < 1 || p.q > 100) throw param_error("classic_degrade: JPEG quality must be in [1, 100]");

    int dh = static_cast<int>(std::lround(img.height() / p.r));
    int dw = static_cast<int>(std::lround(img.width() / p.r));
    if (dh < 2 || dw < 2) throw param_error("classic_degrade: image smaller than 2x2 after downsample");

    Image x = gaussian_blur(img, p.sigma);
    x = area_resize(x, dh, dw);

    double std01 = p.delta / 255.0;
    if (std01 > 0.0)
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += std01 * rng.normal();
    x = clip01(x);

    x = jpeg_decode(jpeg_encode(x, p.q));
    x = bilinear_resize(x, img.height(), img.width());
    return clip01(x);
}

ClassicDegradationParams sample_classic_params(const ClassicRange& range, RngStream& rng) {
    ClassicDegradationParams p;
    p.sigma = rng.uniform_in(range.sigma_lo, range.sigma_hi);
    p.r = std::exp(rng.uniform_in(std::log(range.r_lo), std::log(range.r_hi)));
    p.delta = rng.uniform_in(range.delta_lo, range.delta_hi);
    p.q = static_cast<int>(rng.uniform_int(range.q_lo, range.q_hi));
    return p;
}

}  // namespace retarget::degrade
