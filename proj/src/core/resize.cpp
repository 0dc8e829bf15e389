#include "retarget/core/resize.hpp"

#include <algorithm>
#include <cmath>

namespace retarget {

namespace {

// Overlap weights of one destination cell [i*scale, (i+1)*scale) against the
// integer source grid. Returns first source index; weights sum to scale.
void axis_overlap(int i, double scale, int src_len, int* first, std::vector<double>* weights) {
    double lo = i * scale;
    double hi = (i + 1) * scale;
    int s0 = static_cast<int>(std::floor(lo));
    int s1 = static_cast<int>(std::ceil(hi));
    s0 = std::clamp(s0, 0, src_len - 1);
    s1 = std::clamp(s1, s0 + 1, src_len);
    *first = s0;
    weights->assign(static_cast<std::size_t>(s1 - s0), 0.0);
    for (int s = s0; s < s1; ++s) {
        double cover = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
        (*weights)[s - s0] = std::max(cover, 0.0);
    }
}

}  // namespace

Image area_resize(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw param_error("area_resize: output must be at least 1x1");
    if (img.height() == out_h && img.width() == out_w) return img;

    double sy = static_cast<double>(img.height()) / out_h;
    double sx = static_cast<double>(img.width()) / out_w;
    Image out(img.channels(), out_h, out_w, img.domain());

    std::vector<double> wy, wx;
    for (int oy = 0; oy < out_h; ++oy) {
        int y0 = 0;
        axis_overlap(oy, sy, img.height(), &y0, &wy);
        for (int ox = 0; ox < out_w; ++ox) {
            int x0 = 0;
            axis_overlap(ox, sx, img.width(), &x0, &wx);
            double norm = 0.0;
            for (double a : wy)
                for (double b : wx) norm += a * b;
            for (int c = 0; c < img.channels(); ++c) {
                double acc = 0.0;
                for (std::size_t iy = 0; iy < wy.size(); ++iy)
                    for (std::size_t ix = 0; ix < wx.size(); ++ix)
                        acc += wy[iy] * wx[ix] * img.at(c, y0 + static_cast<int>(iy), x0 + static_cast<int>(ix));
                out.at(c, oy, ox) = acc / norm;
            }
        }
    }
    return out;
}

Image bilinear_resize(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw param_error("bilinear_resize: output must be at least 1x1");
    if (img.height() == out_h && img.width() == out_w) return img;

    double sy = static_cast<double>(img.height()) / out_h;
    double sx = static_cast<double>(img.width()) / out_w;
    Image out(img.channels(), out_h, out_w, img.domain());

    for (int oy = 0; oy < out_h; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double ty = fy - y0;
        int ya = std::clamp(y0, 0, img.height() - 1);
        int yb = std::clamp(y0 + 1, 0, img.height() - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double tx = fx - x0;
            int xa = std::clamp(x0, 0, img.width() - 1);
            int xb = std::clamp(x0 + 1, 0, img.width() - 1);
            for (int c = 0; c < img.channels(); ++c) {
                double top = img.at(c, ya, xa) * (1.0 - tx) + img.at(c, ya, xb) * tx;
                double bot = img.at(c, yb, xa) * (1.0 - tx) + img.at(c, yb, xb) * tx;
                out.at(c, oy, ox) = top * (1.0 - ty) + bot * ty;
            }
        }
    }
    return out;
}

Image nearest_upsample(const Image& img, int factor) {
    if (factor < 1) throw param_error("nearest_upsample: factor must be >= 1");
    if (factor == 1) return img;
    Image out(img.channels(), img.height() * factor, img.width() * factor, img.domain());
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x) out.at(c, y, x) = img.at(c, y / factor, x / factor);
    return out;
}

}  // namespace retarget
