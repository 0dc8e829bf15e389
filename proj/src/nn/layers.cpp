#include <cmath>

#include "retarget/nn/layers.hpp"

namespace retarget::nn {

Tensor LeakyReLU::forward(const Tensor& x) {
    x_ = x;
    Tensor y = x;
    for (auto& v : y.v)
        if (v < 0) v *= slope_;
    return y;
}

Tensor LeakyReLU::backward(const Tensor& dy) {
    require_same_shape(dy, x_, "LeakyReLU::backward");
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (x_.v[i] < 0) dx.v[i] *= slope_;
    return dx;
}

Tensor Tanh::forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.v) v = std::tanh(v);
    y_ = y;
    return y;
}

Tensor Tanh::backward(const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] *= 1.0 - y_.v[i] * y_.v[i];
    return dx;
}

Tensor Sigmoid::forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.v) v = 1.0 / (1.0 + std::exp(-v));
    y_ = y;
    return y;
}

Tensor Sigmoid::backward(const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] *= y_.v[i] * (1.0 - y_.v[i]);
    return dx;
}

GroupNorm::GroupNorm(int channels_, int groups_, double eps)
    : gamma(channels_), beta(channels_), channels(channels_), groups(groups_), eps_(eps) {
    if (channels % groups != 0) throw param_error("GroupNorm: channels % groups != 0");
    std::fill(gamma.w.begin(), gamma.w.end(), 1.0);
}

Tensor GroupNorm::forward(const Tensor& x) {
    if (x.c != channels) throw shape_error("GroupNorm: channel mismatch");
    const int cpg = channels / groups;
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    const std::size_t m = cpg * hw;
    xhat_ = Tensor(x.n, x.c, x.h, x.w);
    inv_std_.assign(static_cast<std::size_t>(x.n) * groups, 0.0);

    Tensor y = x;
    for (int ni = 0; ni < x.n; ++ni)
        for (int g = 0; g < groups; ++g) {
            const double* src = x.v.data() + (static_cast<std::size_t>(ni) * channels + g * cpg) * hw;
            double sum = 0, sumsq = 0;
            for (std::size_t i = 0; i < m; ++i) {
                sum += src[i];
                sumsq += src[i] * src[i];
            }
            double mean = sum / static_cast<double>(m);
            double var = std::max(0.0, sumsq / static_cast<double>(m) - mean * mean);
            double istd = 1.0 / std::sqrt(var + eps_);
            inv_std_[ni * groups + g] = istd;
            double* xh = xhat_.v.data() + (static_cast<std::size_t>(ni) * channels + g * cpg) * hw;
            double* dst = y.v.data() + (static_cast<std::size_t>(ni) * channels + g * cpg) * hw;
            for (int cc = 0; cc < cpg; ++cc) {
                double gam = gamma.w[g * cpg + cc], bet = beta.w[g * cpg + cc];
                for (std::size_t i = cc * hw; i < (cc + 1) * hw; ++i) {
                    xh[i] = (src[i] - mean) * istd;
                    dst[i] = gam * xh[i] + bet;
                }
            }
        }
    return y;
}

Tensor GroupNorm::backward(const Tensor& dy) {
    require_same_shape(dy, xhat_, "GroupNorm::backward");
    const int cpg = channels / groups;
    const std::size_t hw = static_cast<std::size_t>(dy.h) * dy.w;
    const double m = static_cast<double>(cpg) * hw;

    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (int ni = 0; ni < dy.n; ++ni)
        for (int g = 0; g < groups; ++g) {
            const std::size_t base = (static_cast<std::size_t>(ni) * channels + g * cpg) * hw;
            const double* gdy = dy.v.data() + base;
            const double* xh = xhat_.v.data() + base;
            double sum_dxh = 0, sum_dxh_xh = 0;
            for (int cc = 0; cc < cpg; ++cc) {
                double gam = gamma.w[g * cpg + cc];
                double dg = 0, db = 0;
                for (std::size_t i = cc * hw; i < (cc + 1) * hw; ++i) {
                    dg += gdy[i] * xh[i];
                    db += gdy[i];
                    double dxh = gdy[i] * gam;
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh[i];
                }
                gamma.g[g * cpg + cc] += dg;
                beta.g[g * cpg + cc] += db;
            }
            double istd = inv_std_[ni * groups + g];
            double* out = dx.v.data() + base;
            for (int cc = 0; cc < cpg; ++cc) {
                double gam = gamma.w[g * cpg + cc];
                for (std::size_t i = cc * hw; i < (cc + 1) * hw; ++i) {
                    double dxh = gdy[i] * gam;
                    out[i] = istd / m * (m * dxh - sum_dxh - xh[i] * sum_dxh_xh);
                }
            }
        }
    return dx;
}

Tensor AvgPool2::forward(const Tensor& x) {
    if (x.h % 2 || x.w % 2) throw shape_error("AvgPool2: odd input size");
    h_ = x.h;
    w_ = x.w;
    Tensor y(x.n, x.c, x.h / 2, x.w / 2);
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci)
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx)
                    y.at(ni, ci, yy, xx) =
                        0.25 * (x.at(ni, ci, 2 * yy, 2 * xx) + x.at(ni, ci, 2 * yy, 2 * xx + 1) +
                                x.at(ni, ci, 2 * yy + 1, 2 * xx) +
                                x.at(ni, ci, 2 * yy + 1, 2 * xx + 1));
    return y;
}

Tensor AvgPool2::backward(const Tensor& dy) {
    Tensor dx(dy.n, dy.c, h_, w_);
    for (int ni = 0; ni < dy.n; ++ni)
        for (int ci = 0; ci < dy.c; ++ci)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx) {
                    double g = 0.25 * dy.at(ni, ci, yy, xx);
                    dx.at(ni, ci, 2 * yy, 2 * xx) = g;
                    dx.at(ni, ci, 2 * yy, 2 * xx + 1) = g;
                    dx.at(ni, ci, 2 * yy + 1, 2 * xx) = g;
                    dx.at(ni, ci, 2 * yy + 1, 2 * xx + 1) = g;
                }
    return dx;
}

Tensor UpsampleNearest2::forward(const Tensor& x) {
    Tensor y(x.n, x.c, x.h * 2, x.w * 2);
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci)
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx)
                    y.at(ni, ci, yy, xx) = x.at(ni, ci, yy / 2, xx / 2);
    return y;
}

Tensor UpsampleNearest2::backward(const Tensor& dy) {
    if (dy.h % 2 || dy.w % 2) throw shape_error("UpsampleNearest2: odd gradient size");
    Tensor dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
    for (int ni = 0; ni < dy.n; ++ni)
        for (int ci = 0; ci < dy.c; ++ci)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx)
                    dx.at(ni, ci, yy / 2, xx / 2) += dy.at(ni, ci, yy, xx);
    return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw shape_error("concat_channels: incompatible shapes");
    Tensor y(a.n, a.c + b.c, a.h, a.w);
    for (int ni = 0; ni < a.n; ++ni) {
        for (int ci = 0; ci < a.c; ++ci)
            for (int yy = 0; yy < a.h; ++yy)
                for (int xx = 0; xx < a.w; ++xx) y.at(ni, ci, yy, xx) = a.at(ni, ci, yy, xx);
        for (int ci = 0; ci < b.c; ++ci)
            for (int yy = 0; yy < a.h; ++yy)
                for (int xx = 0; xx < a.w; ++xx)
                    y.at(ni, a.c + ci, yy, xx) = b.at(ni, ci, yy, xx);
    }
    return y;
}

void split_channels(const Tensor& dy, int c_first, Tensor& da, Tensor& db) {
    da = Tensor(dy.n, c_first, dy.h, dy.w);
    db = Tensor(dy.n, dy.c - c_first, dy.h, dy.w);
    for (int ni = 0; ni < dy.n; ++ni) {
        for (int ci = 0; ci < c_first; ++ci)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx) da.at(ni, ci, yy, xx) = dy.at(ni, ci, yy, xx);
        for (int ci = c_first; ci < dy.c; ++ci)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx)
                    db.at(ni, ci - c_first, yy, xx) = dy.at(ni, ci, yy, xx);
    }
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
    if (bias.n != x.n || bias.c != x.c || bias.h != 1 || bias.w != 1)
        throw shape_error("add_channel_bias: bias must be (n, c, 1, 1)");
    Tensor y = x;
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci) {
            double b = bias.at(ni, ci, 0, 0);
            for (int yy = 0; yy < x.h; ++yy)
                for (int xx = 0; xx < x.w; ++xx) y.at(ni, ci, yy, xx) += b;
        }
    return y;
}

Tensor reduce_channel_bias_grad(const Tensor& dy) {
    Tensor g(dy.n, dy.c, 1, 1);
    for (int ni = 0; ni < dy.n; ++ni)
        for (int ci = 0; ci < dy.c; ++ci) {
            double s = 0;
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx) s += dy.at(ni, ci, yy, xx);
            g.at(ni, ci, 0, 0) = s;
        }
    return g;
}

}  // namespace retarget::nn
