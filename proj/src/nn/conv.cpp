#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "retarget/nn/layers.hpp"

namespace retarget::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// col(r, j) with r = (ci*k + ky)*k + kx and j = (ni*oh + oy)*ow + ox,
// column-major, so each output location's patch is one contiguous column.
Eigen::MatrixXd im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow) {
    Eigen::MatrixXd col(static_cast<Eigen::Index>(x.c) * k * k,
                        static_cast<Eigen::Index>(x.n) * oh * ow);
    double* base = col.data();
    const Eigen::Index rows = col.rows();
    for (int ni = 0; ni < x.n; ++ni)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double* dst = base + ((static_cast<Eigen::Index>(ni) * oh + oy) * ow + ox) * rows;
                for (int ci = 0; ci < x.c; ++ci) {
                    const double* plane =
                        x.v.data() + (static_cast<std::size_t>(ni) * x.c + ci) * x.h * x.w;
                    for (int ky = 0; ky < k; ++ky) {
                        int yy = oy * stride + ky - pad;
                        int xx0 = ox * stride - pad;
                        if (yy < 0 || yy >= x.h) {
                            std::memset(dst, 0, sizeof(double) * k);
                            dst += k;
                        } else if (xx0 >= 0 && xx0 + k <= x.w) {
                            std::memcpy(dst, plane + static_cast<std::size_t>(yy) * x.w + xx0,
                                        sizeof(double) * k);
                            dst += k;
                        } else {
                            const double* row = plane + static_cast<std::size_t>(yy) * x.w;
                            for (int kx = 0; kx < k; ++kx) {
                                int xx = xx0 + kx;
                                *dst++ = (xx < 0 || xx >= x.w) ? 0.0 : row[xx];
                            }
                        }
                    }
                }
            }
    return col;
}

void col2im(const Eigen::MatrixXd& col, Tensor& dx, int k, int stride, int pad, int oh, int ow) {
    const double* base = col.data();
    const Eigen::Index rows = col.rows();
    for (int ni = 0; ni < dx.n; ++ni)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                const double* src =
                    base + ((static_cast<Eigen::Index>(ni) * oh + oy) * ow + ox) * rows;
                for (int ci = 0; ci < dx.c; ++ci) {
                    double* plane =
                        dx.v.data() + (static_cast<std::size_t>(ni) * dx.c + ci) * dx.h * dx.w;
                    for (int ky = 0; ky < k; ++ky) {
                        int yy = oy * stride + ky - pad;
                        int xx0 = ox * stride - pad;
                        if (yy < 0 || yy >= dx.h) {
                            src += k;
                            continue;
                        }
                        double* row = plane + static_cast<std::size_t>(yy) * dx.w;
                        if (xx0 >= 0 && xx0 + k <= dx.w) {
                            for (int kx = 0; kx < k; ++kx) row[xx0 + kx] += src[kx];
                            src += k;
                        } else {
                            for (int kx = 0; kx < k; ++kx) {
                                int xx = xx0 + kx;
                                if (xx >= 0 && xx < dx.w) row[xx] += src[kx];
                            }
                            src += k;
                        }
                    }
                }
            }
}

}  // namespace

Conv2d::Conv2d(int in_ch_, int out_ch_, int ksize, int stride_, int pad_, RngStream init_rng,
               double init_scale)
    : weight(static_cast<std::size_t>(out_ch_) * in_ch_ * ksize * ksize),
      bias(out_ch_),
      in_ch(in_ch_),
      out_ch(out_ch_),
      k(ksize),
      stride(stride_),
      pad(pad_) {
    double std = init_scale * std::sqrt(2.0 / (static_cast<double>(in_ch) * k * k));
    for (auto& v : weight.w) v = std * init_rng.normal();
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.c != in_ch) throw shape_error("Conv2d: channel mismatch");
    x_ = x;
    const int oh = (x.h + 2 * pad - k) / stride + 1;
    const int ow = (x.w + 2 * pad - k) / stride + 1;
    if (oh <= 0 || ow <= 0) throw shape_error("Conv2d: output collapses to zero size");

    Eigen::MatrixXd col = im2col(x, k, stride, pad, oh, ow);
    Eigen::Map<const MatRM> W(weight.w.data(), out_ch, static_cast<Eigen::Index>(in_ch) * k * k);
    // (n*oh*ow) x out_ch, column-major: each output channel plane is contiguous.
    Eigen::MatrixXd yt(col.cols(), out_ch);
    yt.noalias() = col.transpose() * W.transpose();

    Tensor out(x.n, out_ch, oh, ow);
    const std::size_t hw = static_cast<std::size_t>(oh) * ow;
    for (int ni = 0; ni < x.n; ++ni)
        for (int co = 0; co < out_ch; ++co) {
            const double* src = yt.data() + static_cast<std::size_t>(co) * yt.rows() + ni * hw;
            double* dst = out.v.data() + (static_cast<std::size_t>(ni) * out_ch + co) * hw;
            const double b = bias.w[co];
            for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] + b;
        }
    return out;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const int oh = dy.h, ow = dy.w;
    const std::size_t hw = static_cast<std::size_t>(oh) * ow;
    // (n*oh*ow) x out_ch, matching the transposed forward layout.
    Eigen::MatrixXd dyt(static_cast<Eigen::Index>(dy.n) * oh * ow, out_ch);
    for (int ni = 0; ni < dy.n; ++ni)
        for (int co = 0; co < out_ch; ++co)
            std::memcpy(dyt.data() + static_cast<std::size_t>(co) * dyt.rows() + ni * hw,
                        dy.v.data() + (static_cast<std::size_t>(ni) * out_ch + co) * hw,
                        sizeof(double) * hw);

    Eigen::MatrixXd col = im2col(x_, k, stride, pad, oh, ow);
    Eigen::Map<MatRM> dWmap(weight.g.data(), out_ch, static_cast<Eigen::Index>(in_ch) * k * k);
    dWmap.noalias() += (col * dyt).transpose();
    Eigen::Map<Eigen::VectorXd> db(bias.g.data(), out_ch);
    db.noalias() += dyt.colwise().sum().transpose();

    Eigen::Map<const MatRM> W(weight.w.data(), out_ch, static_cast<Eigen::Index>(in_ch) * k * k);
    Eigen::MatrixXd dcol(col.rows(), col.cols());
    dcol.noalias() = W.transpose() * dyt.transpose();
    Tensor dx(x_.n, x_.c, x_.h, x_.w);
    col2im(dcol, dx, k, stride, pad, oh, ow);
    return dx;
}

Linear::Linear(int in_dim_, int out_dim_, RngStream init_rng, double init_scale)
    : weight(static_cast<std::size_t>(out_dim_) * in_dim_),
      bias(out_dim_),
      in_dim(in_dim_),
      out_dim(out_dim_) {
    double std = init_scale * std::sqrt(2.0 / in_dim);
    for (auto& v : weight.w) v = std * init_rng.normal();
}

Tensor Linear::forward(const Tensor& x) {
    if (x.c != in_dim || x.h != 1 || x.w != 1) throw shape_error("Linear: expects (n, c, 1, 1)");
    x_ = x;
    Tensor out(x.n, out_dim, 1, 1);
    Eigen::Map<const MatRM> W(weight.w.data(), out_dim, in_dim);
    Eigen::Map<const Eigen::MatrixXd> X(x.v.data(), in_dim, x.n);
    Eigen::Map<Eigen::MatrixXd> Y(out.v.data(), out_dim, x.n);
    Y.noalias() = W * X;
    for (int ni = 0; ni < x.n; ++ni)
        for (int co = 0; co < out_dim; ++co) out.at(ni, co, 0, 0) += bias.w[co];
    return out;
}

Tensor Linear::backward(const Tensor& dy) {
    Eigen::Map<const Eigen::MatrixXd> dY(dy.v.data(), out_dim, dy.n);
    Eigen::Map<const Eigen::MatrixXd> X(x_.v.data(), in_dim, x_.n);
    Eigen::Map<MatRM> dW(weight.g.data(), out_dim, in_dim);
    dW.noalias() += dY * X.transpose();
    for (int ni = 0; ni < dy.n; ++ni)
        for (int co = 0; co < out_dim; ++co) bias.g[co] += dy.at(ni, co, 0, 0);

    Tensor dx(x_.n, in_dim, 1, 1);
    Eigen::Map<const MatRM> W(weight.w.data(), out_dim, in_dim);
    Eigen::Map<Eigen::MatrixXd> dX(dx.v.data(), in_dim, x_.n);
    dX.noalias() = W.transpose() * dY;
    return dx;
}

}  // namespace retarget::nn
