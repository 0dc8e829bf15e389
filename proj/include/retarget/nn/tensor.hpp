#pragma once

#include <cstddef>
#include <vector>

#include "retarget/core/image.hpp"

namespace retarget::nn {

// Dense batched activation tensor, laid out (n, c, h, w), w fastest.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {}

    std::size_t size() const { return v.size(); }
    std::size_t per_sample() const { return static_cast<std::size_t>(c) * h * w; }

    double& at(int ni, int ci, int yi, int xi) {
        return v[((static_cast<std::size_t>(ni) * c + ci) * h + yi) * w + xi];
    }
    double at(int ni, int ci, int yi, int xi) const {
        return v[((static_cast<std::size_t>(ni) * c + ci) * h + yi) * w + xi];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    static Tensor zeros_like(const Tensor& o) { return Tensor(o.n, o.c, o.h, o.w); }
};

// Stacks images (all same shape) into a batch tensor; values pass unchanged.
Tensor batch_from_images(const std::vector<Image>& images);
Tensor tensor_from_image(const Image& img);
Image image_from_tensor(const Tensor& t, int sample, Domain domain);

void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace retarget::nn
