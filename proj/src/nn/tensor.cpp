#include "retarget/nn/tensor.hpp"

#include <cstring>

namespace retarget::nn {

Tensor batch_from_images(const std::vector<Image>& images) {
    if (images.empty()) throw param_error("batch_from_images: empty batch");
    const Image& first = images.front();
    Tensor t(static_cast<int>(images.size()), first.channels(), first.height(), first.width());
    for (std::size_t i = 0; i < images.size(); ++i) {
        retarget::require_same_shape(first, images[i], "batch_from_images");
        std::memcpy(t.v.data() + i * t.per_sample(), images[i].data().data(),
                    t.per_sample() * sizeof(double));
    }
    return t;
}

Tensor tensor_from_image(const Image& img) { return batch_from_images({img}); }

Image image_from_tensor(const Tensor& t, int sample, Domain domain) {
    if (sample < 0 || sample >= t.n) throw param_error("image_from_tensor: sample out of range");
    Image img(t.c, t.h, t.w, domain);
    std::memcpy(img.data().data(), t.v.data() + sample * t.per_sample(),
                t.per_sample() * sizeof(double));
    return img;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw shape_error(std::string(where) + ": tensor shape mismatch");
}

}  // namespace retarget::nn
