#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "retarget/core/errors.hpp"

namespace retarget {

// Value domain of an image. Pixel images live in [0,1]; diffusion math runs
// in [-1,1] and stays unclipped until the final decode.
enum class Domain { pixel01, diffusion11 };

// Dense float image, channel-major (c, h, w). Channels are 1 or 3.
class Image {
  public:
    Image() = default;
    Image(int channels, int height, int width, Domain domain);

    static Image zeros(int c, int h, int w, Domain d) { return Image(c, h, w, d); }
    static Image constant(int c, int h, int w, Domain d, double value);

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    Domain domain() const { return domain_; }
    void set_domain(Domain d) { domain_ = d; }

    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }
    double at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Image& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

  private:
    int c_ = 0, h_ = 0, w_ = 0;
    Domain domain_ = Domain::pixel01;
    std::vector<double> data_;
};

void require_same_shape(const Image& a, const Image& b, const std::string& where);
void require_domain(const Image& img, Domain d, const std::string& where);

// x -> 2x - 1
Image to_diffusion(const Image& pixel);
// x -> (x + 1) / 2, clipped to [0,1]. Clipping happens only here, at decode.
Image to_pixel(const Image& diffusion, bool clip = true);

Image clip01(const Image& img);

double max_abs_diff(const Image& a, const Image& b);
double mean_abs(const Image& img);
bool all_finite(const Image& img);

}  // namespace retarget
