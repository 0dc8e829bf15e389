#pragma once

#include <memory>
#include <string>
#include <vector>

#include "retarget/core/rng.hpp"
#include "retarget/nn/tensor.hpp"

namespace retarget::nn {

using retarget::RngStream;

// Trainable parameter block: values and the gradient accumulated by the last
// backward pass.
struct Param {
    std::vector<double> w, g;

    explicit Param(std::size_t n = 0) : w(n, 0.0), g(n, 0.0) {}
    std::size_t size() const { return w.size(); }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

// Layers cache whatever forward state their backward needs. backward() takes
// the gradient wrt the output and returns the gradient wrt the input,
// accumulating parameter gradients along the way.
class Layer {
  public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual std::vector<Param*> params() { return {}; }
};

class Conv2d : public Layer {
  public:
    Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad, RngStream init_rng,
           double init_scale = 1.0);

    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override { return {&weight, &bias}; }

    Param weight;  // (out_ch) x (in_ch * k * k), row-major
    Param bias;    // out_ch

    int in_ch, out_ch, k, stride, pad;

  private:
    Tensor x_;
};

// Fully connected layer over the channel axis of (n, c, 1, 1) tensors.
class Linear : public Layer {
  public:
    Linear(int in_dim, int out_dim, RngStream init_rng, double init_scale = 1.0);

    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override { return {&weight, &bias}; }

    Param weight;  // out_dim x in_dim, row-major
    Param bias;

    int in_dim, out_dim;

  private:
    Tensor x_;
};

class LeakyReLU : public Layer {
  public:
    explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;

  private:
    double slope_;
    Tensor x_;
};

class Tanh : public Layer {
  public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;

  private:
    Tensor y_;
};

class Sigmoid : public Layer {
  public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;

  private:
    Tensor y_;
};

// Channel-group normalization with learned per-channel scale and shift.
class GroupNorm : public Layer {
  public:
    GroupNorm(int channels, int groups, double eps = 1e-5);

    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override { return {&gamma, &beta}; }

    Param gamma, beta;
    int channels, groups;

  private:
    double eps_;
    Tensor xhat_;
    std::vector<double> inv_std_;  // per (n, group)
};

// 2x2 mean pooling, stride 2. Input height/width must be even.
class AvgPool2 : public Layer {
  public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;

  private:
    int h_ = 0, w_ = 0;
};

// Nearest-neighbor 2x upsampling.
class UpsampleNearest2 : public Layer {
  public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
};

// Structural helpers used by the model graphs.
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& dy, int c_first, Tensor& da, Tensor& db);
// Adds a per-sample, per-channel bias of shape (n, c, 1, 1) across h, w.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
Tensor reduce_channel_bias_grad(const Tensor& dy);

}  // namespace retarget::nn
