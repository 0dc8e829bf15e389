#pragma once

#include <memory>
#include <string>
#include <vector>

#include "retarget/core/checkpoint.hpp"
#include "retarget/nn/layers.hpp"

namespace retarget::nn {

struct NamedParams {
    std::vector<std::pair<std::string, Param*>> items;

    void add(const std::string& name, Param* p) { items.emplace_back(name, p); }
    void add(const std::string& prefix, Conv2d& c) {
        add(prefix + ".weight", &c.weight);
        add(prefix + ".bias", &c.bias);
    }
    void add(const std::string& prefix, Linear& l) {
        add(prefix + ".weight", &l.weight);
        add(prefix + ".bias", &l.bias);
    }
    void add(const std::string& prefix, GroupNorm& g) {
        add(prefix + ".gamma", &g.gamma);
        add(prefix + ".beta", &g.beta);
    }

    std::vector<Param*> flat() const;
};

void save_params(Checkpoint& ck, const NamedParams& np);
void load_params(const Checkpoint& ck, NamedParams& np);

// Sinusoidal position features for integer timesteps, shape (n, dim, 1, 1).
Tensor timestep_embedding(const std::vector<int>& ts, int dim);

// Residual block with timestep conditioning injected as a per-channel bias.
struct CondResBlock {
    GroupNorm gn1, gn2;
    LeakyReLU act1{0.2}, act2{0.2};
    Conv2d conv1, conv2;
    Linear tproj;

    CondResBlock(int ch, int emb_dim, int groups, RngStream rng);
    Tensor forward(const Tensor& x, const Tensor& temb);
    Tensor backward(const Tensor& dy, Tensor& dtemb_accum);
    void collect(const std::string& prefix, NamedParams& np);
};

// Small timestep-conditioned U-Net noise predictor. Input sizes must be
// divisible by 4; channels grow base_ch -> 2*base_ch over two downsamplings.
class DenoiserNet {
  public:
    DenoiserNet(int in_ch, int base_ch, int emb_dim, uint64_t seed);

    Tensor forward(const Tensor& x, const std::vector<int>& ts);
    Tensor backward(const Tensor& dy);
    NamedParams named_params();

    Image predict_noise_image(const Image& x_t, int t);

    int in_ch, base_ch, emb_dim;

  private:
    Linear temb1;
    LeakyReLU tact{0.2};
    Conv2d conv_in;
    CondResBlock rb1;
    AvgPool2 pool1;
    Conv2d conv_d1;
    CondResBlock rb2;
    AvgPool2 pool2;
    CondResBlock rb_mid;
    UpsampleNearest2 up1;
    Conv2d conv_u1;
    CondResBlock rb4;
    UpsampleNearest2 up2;
    Conv2d conv_u2;
    CondResBlock rb5;
    GroupNorm gn_out;
    LeakyReLU act_out{0.2};
    Conv2d conv_out;

    Tensor e1_, e2_;  // skip activations
};

// Residual CNN restorer with a global input skip; values stay unclipped so
// gradients flow, callers clip at eval time.
class RestorerNet {
  public:
    RestorerNet(int channels, int width, int depth, uint64_t seed);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);
    NamedParams named_params();

    Image restore(const Image& y);  // pixel01 in, clipped pixel01 out

    int channels, width, depth;

  private:
    struct Block {
        Conv2d conv1, conv2;
        LeakyReLU act{0.2};
        Block(int w, RngStream rng);
        Tensor forward(const Tensor& x);
        Tensor backward(const Tensor& dy);
    };

    Conv2d head;
    std::vector<Block> blocks;
    Conv2d tail;
};

// Patch discriminator: strided convs to an 1-channel logit map, averaged per
// sample, squashed to a probability in (eps, 1-eps).
class DiscriminatorNet {
  public:
    DiscriminatorNet(int in_ch, int width, uint64_t seed, double prob_eps = 1e-6);

    // Returns per-sample probabilities, shape (n, 1, 1, 1).
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dprob);
    NamedParams named_params();

    int in_ch, width;

  private:
    Conv2d c1, c2, c3;
    LeakyReLU a1{0.2}, a2{0.2};
    double prob_eps_;
    Tensor logits_;
    Tensor probs_;
    std::vector<bool> clamped_;
};

// Fixed random convolutional feature stack shared by the perceptual loss and
// the feature-space distribution metrics. Parameters are frozen after init;
// backward only propagates to the input.
class FeatureNet {
  public:
    explicit FeatureNet(uint64_t seed, int in_ch = 3);

    // Feature maps after each activation, shallow to deep.
    std::vector<Tensor> forward(const Tensor& x);
    Tensor backward(const std::vector<Tensor>& dlevels);
    int num_levels() const { return 3; }

    // Per-image descriptor for distribution metrics: channel means of the
    // deepest two levels, concatenated.
    std::vector<double> descriptor(const Image& img);
    int descriptor_dim() const;

    uint64_t seed;

  private:
    Conv2d c1, c2, c3;
    LeakyReLU a1{0.2}, a2{0.2}, a3{0.2};
    AvgPool2 p1, p2;
};

}  // namespace retarget::nn
