#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "retarget/diffusion/sampling.hpp"
#include "retarget/guidance/targets.hpp"
#include "retarget/nn/models.hpp"
#include "retarget/nn/optim.hpp"

namespace retarget::diffusion {

// Lets a trained network act as the samplers' noise predictor. Holds a
// mutable reference; forward passes change layer caches, so do not share one
// net across threads.
class NetDenoiser : public Denoiser, public guidance::BatchDenoiser {
  public:
    explicit NetDenoiser(nn::DenoiserNet& net) : net_(&net) {}
    Image predict_noise(const Image& x_t, int t) const override;
    std::vector<Image> predict_noise_batch(const std::vector<Image>& x_ts, int t) const override;

  private:
    nn::DenoiserNet* net_;
};

// One noise-prediction training step: per sample draw t uniform in [1, T] and
// a Gaussian eps, form x_t, and take the mean squared error between eps and
// the prediction. Gradients accumulate into the net (caller zeroes and steps
// the optimizer). x0 images must be in the [-1, 1] domain.
double ddpm_train_step(nn::DenoiserNet& net, const std::vector<Image>& x0_batch, RngStream& rng,
                       const NoiseSchedule& sched);

struct TrainResult {
    std::vector<double> loss_history;
    bool diverged = false;
    int stopped_at = -1;  // iteration that failed, -1 for a clean run
};

// Trains the denoiser on a clean pixel01 corpus. Deterministic for a given
// config seed. Non-finite loss raises numeric_error after the callback has
// seen the history so far.
TrainResult train_denoiser(nn::DenoiserNet& net, const std::vector<Image>& corpus,
                           const NoiseSchedule& sched, const nn::TrainConfig& cfg,
                           const std::function<void(int, double)>& on_iter = nullptr);

// Denoiser checkpoint: parameters plus the schedule and architecture needed
// to rebuild the net.
void save_denoiser(const std::string& path, nn::DenoiserNet& net, const NoiseSchedule& sched,
                   const json& extra = json::object());

struct LoadedDenoiser {
    std::unique_ptr<nn::DenoiserNet> net;
    NoiseSchedule sched;
    json manifest;
};

LoadedDenoiser load_denoiser(const std::string& path);

}  // namespace retarget::diffusion
