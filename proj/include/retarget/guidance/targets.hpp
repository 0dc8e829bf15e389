#pragma once

#include <vector>

#include "retarget/diffusion/sampling.hpp"
#include "retarget/guidance/lowpass.hpp"

namespace retarget::guidance {

using diffusion::Denoiser;
using diffusion::NoiseSchedule;
using retarget::Image;
using retarget::LowPassFilter;
using retarget::RngStream;

// Denoiser over a batch of same-shape images at a shared timestep. Network
// backends amortize one forward pass across the batch; results must not
// depend on batch composition.
class BatchDenoiser {
  public:
    virtual ~BatchDenoiser() = default;
    virtual std::vector<Image> predict_noise_batch(const std::vector<Image>& x_ts, int t) const = 0;
};

// Adapts a single-image Denoiser to the batch interface.
class SingleDenoiserAdapter : public BatchDenoiser {
  public:
    explicit SingleDenoiserAdapter(const Denoiser& d) : d_(d) {}
    std::vector<Image> predict_noise_batch(const std::vector<Image>& x_ts, int t) const override;

  private:
    const Denoiser& d_;
};

// Pseudo-target generation settings. The input is noised to start_t, then
// denoised; while the current timestep exceeds constrain_to, each landing
// state has its low-frequency band replaced by a freshly noised copy of the
// input. The remaining steps run unconstrained.
struct TargetGenConfig {
    int start_t = 600;
    int constrain_to = 360;
    LowPassFilter filter;
    int respaced_steps = 250;       // 0 = walk the full schedule
    bool deterministic_tail = false;  // sigma = 0 on the unconstrained steps
};

Image generate_pseudo_target(const Image& y0, const TargetGenConfig& cfg, const Denoiser& den,
                             const NoiseSchedule& sched, RngStream& rng);

// Batched variant; rngs[i] drives image i, so outputs are independent of how
// the batch is assembled.
std::vector<Image> generate_pseudo_targets(const std::vector<Image>& y0s, const TargetGenConfig& cfg,
                                           const BatchDenoiser& den, const NoiseSchedule& sched,
                                           std::vector<RngStream>& rngs);

// Unconditional regeneration: noise to start_t and denoise with no guidance.
// start_t 0 returns y0 unchanged.
Image difface_sample(const Image& y0, int start_t, const Denoiser& den, const NoiseSchedule& sched,
                     RngStream& rng, int respaced_steps = 0);

// Low-frequency guidance on every step down to t = 0 (the final landing uses
// y0 itself). Equivalent to generate_pseudo_target with constrain_to = 0.
Image ilvr_sample(const Image& y0, int start_t, const LowPassFilter& f, const Denoiser& den,
                  const NoiseSchedule& sched, RngStream& rng, int respaced_steps = 0);

// Constrained walk from start_t, then a one-step jump to the clean estimate
// at the first grid timestep at or below project_t (which must be >= 1).
Image dr2_sample(const Image& y0, int start_t, int project_t, const LowPassFilter& f,
                 const Denoiser& den, const NoiseSchedule& sched, RngStream& rng,
                 int respaced_steps = 0);

// Relative low-frequency gap between two images diffused to timestep t with a
// shared noise draw:
//   || lowpass(y_t) - lowpass(x_t) ||_2 / || lowpass(x_t) ||_2
// Deep noising washes out the gap, so this decreases as t grows.
double lowfreq_gap(const Image& x0, const Image& y0, int t, const LowPassFilter& f,
                   const NoiseSchedule& sched, RngStream& rng);

}  // namespace retarget::guidance
