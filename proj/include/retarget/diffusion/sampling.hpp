#pragma once

#include "retarget/core/image.hpp"
#include "retarget/core/rng.hpp"
#include "retarget/diffusion/schedule.hpp"

namespace retarget::diffusion {

using retarget::Image;
using retarget::RngStream;

// Predicts the noise component eps from a noisy state and its original
// timestep t (1-based, on the unrespaced grid).
class Denoiser {
  public:
    virtual ~Denoiser() = default;
    virtual Image predict_noise(const Image& x_t, int t) const = 0;
};

Image sample_noise_like(const Image& ref, RngStream& rng);

// Forward jump: x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, t in 1..T.
Image q_sample(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched);

// Inverts the forward jump given a noise estimate: (x_t - sqrt(1-abar_t) eps) / sqrt(abar_t).
Image predict_x0(const Image& x_t, int t, const Image& eps_pred, const NoiseSchedule& sched);

// One reverse transition from timestep t (which must lie on the view's grid)
// to the previous grid point. noise may be null for a zero draw; it is
// ignored on the final step and when deterministic is set (sigma = 0).
Image p_step(const Image& x_t, int t, const Image& eps_pred, const ScheduleView& sched,
             const Image* noise, bool deterministic = false);

}  // namespace retarget::diffusion
