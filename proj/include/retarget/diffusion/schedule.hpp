#pragma once

#include <cstdint>
#include <vector>

#include "retarget/core/errors.hpp"

namespace retarget::diffusion {

// Variance of the reverse-step Gaussian: the small "posterior" variance
// (1 - abar_{t-1}) / (1 - abar_t) * beta_t, or beta_t itself.
enum class VarianceMode { posterior_small, beta };

// Linear variance schedule. Timesteps are 1-based (t in 1..T); arrays are
// stored with index t-1. alpha_bars[t-1] = prod_{s<=t} (1 - beta_s).
struct NoiseSchedule {
    int T = 0;
    VarianceMode variance_mode = VarianceMode::posterior_small;
    double beta_start = 0.0, beta_end = 0.0;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;
    std::vector<double> posterior_variances;

    double alpha_bar_at(int t) const;  // t in 0..T, with alpha_bar(0) = 1
    uint64_t hash() const;
};

NoiseSchedule make_schedule(int T, double beta_start, double beta_end,
                            VarianceMode vm = VarianceMode::posterior_small);

// Subsampled timestep grid for accelerated sampling. kept_timesteps holds S
// strictly increasing original indices, always including 1 and T. Effective
// betas follow from ratios of kept alpha_bars, so alpha_bar at a kept step
// matches the base schedule exactly.
struct RespacedSchedule {
    NoiseSchedule base;
    std::vector<int> kept_timesteps;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;
    std::vector<double> posterior_variances;
};

RespacedSchedule respace(const NoiseSchedule& schedule, int S);

// Uniform view over a base or respaced schedule, used by the samplers.
// Positions run 0..num_steps()-1 from the lowest kept timestep upward.
class ScheduleView {
  public:
    ScheduleView(const NoiseSchedule& s);        // NOLINT(google-explicit-constructor)
    ScheduleView(const RespacedSchedule& s);     // NOLINT(google-explicit-constructor)

    int num_steps() const { return static_cast<int>(kept_ ? kept_->size() : base_->betas.size()); }
    int orig_t(int pos) const { return kept_ ? (*kept_)[pos] : pos + 1; }
    double beta(int pos) const { return (*betas_)[pos]; }
    double alpha(int pos) const { return (*alphas_)[pos]; }
    double alpha_bar(int pos) const { return (*alpha_bars_)[pos]; }
    double alpha_bar_prev(int pos) const { return pos == 0 ? 1.0 : (*alpha_bars_)[pos - 1]; }
    double posterior_variance(int pos) const { return (*posterior_variances_)[pos]; }

    // Position whose original timestep equals t; param_error if t is not kept.
    int position_of(int t) const;
    // Position of the nearest kept timestep <= t; param_error if t < first kept.
    int position_at_or_below(int t) const;

    const NoiseSchedule& base() const { return *base_; }

  private:
    const NoiseSchedule* base_;
    const std::vector<int>* kept_ = nullptr;
    const std::vector<double>* betas_;
    const std::vector<double>* alphas_;
    const std::vector<double>* alpha_bars_;
    const std::vector<double>* posterior_variances_;
};

}  // namespace retarget::diffusion
