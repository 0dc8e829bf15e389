#include "retarget/pipeline/config.hpp"

#include <cmath>

#include "retarget/core/errors.hpp"
#include "retarget/core/rng.hpp"

namespace retarget::pipeline {

void RunConfig::validate() const {
    if (T < 1) throw param_error("schedule length must be positive");
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
        throw param_error("betas must satisfy 0 < beta_start <= beta_end < 1");
    if (variance != "posterior" && variance != "beta")
        throw param_error("variance must be 'posterior' or 'beta'");
    if (steps != 0 && (steps < 2 || steps > T))
        throw param_error("sampler steps must be 0 (full) or in [2, T]");

    if (k_start < 0 || k_start > T) throw param_error("k_start must lie in [0, T]");
    if (l_stop < 0) throw param_error("l_stop must be nonnegative");
    if (k_start == 0) {
        if (l_stop != 0) throw param_error("l_stop must be 0 when k_start is 0");
    } else if (l_stop >= k_start) {
        throw param_error("the constrained window needs k_start > l_stop");
    }
    if (n_factor < 1) throw param_error("n_factor must be at least 1");
    if (upsample != "nearest" && upsample != "bilinear")
        throw param_error("upsample must be 'nearest' or 'bilinear'");
    if (sampler != "ours" && sampler != "difface" && sampler != "ilvr" && sampler != "dr2")
        throw param_error("sampler must be one of ours, difface, ilvr, dr2");

    if (!(lambda_lpips >= 0.0) || !std::isfinite(lambda_lpips) || !(lambda_gan >= 0.0) ||
        !std::isfinite(lambda_gan))
        throw param_error("loss weights must be finite and nonnegative");
}

diffusion::NoiseSchedule RunConfig::schedule() const {
    auto vm = variance == "beta" ? diffusion::VarianceMode::beta
                                 : diffusion::VarianceMode::posterior_small;
    return diffusion::make_schedule(T, beta_start, beta_end, vm);
}

guidance::LowPassFilter RunConfig::filter() const {
    guidance::LowPassFilter f;
    f.factor = n_factor;
    f.up = upsample == "bilinear" ? guidance::LowPassFilter::Upsample::bilinear
                                  : guidance::LowPassFilter::Upsample::nearest;
    return f;
}

guidance::TargetGenConfig RunConfig::targetgen() const {
    guidance::TargetGenConfig cfg;
    cfg.start_t = k_start;
    cfg.constrain_to = l_stop;
    cfg.filter = filter();
    cfg.respaced_steps = steps;
    return cfg;
}

restore::LossWeights RunConfig::weights() const { return {lambda_lpips, lambda_gan}; }

json RunConfig::to_json() const {
    return json{{"seed", seed},
                {"schedule",
                 {{"T", T},
                  {"beta_start", beta_start},
                  {"beta_end", beta_end},
                  {"variance", variance},
                  {"steps", steps}}},
                {"targetgen",
                 {{"k_start", k_start},
                  {"l_stop", l_stop},
                  {"n_factor", n_factor},
                  {"upsample", upsample},
                  {"sampler", sampler},
                  {"skip_restorer", skip_restorer}}},
                {"losses", {{"lambda_lpips", lambda_lpips}, {"lambda_gan", lambda_gan}}}};
}

std::uint64_t stage_seed(std::uint64_t root, const std::string& stage) {
    return RngStream(root, stage).seed();
}

}  // namespace retarget::pipeline
