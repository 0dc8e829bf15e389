#include "retarget/diffusion/sampling.hpp"

#include <cmath>

namespace retarget::diffusion {

Image sample_noise_like(const Image& ref, RngStream& rng) {
    Image out(ref.channels(), ref.height(), ref.width(), Domain::diffusion11);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.normal();
    return out;
}

Image q_sample(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched) {
    require_domain(x0, Domain::diffusion11, "q_sample");
    require_same_shape(x0, eps, "q_sample");
    if (t < 1 || t > sched.T) throw param_error("q_sample: t out of range");
    const double abar = sched.alpha_bar_at(t);
    const double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
    Image out = x0;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

Image predict_x0(const Image& x_t, int t, const Image& eps_pred, const NoiseSchedule& sched) {
    require_same_shape(x_t, eps_pred, "predict_x0");
    if (t < 1 || t > sched.T) throw param_error("predict_x0: t out of range");
    const double abar = sched.alpha_bar_at(t);
    const double inv_a = 1.0 / std::sqrt(abar), b = std::sqrt(1.0 - abar);
    Image out = x_t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - b * eps_pred[i]) * inv_a;
    return out;
}

Image p_step(const Image& x_t, int t, const Image& eps_pred, const ScheduleView& sched,
             const Image* noise, bool deterministic) {
    require_same_shape(x_t, eps_pred, "p_step");
    const int pos = sched.position_of(t);
    const double beta = sched.beta(pos);
    const double alpha = sched.alpha(pos);
    const double abar = sched.alpha_bar(pos);

    const bool final_step = pos == 0;
    double sigma = 0.0;
    if (!final_step && !deterministic) {
        double var = sched.base().variance_mode == VarianceMode::beta
                         ? beta
                         : sched.posterior_variance(pos);
        sigma = std::sqrt(var);
        if (noise) require_same_shape(x_t, *noise, "p_step noise");
    }

    const double eps_coef = beta / std::sqrt(1.0 - abar);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    Image out = x_t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double mu = (x_t[i] - eps_coef * eps_pred[i]) * inv_sqrt_alpha;
        out[i] = (sigma != 0.0 && noise) ? mu + sigma * noise->data()[i] : mu;
    }
    return out;
}

}  // namespace retarget::diffusion
