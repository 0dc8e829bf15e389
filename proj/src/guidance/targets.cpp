#include "retarget/guidance/targets.hpp"

#include <cmath>

namespace retarget::guidance {

using diffusion::p_step;
using diffusion::predict_x0;
using diffusion::q_sample;
using diffusion::RespacedSchedule;
using diffusion::respace;
using diffusion::sample_noise_like;
using diffusion::ScheduleView;

std::vector<Image> SingleDenoiserAdapter::predict_noise_batch(const std::vector<Image>& x_ts,
                                                              int t) const {
    std::vector<Image> out;
    out.reserve(x_ts.size());
    for (const Image& x : x_ts) out.push_back(d_.predict_noise(x, t));
    return out;
}

namespace {

struct WalkConfig {
    int start_t = 0;
    int constrain_to = -1;              // constraint active while stepping from t > constrain_to
    const LowPassFilter* filter = nullptr;  // null runs unconditional
    int respaced_steps = 0;
    bool deterministic_tail = false;
    bool project_at_floor = false;      // jump to the clean estimate once t <= constrain_to
};

// Shared reverse walk behind all samplers. Each image draws noise from its
// own stream in a fixed order (entry draw, then per step: transition draw,
// landing draw when constrained), so any two configurations that take the
// same path produce bit-identical outputs under the same seeds.
std::vector<Image> guided_reverse(const std::vector<Image>& y0s, const WalkConfig& wc,
                                  const BatchDenoiser& den, const NoiseSchedule& sched,
                                  std::vector<RngStream*>& rngs) {
    if (y0s.empty()) return {};
    if (rngs.size() != y0s.size()) throw param_error("guided_reverse: one rng stream per image");
    if (wc.start_t < 0 || wc.start_t > sched.T)
        throw param_error("guided_reverse: start timestep outside schedule");
    for (const Image& y : y0s) {
        require_domain(y, Domain::pixel01, "guided_reverse");
        if (!y.same_shape(y0s.front())) throw shape_error("guided_reverse: batch images must match in shape");
    }
    if (wc.filter) {
        if (wc.constrain_to < 0 || wc.constrain_to >= wc.start_t)
            throw param_error("guided_reverse: constraint floor must lie in [0, start_t)");
        if (y0s.front().height() % wc.filter->factor != 0 || y0s.front().width() % wc.filter->factor != 0)
            throw shape_error("guided_reverse: image sides must be divisible by the filter factor");
    }

    if (wc.start_t == 0) return y0s;

    int steps = wc.respaced_steps == 0 ? sched.T : wc.respaced_steps;
    RespacedSchedule rs = respace(sched, steps);
    ScheduleView view(rs);

    std::size_t n = y0s.size();
    std::vector<Image> y0d(n), xs(n);
    for (std::size_t i = 0; i < n; ++i) y0d[i] = to_diffusion(y0s[i]);

    int pos = view.position_at_or_below(wc.start_t);
    for (std::size_t i = 0; i < n; ++i) {
        Image eps = sample_noise_like(y0d[i], *rngs[i]);
        xs[i] = q_sample(y0d[i], view.orig_t(pos), eps, sched);
    }

    for (int p = pos; p >= 0; --p) {
        int t = view.orig_t(p);
        if (wc.project_at_floor && t <= wc.constrain_to) {
            std::vector<Image> eps_hat = den.predict_noise_batch(xs, t);
            for (std::size_t i = 0; i < n; ++i) xs[i] = predict_x0(xs[i], t, eps_hat[i], sched);
            break;
        }

        bool constrained_src = wc.filter && t > wc.constrain_to;
        bool det = wc.deterministic_tail && !constrained_src;
        std::vector<Image> eps_hat = den.predict_noise_batch(xs, t);
        for (std::size_t i = 0; i < n; ++i) {
            Image z;
            const Image* zp = nullptr;
            if (p > 0 && !det) {
                z = sample_noise_like(xs[i], *rngs[i]);
                zp = &z;
            }
            xs[i] = p_step(xs[i], t, eps_hat[i], view, zp, det);
        }

        if (constrained_src) {
            int t_land = p > 0 ? view.orig_t(p - 1) : 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (t_land == 0) {
                    xs[i] = constrained_step(xs[i], y0d[i], *wc.filter);
                } else {
                    Image eps = sample_noise_like(y0d[i], *rngs[i]);
                    Image y_land = q_sample(y0d[i], t_land, eps, sched);
                    xs[i] = constrained_step(xs[i], y_land, *wc.filter);
                }
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) xs[i] = to_pixel(xs[i]);
    return xs;
}

void validate_target_config(const TargetGenConfig& cfg, const NoiseSchedule& sched) {
    if (cfg.start_t <= cfg.constrain_to)
        throw param_error("generate_pseudo_target: start_t must exceed constrain_to");
    if (cfg.constrain_to < 0) throw param_error("generate_pseudo_target: constrain_to must be >= 0");
    if (cfg.start_t > sched.T) throw param_error("generate_pseudo_target: start_t outside schedule");
    if (cfg.filter.factor < 1) throw param_error("generate_pseudo_target: filter factor must be >= 1");
}

WalkConfig walk_from(const TargetGenConfig& cfg) {
    WalkConfig wc;
    wc.start_t = cfg.start_t;
    wc.constrain_to = cfg.constrain_to;
    wc.filter = &cfg.filter;
    wc.respaced_steps = cfg.respaced_steps;
    wc.deterministic_tail = cfg.deterministic_tail;
    return wc;
}

Image walk_one(const Image& y0, const WalkConfig& wc, const Denoiser& den,
               const NoiseSchedule& sched, RngStream& rng) {
    SingleDenoiserAdapter adapter(den);
    std::vector<Image> batch{y0};
    std::vector<RngStream*> rngs{&rng};
    return guided_reverse(batch, wc, adapter, sched, rngs).front();
}

}  // namespace

Image generate_pseudo_target(const Image& y0, const TargetGenConfig& cfg, const Denoiser& den,
                             const NoiseSchedule& sched, RngStream& rng) {
    validate_target_config(cfg, sched);
    return walk_one(y0, walk_from(cfg), den, sched, rng);
}

std::vector<Image> generate_pseudo_targets(const std::vector<Image>& y0s, const TargetGenConfig& cfg,
                                           const BatchDenoiser& den, const NoiseSchedule& sched,
                                           std::vector<RngStream>& rngs) {
    validate_target_config(cfg, sched);
    std::vector<RngStream*> ptrs;
    ptrs.reserve(rngs.size());
    for (RngStream& r : rngs) ptrs.push_back(&r);
    return guided_reverse(y0s, walk_from(cfg), den, sched, ptrs);
}

Image difface_sample(const Image& y0, int start_t, const Denoiser& den, const NoiseSchedule& sched,
                     RngStream& rng, int respaced_steps) {
    WalkConfig wc;
    wc.start_t = start_t;
    wc.respaced_steps = respaced_steps;
    return walk_one(y0, wc, den, sched, rng);
}

Image ilvr_sample(const Image& y0, int start_t, const LowPassFilter& f, const Denoiser& den,
                  const NoiseSchedule& sched, RngStream& rng, int respaced_steps) {
    TargetGenConfig cfg;
    cfg.start_t = start_t;
    cfg.constrain_to = 0;
    cfg.filter = f;
    cfg.respaced_steps = respaced_steps;
    return generate_pseudo_target(y0, cfg, den, sched, rng);
}

Image dr2_sample(const Image& y0, int start_t, int project_t, const LowPassFilter& f,
                 const Denoiser& den, const NoiseSchedule& sched, RngStream& rng,
                 int respaced_steps) {
    if (project_t < 1) throw param_error("dr2_sample: projection timestep must be >= 1");
    if (project_t >= start_t) throw param_error("dr2_sample: start_t must exceed project_t");
    WalkConfig wc;
    wc.start_t = start_t;
    wc.constrain_to = project_t;
    wc.filter = &f;
    wc.respaced_steps = respaced_steps;
    wc.project_at_floor = true;
    return walk_one(y0, wc, den, sched, rng);
}

double lowfreq_gap(const Image& x0, const Image& y0, int t, const LowPassFilter& f,
                   const NoiseSchedule& sched, RngStream& rng) {
    require_same_shape(x0, y0, "lowfreq_gap");
    require_domain(x0, Domain::pixel01, "lowfreq_gap");
    require_domain(y0, Domain::pixel01, "lowfreq_gap");

    Image x0d = to_diffusion(x0);
    Image y0d = to_diffusion(y0);
    Image eps = sample_noise_like(x0d, rng);
    Image lx = lowpass(q_sample(x0d, t, eps, sched), f);
    Image ly = lowpass(q_sample(y0d, t, eps, sched), f);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        double d = ly[i] - lx[i];
        num += d * d;
        den += lx[i] * lx[i];
    }
    if (den == 0.0) throw numeric_error("lowfreq_gap: reference low band is identically zero");
    return std::sqrt(num) / std::sqrt(den);
}

}  // namespace retarget::guidance
