#include "retarget/diffusion/schedule.hpp"

#include <cmath>
#include <cstring>

#include "retarget/core/rng.hpp"

namespace retarget::diffusion {

double NoiseSchedule::alpha_bar_at(int t) const {
    if (t < 0 || t > T) throw param_error("alpha_bar_at: t out of range");
    return t == 0 ? 1.0 : alpha_bars[t - 1];
}

uint64_t NoiseSchedule::hash() const {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) { h ^= b[i]; h *= 1099511628211ull; }
    };
    mix(&T, sizeof T);
    int vm = static_cast<int>(variance_mode);
    mix(&vm, sizeof vm);
    mix(&beta_start, sizeof beta_start);
    mix(&beta_end, sizeof beta_end);
    return h;
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end, VarianceMode vm) {
    if (T < 2) throw param_error("make_schedule: T must be >= 2");
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
        throw param_error("make_schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.T = T;
    s.variance_mode = vm;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.betas.resize(T);
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    s.posterior_variances.resize(T);

    double abar = 1.0;
    for (int i = 0; i < T; ++i) {
        double beta = beta_start + (beta_end - beta_start) * i / (T - 1);
        double abar_prev = abar;
        s.betas[i] = beta;
        s.alphas[i] = 1.0 - beta;
        abar *= s.alphas[i];
        s.alpha_bars[i] = abar;
        s.posterior_variances[i] = (1.0 - abar_prev) / (1.0 - abar) * beta;
    }
    return s;
}

RespacedSchedule respace(const NoiseSchedule& schedule, int S) {
    if (S < 2 || S > schedule.T)
        throw param_error("respace: need 2 <= S <= T");

    RespacedSchedule r;
    r.base = schedule;
    r.kept_timesteps.resize(S);
    const int T = schedule.T;
    for (int i = 0; i < S; ++i)
        r.kept_timesteps[i] = 1 + static_cast<int>(std::llround(
            static_cast<double>(T - 1) * i / (S - 1)));
    for (int i = 1; i < S; ++i)
        if (r.kept_timesteps[i] <= r.kept_timesteps[i - 1])
            throw param_error("respace: timestep grid not strictly increasing");

    r.betas.resize(S);
    r.alphas.resize(S);
    r.alpha_bars.resize(S);
    r.posterior_variances.resize(S);
    for (int i = 0; i < S; ++i) {
        double abar = schedule.alpha_bar_at(r.kept_timesteps[i]);
        double abar_prev = i == 0 ? 1.0 : r.alpha_bars[i - 1];
        r.alpha_bars[i] = abar;
        r.alphas[i] = abar / abar_prev;
        r.betas[i] = 1.0 - r.alphas[i];
        r.posterior_variances[i] = (1.0 - abar_prev) / (1.0 - abar) * r.betas[i];
    }
    return r;
}

ScheduleView::ScheduleView(const NoiseSchedule& s)
    : base_(&s),
      betas_(&s.betas),
      alphas_(&s.alphas),
      alpha_bars_(&s.alpha_bars),
      posterior_variances_(&s.posterior_variances) {}

ScheduleView::ScheduleView(const RespacedSchedule& s)
    : base_(&s.base),
      kept_(&s.kept_timesteps),
      betas_(&s.betas),
      alphas_(&s.alphas),
      alpha_bars_(&s.alpha_bars),
      posterior_variances_(&s.posterior_variances) {}

int ScheduleView::position_of(int t) const {
    int pos = position_at_or_below(t);
    if (orig_t(pos) != t) throw param_error("position_of: timestep not on grid");
    return pos;
}

int ScheduleView::position_at_or_below(int t) const {
    if (t < orig_t(0)) throw param_error("position_at_or_below: t below grid");
    if (t > orig_t(num_steps() - 1)) throw param_error("position_at_or_below: t above grid");
    if (!kept_) return t - 1;
    int lo = 0, hi = num_steps() - 1;
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        if ((*kept_)[mid] <= t) lo = mid; else hi = mid - 1;
    }
    return lo;
}

}  // namespace retarget::diffusion
