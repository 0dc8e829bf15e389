#include <doctest.h>

#include <cmath>

#include "retarget/core/rng.hpp"
#include "retarget/diffusion/sampling.hpp"
#include "retarget/diffusion/schedule.hpp"

using namespace retarget;
using namespace retarget::diffusion;

namespace {

Image random_x0(int c, int h, int w, RngStream& rng) {
    Image img(c, h, w, Domain::diffusion11);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform_in(-1.0, 1.0);
    return img;
}

// Denoiser that knows the clean image and reports the exact noise implied by
// the forward process at each timestep.
class OracleDenoiser : public Denoiser {
  public:
    OracleDenoiser(Image x0, const NoiseSchedule& sched) : x0_(std::move(x0)), sched_(&sched) {}
    Image predict_noise(const Image& x_t, int t) const override {
        double abar = sched_->alpha_bar_at(t);
        double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
        Image eps = x_t;
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (x_t[i] - a * x0_[i]) / b;
        return eps;
    }

  private:
    Image x0_;
    const NoiseSchedule* sched_;
};

}  // namespace

TEST_CASE("linear schedule matches hand-computed values") {
    auto s = make_schedule(1000, 1e-4, 0.02);
    CHECK(s.T == 1000);
    CHECK(s.betas.front() == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(s.betas.back() == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(s.alpha_bars[0] == doctest::Approx(0.9999).epsilon(1e-12));
    // Cumulative product over the full chain, frozen from an independent
    // high-precision computation.
    CHECK(s.alpha_bars[999] == doctest::Approx(4.0358297653756835e-05).epsilon(1e-10));
    CHECK(s.alpha_bar_at(0) == 1.0);
    CHECK(s.alpha_bar_at(1000) == s.alpha_bars[999]);

    auto two = make_schedule(2, 0.5, 0.5);
    CHECK(two.alpha_bars[1] == doctest::Approx(0.25).epsilon(1e-15));

    for (int t = 2; t <= 1000; ++t) CHECK(s.alpha_bars[t - 1] < s.alpha_bars[t - 2]);

    // Posterior variance follows the small-variance convention.
    int t = 500;
    double expect = (1.0 - s.alpha_bar_at(t - 1)) / (1.0 - s.alpha_bar_at(t)) * s.betas[t - 1];
    CHECK(s.posterior_variances[t - 1] == doctest::Approx(expect).epsilon(1e-14));
    CHECK(s.posterior_variances[0] == 0.0);

    CHECK_THROWS_AS(make_schedule(1, 1e-4, 0.02), param_error);
    CHECK_THROWS_AS(make_schedule(10, 0.0, 0.02), param_error);
    CHECK_THROWS_AS(make_schedule(10, 0.3, 0.2), param_error);
    CHECK_THROWS_AS(make_schedule(10, 1e-4, 1.0), param_error);
}

TEST_CASE("respacing keeps endpoints and preserves alpha_bar exactly") {
    auto s = make_schedule(1000, 1e-4, 0.02);
    auto r = respace(s, 250);
    REQUIRE(r.kept_timesteps.size() == 250);
    CHECK(r.kept_timesteps.front() == 1);
    CHECK(r.kept_timesteps.back() == 1000);

    int fours = 0, fives = 0;
    for (int i = 1; i < 250; ++i) {
        int gap = r.kept_timesteps[i] - r.kept_timesteps[i - 1];
        if (gap == 4) ++fours;
        else if (gap == 5) ++fives;
        else FAIL("unexpected gap ", gap);
    }
    CHECK(fours == 246);
    CHECK(fives == 3);

    for (int i = 0; i < 250; ++i) {
        int k = r.kept_timesteps[i];
        CHECK(r.alpha_bars[i] == s.alpha_bars[k - 1]);  // bitwise
        double abar_prev = i == 0 ? 1.0 : s.alpha_bars[r.kept_timesteps[i - 1] - 1];
        CHECK(r.betas[i] == doctest::Approx(1.0 - s.alpha_bars[k - 1] / abar_prev).epsilon(1e-13));
    }
}

TEST_CASE("identity respacing reproduces the base schedule") {
    auto s = make_schedule(40, 1e-4, 0.02);
    auto r = respace(s, 40);
    for (int i = 0; i < 40; ++i) {
        CHECK(r.kept_timesteps[i] == i + 1);
        CHECK(r.betas[i] == doctest::Approx(s.betas[i]).epsilon(1e-12));
        CHECK(r.alpha_bars[i] == s.alpha_bars[i]);
    }
    CHECK_THROWS_AS(respace(s, 41), param_error);
    CHECK_THROWS_AS(respace(s, 1), param_error);
}

TEST_CASE("schedule view maps original timesteps to grid positions") {
    auto s = make_schedule(1000, 1e-4, 0.02);
    auto r = respace(s, 250);
    ScheduleView view(r);
    CHECK(view.num_steps() == 250);
    CHECK(view.position_of(1) == 0);
    CHECK(view.position_of(1000) == 249);
    CHECK(view.position_at_or_below(600) == 149);
    CHECK(view.orig_t(149) == 599);
    CHECK(view.position_at_or_below(360) == 89);
    CHECK(view.orig_t(89) == 358);

    int constrained = 0;
    for (int pos = 0; pos < view.num_steps(); ++pos)
        if (view.orig_t(pos) > 358 && view.orig_t(pos) <= 599) ++constrained;
    CHECK(constrained == 60);

    CHECK_THROWS_AS(view.position_of(2), param_error);
    CHECK_THROWS_AS(view.position_at_or_below(0), param_error);

    ScheduleView base_view(s);
    CHECK(base_view.num_steps() == 1000);
    CHECK(base_view.position_of(737) == 736);
    CHECK(base_view.alpha_bar(736) == s.alpha_bars[736]);
}

TEST_CASE("q_sample closed form") {
    auto s = make_schedule(1000, 1e-4, 0.02);
    RngStream rng(21, "qsample");
    Image x0 = random_x0(3, 8, 8, rng);

    Image zero = Image::zeros(3, 8, 8, Domain::diffusion11);
    Image xt = q_sample(x0, 400, zero, s);
    double a = std::sqrt(s.alpha_bar_at(400));
    for (std::size_t i = 0; i < xt.size(); ++i) CHECK(xt[i] == a * x0[i]);

    // Variance of x_T with x0 = 0 approaches 1 - alpha_bar_T.
    Image big0 = Image::zeros(1, 100, 100, Domain::diffusion11);
    Image eps = sample_noise_like(big0, rng);
    Image xT = q_sample(big0, 1000, eps, s);
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < xT.size(); ++i) mean += xT[i];
    mean /= static_cast<double>(xT.size());
    for (std::size_t i = 0; i < xT.size(); ++i) var += (xT[i] - mean) * (xT[i] - mean);
    var /= static_cast<double>(xT.size());
    CHECK(var == doctest::Approx(1.0 - s.alpha_bar_at(1000)).epsilon(0.03));

    Image wrong(3, 8, 9, Domain::diffusion11);
    CHECK_THROWS_AS(q_sample(x0, 10, wrong, s), shape_error);
    CHECK_THROWS_AS(q_sample(x0, 0, zero, s), param_error);
    CHECK_THROWS_AS(q_sample(x0, 1001, zero, s), param_error);
}

TEST_CASE("iterated one-step forward kernels match the closed-form marginal") {
    auto s = make_schedule(50, 1e-4, 0.02);
    RngStream rng(31, "chain");
    const double x0 = 0.7;
    const int chains = 10000;
    double sum = 0, sum2 = 0;
    for (int c = 0; c < chains; ++c) {
        double x = x0;
        for (int t = 1; t <= 50; ++t)
            x = std::sqrt(s.alphas[t - 1]) * x + std::sqrt(s.betas[t - 1]) * rng.normal();
        sum += x;
        sum2 += x * x;
    }
    double mean = sum / chains;
    double var = sum2 / chains - mean * mean;
    double abar = s.alpha_bar_at(50);
    CHECK(mean == doctest::Approx(std::sqrt(abar) * x0).epsilon(0.03));
    CHECK(var == doctest::Approx(1.0 - abar).epsilon(0.03));
}

TEST_CASE("predict_x0 inverts the forward jump") {
    auto s = make_schedule(1000, 1e-4, 0.02);
    RngStream rng(41, "px0");
    Image x0 = random_x0(3, 8, 8, rng);
    Image eps = sample_noise_like(x0, rng);

    Image xt = q_sample(x0, 600, eps, s);
    Image rec = predict_x0(xt, 600, eps, s);
    CHECK(max_abs_diff(rec, x0) <= 1e-6);

    Image zero = Image::zeros(3, 8, 8, Domain::diffusion11);
    Image scaled = predict_x0(xt, 600, zero, s);
    double inv = 1.0 / std::sqrt(s.alpha_bar_at(600));
    for (std::size_t i = 0; i < scaled.size(); ++i)
        CHECK(scaled[i] == doctest::Approx(xt[i] * inv).epsilon(1e-14));

    // Small t: prediction stays within the noise-scaled bound of x_t.
    Image x1 = q_sample(x0, 1, eps, s);
    Image r1 = predict_x0(x1, 1, eps, s);
    double abar1 = s.alpha_bar_at(1);
    double max_xt = 0, max_eps = 0;
    for (std::size_t i = 0; i < x1.size(); ++i) {
        max_xt = std::max(max_xt, std::abs(x1[i]));
        max_eps = std::max(max_eps, std::abs(eps[i]));
    }
    double bound = (1.0 / std::sqrt(abar1) - 1.0) * max_xt +
                   std::sqrt(1.0 - abar1) / std::sqrt(abar1) * max_eps;
    CHECK(max_abs_diff(r1, x1) <= bound * (1 + 1e-12));
}

TEST_CASE("p_step injects no noise at the terminal step") {
    auto s = make_schedule(100, 1e-4, 0.02);
    ScheduleView view(s);
    RngStream rng(51, "terminal");
    Image x0 = random_x0(1, 6, 6, rng);
    Image eps = sample_noise_like(x0, rng);
    Image x1 = q_sample(x0, 1, eps, s);

    Image huge = Image::constant(1, 6, 6, Domain::diffusion11, 1e6);
    Image stepped = p_step(x1, 1, eps, view, &huge, false);
    Image stepped_det = p_step(x1, 1, eps, view, nullptr, true);
    CHECK(max_abs_diff(stepped, stepped_det) == 0.0);
    CHECK(max_abs_diff(stepped, x0) <= 1e-9);
}

TEST_CASE("oracle denoiser round trip recovers x0") {
    auto s = make_schedule(100, 1e-4, 0.02);
    RngStream rng(61, "oracle");
    Image x0 = random_x0(3, 8, 8, rng);
    OracleDenoiser oracle(x0, s);

    SUBCASE("full grid, deterministic") {
        ScheduleView view(s);
        Image eps = sample_noise_like(x0, rng);
        Image x = q_sample(x0, 100, eps, s);
        for (int pos = view.num_steps() - 1; pos >= 0; --pos) {
            int t = view.orig_t(pos);
            Image eh = oracle.predict_noise(x, t);
            x = p_step(x, t, eh, view, nullptr, true);
        }
        CHECK(max_abs_diff(x, x0) <= 1e-5);
    }

    SUBCASE("respaced grid, stochastic") {
        auto r = respace(s, 20);
        ScheduleView view(r);
        Image eps = sample_noise_like(x0, rng);
        Image x = q_sample(x0, 100, eps, s);
        for (int pos = view.num_steps() - 1; pos >= 0; --pos) {
            int t = view.orig_t(pos);
            Image eh = oracle.predict_noise(x, t);
            Image z = sample_noise_like(x, rng);
            x = p_step(x, t, eh, view, &z, false);
        }
        // Noise injected along the way still collapses at the final step.
        CHECK(max_abs_diff(x, x0) <= 1e-5);
    }
}

TEST_CASE("same seed gives bit-identical stochastic reverse passes") {
    auto s = make_schedule(100, 1e-4, 0.02);
    auto r = respace(s, 10);
    ScheduleView view(r);

    auto run = [&](uint64_t seed) {
        RngStream rng(seed, "pass");
        Image x0 = random_x0(1, 8, 8, rng);
        OracleDenoiser oracle(x0, s);
        Image x = q_sample(x0, 100, sample_noise_like(x0, rng), s);
        for (int pos = view.num_steps() - 1; pos >= 0; --pos) {
            int t = view.orig_t(pos);
            Image z = sample_noise_like(x, rng);
            x = p_step(x, t, oracle.predict_noise(x, t), view, &z, false);
        }
        return x;
    };

    Image a = run(77), b = run(77), c = run(78);
    CHECK(max_abs_diff(a, b) == 0.0);
    CHECK(max_abs_diff(a, c) > 0.0);
}
