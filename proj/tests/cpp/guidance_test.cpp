#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "retarget/core/rng.hpp"
#include "retarget/guidance/targets.hpp"

using namespace retarget;
using namespace retarget::guidance;
using diffusion::Denoiser;
using diffusion::make_schedule;

namespace {

Image random_image(RngStream& rng, int c, int h, int w, double lo = 0.0, double hi = 1.0) {
    Image img(c, h, w, Domain::pixel01);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform_in(lo, hi);
    return img;
}

// Pixel values on the k/256 grid survive the round trip to [-1,1] bitwise.
Image dyadic_image(RngStream& rng, int c, int h, int w) {
    Image img(c, h, w, Domain::pixel01);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(rng.uniform_int(0, 256)) / 256.0;
    return img;
}

bool bitwise_equal(const Image& a, const Image& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

// Perfect noise estimate for a known clean image.
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

// Deterministic stand-in with no knowledge of any clean image.
class ToyDenoiser : public Denoiser {
  public:
    Image predict_noise(const Image& x_t, int t) const override {
        Image eps = x_t;
        double s = 0.1 + 0.3 * static_cast<double>(t % 7);
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = std::tanh(x_t[i]) * s;
        return eps;
    }
};

class ZeroDenoiser : public Denoiser {
  public:
    Image predict_noise(const Image& x_t, int) const override {
        Image eps = x_t;
        for (auto& v : eps.data()) v = 0.0;
        return eps;
    }
};

class CountingDenoiser : public Denoiser {
  public:
    explicit CountingDenoiser(const Denoiser& inner) : inner_(&inner) {}
    Image predict_noise(const Image& x_t, int t) const override {
        timesteps.push_back(t);
        return inner_->predict_noise(x_t, t);
    }
    mutable std::vector<int> timesteps;

  private:
    const Denoiser* inner_;
};

}  // namespace

TEST_CASE("lowpass keeps constants and averages blocks") {
    for (int factor : {1, 2, 4, 16}) {
        LowPassFilter f{factor, LowPassFilter::Upsample::nearest};
        Image c = Image::constant(3, 32, 32, Domain::pixel01, 0.37);
        Image out = lowpass(c, f);
        CHECK(max_abs_diff(out, c) < 1e-14);
    }

    Image checker(1, 8, 8, Domain::pixel01);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) checker.at(0, y, x) = (x + y) % 2 == 0 ? 0.0 : 1.0;
    Image out = lowpass(checker, LowPassFilter{2, LowPassFilter::Upsample::nearest});
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("lowpass with nearest upsampling is an idempotent linear projection") {
    RngStream rng(401, "lowpass");
    for (int factor : {2, 4, 16}) {
        LowPassFilter f{factor, LowPassFilter::Upsample::nearest};
        Image x = random_image(rng, 3, 32, 32);
        Image y = random_image(rng, 3, 32, 32);

        Image px = lowpass(x, f);
        CHECK(max_abs_diff(lowpass(px, f), px) < 1e-13);

        double a = 0.7, b = -1.3;
        Image mix = x;
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
        Image lhs = lowpass(mix, f);
        Image py = lowpass(y, f);
        for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - (a * px[i] + b * py[i])) < 1e-12);
    }
}

TEST_CASE("lowpass bilinear mode stays linear and rejects bad shapes") {
    RngStream rng(402, "bilinear");
    LowPassFilter f{4, LowPassFilter::Upsample::bilinear};
    Image x = random_image(rng, 1, 16, 16);
    Image y = random_image(rng, 1, 16, 16);
    Image mix = x;
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 0.25 * x[i] + 0.5 * y[i];
    Image lhs = lowpass(mix, f);
    Image px = lowpass(x, f);
    Image py = lowpass(y, f);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(std::abs(lhs[i] - (0.25 * px[i] + 0.5 * py[i])) < 1e-13);

    CHECK_THROWS_AS(lowpass(random_image(rng, 1, 30, 32), LowPassFilter{16}), shape_error);
    CHECK_THROWS_AS(lowpass(x, LowPassFilter{0}), param_error);
}

TEST_CASE("constrained_step swaps exactly the low band") {
    RngStream rng(403, "constrain");
    LowPassFilter f{4, LowPassFilter::Upsample::nearest};
    Image x = random_image(rng, 3, 16, 16);
    Image y = random_image(rng, 3, 16, 16);

    Image self = constrained_step(x, x, f);
    CHECK(max_abs_diff(self, x) < 1e-15);

    Image out = constrained_step(x, y, f);
    CHECK(max_abs_diff(lowpass(out, f), lowpass(y, f)) < 1e-12);

    Image ident = constrained_step(x, y, LowPassFilter{1});
    CHECK(bitwise_equal(ident, y));

    Image small = random_image(rng, 3, 8, 8);
    CHECK_THROWS_AS(constrained_step(x, small, f), shape_error);
}

TEST_CASE("trivial filter with full-depth constraint reproduces the input") {
    NoiseSchedule sched = make_schedule(40, 1e-4, 0.02);
    ZeroDenoiser den;
    TargetGenConfig cfg;
    cfg.start_t = 30;
    cfg.constrain_to = 0;
    cfg.filter = LowPassFilter{1};
    cfg.respaced_steps = 0;

    RngStream rng1(77, "exact/dyadic");
    Image dy = dyadic_image(rng1, 3, 8, 8);
    Image out = generate_pseudo_target(dy, cfg, den, sched, rng1);
    CHECK(bitwise_equal(out, dy));

    RngStream rng2(78, "exact/grid255");
    Image y255(1, 8, 8, Domain::pixel01);
    for (std::size_t i = 0; i < y255.size(); ++i)
        y255[i] = static_cast<double>(rng2.uniform_int(0, 255)) / 255.0;
    Image out2 = generate_pseudo_target(y255, cfg, den, sched, rng2);
    CHECK(max_abs_diff(out2, y255) < 1e-15);
}

TEST_CASE("empty constraint window matches the unconditional sampler bitwise") {
    NoiseSchedule sched = make_schedule(50, 1e-4, 0.02);
    ToyDenoiser den;
    RngStream rng(500, "img");
    Image y0 = random_image(rng, 3, 16, 16);

    // Respaced grid for T=50, S=10 keeps {1,6,12,17,23,28,34,39,45,50};
    // start 48 enters at 45 and a floor of 46 leaves no constrained step.
    TargetGenConfig cfg;
    cfg.start_t = 48;
    cfg.constrain_to = 46;
    cfg.filter = LowPassFilter{4};
    cfg.respaced_steps = 10;

    RngStream ra(900, "shared");
    RngStream rb(900, "shared");
    Image ours = generate_pseudo_target(y0, cfg, den, sched, ra);
    Image plain = difface_sample(y0, 48, den, sched, rb, 10);
    CHECK(bitwise_equal(ours, plain));
}

TEST_CASE("zero constraint floor matches the fully guided sampler bitwise") {
    NoiseSchedule sched = make_schedule(50, 1e-4, 0.02);
    ToyDenoiser den;
    RngStream rng(501, "img");
    Image y0 = random_image(rng, 3, 16, 16);

    TargetGenConfig cfg;
    cfg.start_t = 40;
    cfg.constrain_to = 0;
    cfg.filter = LowPassFilter{4};
    cfg.respaced_steps = 10;

    RngStream ra(901, "shared");
    RngStream rb(901, "shared");
    Image ours = generate_pseudo_target(y0, cfg, den, sched, ra);
    Image guided = ilvr_sample(y0, 40, cfg.filter, den, sched, rb, 10);
    CHECK(bitwise_equal(ours, guided));
}

TEST_CASE("unconditional sampler with zero start returns the input") {
    NoiseSchedule sched = make_schedule(20, 1e-4, 0.02);
    ToyDenoiser den;
    RngStream rng(502, "img");
    Image y0 = random_image(rng, 1, 8, 8);
    RngStream r(902, "s");
    Image out = difface_sample(y0, 0, den, sched, r);
    CHECK(bitwise_equal(out, y0));
}

TEST_CASE("fully guided sampler pins the low band of the output") {
    NoiseSchedule sched = make_schedule(100, 1e-4, 0.02);
    RngStream rng(503, "img");
    Image x0 = random_image(rng, 3, 16, 16, 0.3, 0.7);
    Image y0 = random_image(rng, 3, 16, 16, 0.25, 0.75);
    OracleDenoiser den(to_diffusion(x0), sched);

    LowPassFilter f{4, LowPassFilter::Upsample::nearest};
    RngStream r(903, "s");
    Image out = ilvr_sample(y0, 80, f, den, sched, r, 20);
    CHECK(max_abs_diff(lowpass(out, f), lowpass(y0, f)) < 1e-6);
}

TEST_CASE("one-step projection recovers the oracle clean image") {
    NoiseSchedule sched = make_schedule(100, 1e-4, 0.02);
    RngStream rng(504, "img");
    Image x0 = random_image(rng, 3, 16, 16, 0.2, 0.8);
    Image y0 = random_image(rng, 3, 16, 16, 0.2, 0.8);
    OracleDenoiser oracle(to_diffusion(x0), sched);

    LowPassFilter f{4};
    RngStream r(904, "s");
    Image out = dr2_sample(y0, 80, 40, f, oracle, sched, r, 20);
    CHECK(max_abs_diff(out, x0) < 1e-9);
}

TEST_CASE("one-step projection runs the expected number of denoiser calls") {
    NoiseSchedule sched = make_schedule(50, 1e-4, 0.02);
    ToyDenoiser toy;
    CountingDenoiser den(toy);
    RngStream rng(505, "img");
    Image y0 = random_image(rng, 1, 8, 8);

    // Full grid: one constrained step from 30 to 29, then the jump at 29.
    RngStream r(905, "s");
    dr2_sample(y0, 30, 29, LowPassFilter{4}, den, sched, r);
    REQUIRE(den.timesteps.size() == 2);
    CHECK(den.timesteps[0] == 30);
    CHECK(den.timesteps[1] == 29);
}

TEST_CASE("sampler guards reject inconsistent configurations") {
    NoiseSchedule sched = make_schedule(50, 1e-4, 0.02);
    ToyDenoiser den;
    RngStream rng(506, "img");
    Image y0 = random_image(rng, 1, 16, 16);
    RngStream r(906, "s");

    TargetGenConfig bad;
    bad.start_t = 10;
    bad.constrain_to = 10;
    CHECK_THROWS_AS(generate_pseudo_target(y0, bad, den, sched, r), param_error);

    bad.start_t = 60;
    bad.constrain_to = 5;
    CHECK_THROWS_AS(generate_pseudo_target(y0, bad, den, sched, r), param_error);

    TargetGenConfig odd;
    odd.start_t = 20;
    odd.constrain_to = 5;
    odd.filter = LowPassFilter{16};
    Image narrow = random_image(rng, 1, 24, 24);
    CHECK_THROWS_AS(generate_pseudo_target(narrow, odd, den, sched, r), shape_error);

    CHECK_THROWS_AS(dr2_sample(y0, 30, 0, LowPassFilter{4}, den, sched, r), param_error);
    CHECK_THROWS_AS(dr2_sample(y0, 30, 30, LowPassFilter{4}, den, sched, r), param_error);

    Image wrong = to_diffusion(y0);
    CHECK_THROWS_AS(difface_sample(wrong, 10, den, sched, r), param_error);
}

TEST_CASE("generation is deterministic and independent of batching") {
    NoiseSchedule sched = make_schedule(60, 1e-4, 0.02);
    ToyDenoiser den;
    RngStream rng(507, "imgs");
    std::vector<Image> ys;
    for (int i = 0; i < 3; ++i) ys.push_back(random_image(rng, 3, 16, 16));

    TargetGenConfig cfg;
    cfg.start_t = 45;
    cfg.constrain_to = 15;
    cfg.filter = LowPassFilter{4};
    cfg.respaced_steps = 12;

    uint64_t root = 9090;
    std::vector<RngStream> batch_rngs;
    for (int i = 0; i < 3; ++i) batch_rngs.emplace_back(root, "gen/" + std::to_string(i));
    SingleDenoiserAdapter adapter(den);
    std::vector<Image> batched = generate_pseudo_targets(ys, cfg, adapter, sched, batch_rngs);

    for (int i = 0; i < 3; ++i) {
        RngStream solo(root, "gen/" + std::to_string(i));
        Image one = generate_pseudo_target(ys[i], cfg, den, sched, solo);
        CHECK(bitwise_equal(one, batched[i]));
    }

    std::vector<RngStream> again;
    for (int i = 0; i < 3; ++i) again.emplace_back(root, "gen/" + std::to_string(i));
    std::vector<Image> rerun = generate_pseudo_targets(ys, cfg, adapter, sched, again);
    for (int i = 0; i < 3; ++i) CHECK(bitwise_equal(rerun[i], batched[i]));
}

TEST_CASE("shared-noise low-frequency gap shrinks as the timestep grows") {
    NoiseSchedule sched = make_schedule(1000, 1e-4, 0.02);
    RngStream rng(508, "pairs");
    LowPassFilter f{4};

    Image x0 = random_image(rng, 3, 16, 16, 0.2, 0.8);
    Image same = x0;
    RngStream rz(908, "zero");
    CHECK(lowfreq_gap(x0, same, 300, f, sched, rz) == 0.0);

    int shrank = 0;
    for (int p = 0; p < 10; ++p) {
        Image clean = random_image(rng, 3, 16, 16, 0.2, 0.8);
        Image shifted = clean;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x)
                    shifted.at(c, y, x) = std::clamp(clean.at(c, y, x) + 0.12 * std::sin(0.4 * y) + 0.05, 0.0, 1.0);
        RngStream ra(909, "gap/" + std::to_string(p) + "/deep");
        RngStream rb(909, "gap/" + std::to_string(p) + "/shallow");
        double deep = lowfreq_gap(clean, shifted, 600, f, sched, ra);
        double shallow = lowfreq_gap(clean, shifted, 100, f, sched, rb);
        if (deep < shallow) ++shrank;
    }
    CHECK(shrank >= 9);
}
