#pragma once

#include <cstdint>
#include <string>

#include "retarget/core/checkpoint.hpp"
#include "retarget/diffusion/schedule.hpp"
#include "retarget/guidance/lowpass.hpp"
#include "retarget/guidance/targets.hpp"
#include "retarget/restore/losses.hpp"

namespace retarget::pipeline {

// Knobs shared across commands. Every run re-derives its per-stage random
// streams from the one root seed, so a config plus a seed pins every artifact.
struct RunConfig {
    std::uint64_t seed = 1234;
    std::string data_root = "data";

    // schedule
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::string variance = "posterior";  // posterior | beta
    int steps = 250;                     // sampler grid; 0 walks the full schedule

    // target generation
    int k_start = 600;   // depth of the entry noising step
    int l_stop = 360;    // last constrained timestep; below it the walk is free
    int n_factor = 16;   // low-pass block size
    std::string upsample = "nearest";  // nearest | bilinear
    std::string sampler = "ours";      // ours | difface | ilvr | dr2
    bool skip_restorer = false;

    // losses
    double lambda_lpips = 0.1;
    double lambda_gan = 0.1;

    void validate() const;  // cross-field checks; throws before any side effect

    diffusion::NoiseSchedule schedule() const;
    guidance::LowPassFilter filter() const;
    guidance::TargetGenConfig targetgen() const;
    restore::LossWeights weights() const;

    json to_json() const;
};

// Stable sub-seed for a named stage.
std::uint64_t stage_seed(std::uint64_t root, const std::string& stage);

}  // namespace retarget::pipeline
