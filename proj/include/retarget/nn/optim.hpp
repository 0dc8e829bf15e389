#pragma once

#include <vector>

#include "retarget/nn/layers.hpp"

namespace retarget::nn {

// Adam with decoupled weight decay.
class AdamW {
  public:
    struct Options {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
    };

    AdamW(std::vector<Param*> params, Options opts);

    void step();
    void zero_grad();
    void set_lr(double lr) { opts_.lr = lr; }
    double lr() const { return opts_.lr; }
    int64_t steps_taken() const { return t_; }

    // Moment buffers, exposed for checkpointing.
    std::vector<std::vector<double>>& m() { return m_; }
    std::vector<std::vector<double>>& v() { return v_; }
    void set_steps_taken(int64_t t) { t_ = t; }

  private:
    std::vector<Param*> params_;
    Options opts_;
    std::vector<std::vector<double>> m_, v_;
    int64_t t_ = 0;
};

// Cosine decay from lr0 to floor over total steps; constant when total <= 0.
double cosine_lr(double lr0, int64_t step, int64_t total, double floor = 0.0);

// Shared settings for the training loops.
struct TrainConfig {
    double lr = 1e-4;
    int iters = 1000;
    int batch = 4;
    enum class LrSchedule { cosine, constant } schedule = LrSchedule::cosine;
    uint64_t seed = 0;
    double weight_decay = 0.0;
    int checkpoint_every = 0;  // snapshot cadence; 0 keeps only the final state
    int eval_every = 0;        // 0 disables periodic eval callbacks
    int log_every = 50;
};

// Learning rate for one iteration under the configured schedule.
double scheduled_lr(const TrainConfig& cfg, int iter);

}  // namespace retarget::nn
