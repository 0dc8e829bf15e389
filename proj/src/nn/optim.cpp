#include "retarget/nn/optim.hpp"

#include <cmath>

#include "retarget/core/errors.hpp"

namespace retarget::nn {

AdamW::AdamW(std::vector<Param*> params, Options opts)
    : params_(std::move(params)), opts_(opts) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Param* p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void AdamW::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Param& p = *params_[pi];
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            double g = p.g[i];
            if (!std::isfinite(g)) throw numeric_error("AdamW: non-finite gradient");
            m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
            v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p.w[i] -= opts_.lr * (mhat / (std::sqrt(vhat) + opts_.eps) +
                                  opts_.weight_decay * p.w[i]);
        }
    }
}

void AdamW::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

double cosine_lr(double lr0, int64_t step, int64_t total, double floor) {
    if (total <= 0) return lr0;
    double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
    return floor + (lr0 - floor) * 0.5 * (1.0 + std::cos(frac * M_PI));
}

double scheduled_lr(const TrainConfig& cfg, int iter) {
    if (cfg.schedule == TrainConfig::LrSchedule::constant) return cfg.lr;
    return cosine_lr(cfg.lr, iter, cfg.iters);
}

}  // namespace retarget::nn
