#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "retarget/degrade/classic.hpp"
#include "retarget/nn/optim.hpp"
#include "retarget/restore/losses.hpp"

namespace retarget::restore {

using nn::TrainConfig;
using retarget::Image;
using retarget::json;

struct TrainResult {
    std::vector<double> loss_history;    // restorer objective per iteration
    std::vector<double> d_loss_history;  // empty when the GAN term is off
    bool diverged = false;
    int stopped_at = -1;  // iteration that produced a non-finite loss
};

using IterFn = std::function<void(int iter, double loss)>;
using EvalFn = std::function<void(int iter)>;

// Supervised pretraining on synthetic pairs: every batch element draws fresh
// classic-degradation parameters (the scale range is clamped so images stay
// at least 2x2). A non-finite loss stops the run and rolls the model back to
// the last snapshot instead of saving garbage. With lambda_gan > 0 a fresh
// discriminator trains against the clean corpus as real.
TrainResult pretrain_restorer(nn::RestorerNet& net, const std::vector<Image>& hq,
                              const degrade::ClassicRange& range, const LossWeights& w,
                              const TrainConfig& cfg, nn::FeatureNet& feat,
                              const IterFn& on_iter = nullptr, int disc_width = 32);

// Adaptation on fixed (input, target) pairs with a fresh discriminator whose
// real distribution is an external corpus; targets are only ever "fake". The
// two updates alternate every iteration. on_eval fires every eval_every
// iterations so callers can watch held-out quality during the run.
TrainResult finetune_restorer(nn::RestorerNet& net, const std::vector<Image>& lq,
                              const std::vector<Image>& targets, const std::vector<Image>& real,
                              const LossWeights& w, const TrainConfig& cfg, nn::FeatureNet& feat,
                              const IterFn& on_iter = nullptr, const EvalFn& on_eval = nullptr,
                              int disc_width = 32);

void save_restorer(const std::string& path, nn::RestorerNet& net,
                   const json& extra = json::object());

struct LoadedRestorer {
    std::unique_ptr<nn::RestorerNet> net;
    json manifest;
};

LoadedRestorer load_restorer(const std::string& path);

// iter column plus one column per named series; series must share a length.
void write_loss_csv(const std::string& path,
                    const std::vector<std::pair<std::string, const std::vector<double>*>>& series);

}  // namespace retarget::restore
