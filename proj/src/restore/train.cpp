#include "retarget/restore/train.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "retarget/core/checkpoint.hpp"
#include "retarget/core/io.hpp"
#include "retarget/core/errors.hpp"
#include "retarget/core/rng.hpp"
#include "retarget/nn/tensor.hpp"

namespace retarget::restore {

namespace {

using nn::AdamW;
using nn::DiscriminatorNet;
using nn::Param;
using nn::RestorerNet;
using nn::Tensor;

std::vector<std::vector<double>> snapshot_params(const std::vector<Param*>& params) {
    std::vector<std::vector<double>> snap;
    snap.reserve(params.size());
    for (const Param* p : params) snap.push_back(p->w);
    return snap;
}

void restore_snapshot(const std::vector<Param*>& params,
                      const std::vector<std::vector<double>>& snap) {
    for (size_t i = 0; i < params.size(); ++i) params[i]->w = snap[i];
}

void zero_grads(const std::vector<Param*>& params) {
    for (Param* p : params) p->zero_grad();
}

Tensor batch_by_index(const std::vector<Image>& pool, const std::vector<int>& idx) {
    std::vector<Image> picked;
    picked.reserve(idx.size());
    for (int i : idx) picked.push_back(pool[i]);
    return nn::batch_from_images(picked);
}

std::vector<int> draw_indices(RngStream& rng, int count, int pool) {
    std::vector<int> idx(count);
    for (int& i : idx) i = static_cast<int>(rng.uniform_int(0, pool - 1));
    return idx;
}

void check_corpus(const std::vector<Image>& imgs, const char* what) {
    if (imgs.empty()) throw data_error(std::string(what) + " corpus is empty");
    for (const Image& im : imgs) {
        require_domain(im, Domain::pixel01, what);
        if (!im.same_shape(imgs.front()))
            throw data_error(std::string(what) + " corpus mixes image shapes");
    }
}

}  // namespace

TrainResult pretrain_restorer(RestorerNet& net, const std::vector<Image>& hq,
                              const degrade::ClassicRange& range, const LossWeights& w,
                              const TrainConfig& cfg, nn::FeatureNet& feat, const IterFn& on_iter,
                              int disc_width) {
    check_corpus(hq, "pretrain");
    const int min_side = std::min(hq.front().height(), hq.front().width());
    degrade::ClassicRange rng_range = range;
    // keep at least 2x2 after downscaling regardless of the configured range
    rng_range.r_hi = std::min(rng_range.r_hi, static_cast<double>(min_side) / 2.0);
    rng_range.r_lo = std::min(rng_range.r_lo, rng_range.r_hi);

    const bool use_gan = w.lambda_gan > 0.0;
    auto params = net.named_params().flat();
    AdamW opt(params, {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});

    std::unique_ptr<DiscriminatorNet> disc;
    std::unique_ptr<AdamW> d_opt;
    std::vector<Param*> d_params;
    if (use_gan) {
        disc = std::make_unique<DiscriminatorNet>(hq.front().channels(), disc_width,
                                                  RngStream(cfg.seed, "pretrain/disc").seed());
        d_params = disc->named_params().flat();
        d_opt = std::make_unique<AdamW>(d_params, AdamW::Options{cfg.lr, 0.9, 0.999, 1e-8, 0.0});
    }

    RngStream batch_rng(cfg.seed, "pretrain/batch");
    RngStream deg_rng(cfg.seed, "pretrain/degrade");

    const int snap_every = cfg.checkpoint_every > 0 ? cfg.checkpoint_every : 200;
    auto snapshot = snapshot_params(params);

    TrainResult result;
    result.loss_history.reserve(cfg.iters);
    for (int iter = 0; iter < cfg.iters; ++iter) {
        auto idx = draw_indices(batch_rng, cfg.batch, static_cast<int>(hq.size()));
        std::vector<Image> lq;
        lq.reserve(idx.size());
        for (int i : idx) {
            auto p = degrade::sample_classic_params(rng_range, deg_rng);
            lq.push_back(degrade::classic_degrade(hq[i], p, deg_rng));
        }
        Tensor lq_t = nn::batch_from_images(lq);
        Tensor hq_t = batch_by_index(hq, idx);

        Tensor pred = net.forward(lq_t);

        double d_loss = 0.0;
        if (use_gan) {
            zero_grads(d_params);
            d_loss = gan_discriminator_loss(*disc, pred, hq_t);
            d_opt->set_lr(scheduled_lr(cfg, iter));
            d_opt->step();
            result.d_loss_history.push_back(d_loss);
        }

        zero_grads(params);
        Tensor dpred;
        double loss = total_loss(pred, hq_t, disc.get(), feat, w, true, &dpred);
        if (!std::isfinite(loss) || !std::isfinite(d_loss)) {
            restore_snapshot(params, snapshot);
            result.diverged = true;
            result.stopped_at = iter;
            break;
        }
        // snapshot pre-step weights that just produced a finite loss
        if (iter % snap_every == 0) snapshot = snapshot_params(params);
        net.backward(dpred);
        opt.set_lr(scheduled_lr(cfg, iter));
        opt.step();

        result.loss_history.push_back(loss);
        if (on_iter) on_iter(iter, loss);
    }
    return result;
}

TrainResult finetune_restorer(RestorerNet& net, const std::vector<Image>& lq,
                              const std::vector<Image>& targets, const std::vector<Image>& real,
                              const LossWeights& w, const TrainConfig& cfg, nn::FeatureNet& feat,
                              const IterFn& on_iter, const EvalFn& on_eval, int disc_width) {
    if (lq.size() != targets.size())
        throw data_error("finetune needs one target per input image");
    check_corpus(lq, "finetune input");
    check_corpus(targets, "finetune target");
    for (size_t i = 0; i < lq.size(); ++i)
        if (!lq[i].same_shape(targets[i])) throw data_error("finetune pair shapes differ");

    const bool use_gan = w.lambda_gan > 0.0;
    if (use_gan) check_corpus(real, "finetune real");

    auto params = net.named_params().flat();
    AdamW opt(params, {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});

    std::unique_ptr<DiscriminatorNet> disc;
    std::unique_ptr<AdamW> d_opt;
    std::vector<Param*> d_params;
    if (use_gan) {
        disc = std::make_unique<DiscriminatorNet>(lq.front().channels(), disc_width,
                                                  RngStream(cfg.seed, "finetune/disc").seed());
        d_params = disc->named_params().flat();
        d_opt = std::make_unique<AdamW>(d_params, AdamW::Options{cfg.lr, 0.9, 0.999, 1e-8, 0.0});
    }

    RngStream batch_rng(cfg.seed, "finetune/batch");
    RngStream real_rng(cfg.seed, "finetune/real");

    const int snap_every = cfg.checkpoint_every > 0 ? cfg.checkpoint_every : 200;
    auto snapshot = snapshot_params(params);

    TrainResult result;
    result.loss_history.reserve(cfg.iters);
    for (int iter = 0; iter < cfg.iters; ++iter) {
        auto idx = draw_indices(batch_rng, cfg.batch, static_cast<int>(lq.size()));
        Tensor lq_t = batch_by_index(lq, idx);
        Tensor tgt_t = batch_by_index(targets, idx);

        Tensor pred = net.forward(lq_t);

        double d_loss = 0.0;
        if (use_gan) {
            auto ridx = draw_indices(real_rng, cfg.batch, static_cast<int>(real.size()));
            Tensor real_t = batch_by_index(real, ridx);
            // generator-side backward from the previous iteration left grads on
            // the discriminator; clear them before its own update
            zero_grads(d_params);
            d_loss = gan_discriminator_loss(*disc, pred, real_t);
            d_opt->set_lr(scheduled_lr(cfg, iter));
            d_opt->step();
            result.d_loss_history.push_back(d_loss);
        }

        zero_grads(params);
        Tensor dpred;
        double loss = total_loss(pred, tgt_t, disc.get(), feat, w, true, &dpred);
        if (!std::isfinite(loss) || !std::isfinite(d_loss)) {
            restore_snapshot(params, snapshot);
            result.diverged = true;
            result.stopped_at = iter;
            break;
        }
        // snapshot pre-step weights that just produced a finite loss
        if (iter % snap_every == 0) snapshot = snapshot_params(params);
        net.backward(dpred);
        opt.set_lr(scheduled_lr(cfg, iter));
        opt.step();

        result.loss_history.push_back(loss);
        if (on_iter) on_iter(iter, loss);
        if (on_eval && cfg.eval_every > 0 && (iter + 1) % cfg.eval_every == 0) on_eval(iter);
    }
    return result;
}

void save_restorer(const std::string& path, RestorerNet& net, const json& extra) {
    Checkpoint ckpt;
    ckpt.manifest["kind"] = "restorer";
    ckpt.manifest["arch"] = {
        {"channels", net.channels}, {"width", net.width}, {"depth", net.depth}};
    for (auto& [key, val] : extra.items()) ckpt.manifest[key] = val;
    auto np = net.named_params();
    nn::save_params(ckpt, np);
    ckpt.save(path);
}

LoadedRestorer load_restorer(const std::string& path) {
    Checkpoint ckpt = Checkpoint::load(path);
    if (ckpt.manifest.value("kind", "") != "restorer")
        throw data_error("checkpoint is not a restorer: " + path);
    const auto& arch = ckpt.manifest.at("arch");
    LoadedRestorer out;
    out.net = std::make_unique<RestorerNet>(arch.at("channels").get<int>(),
                                            arch.at("width").get<int>(),
                                            arch.at("depth").get<int>(), 0);
    auto np = out.net->named_params();
    nn::load_params(ckpt, np);
    out.manifest = ckpt.manifest;
    return out;
}

void write_loss_csv(const std::string& path,
                    const std::vector<std::pair<std::string, const std::vector<double>*>>& series) {
    if (series.empty()) throw param_error("loss csv needs at least one series");
    const size_t rows = series.front().second->size();
    for (const auto& [name, vals] : series)
        if (vals->size() != rows) throw param_error("loss csv series lengths differ");

    std::string text = "iter";
    for (const auto& [name, vals] : series) text += "," + name;
    text += "\n";
    char buf[64];
    for (size_t r = 0; r < rows; ++r) {
        std::snprintf(buf, sizeof(buf), "%zu", r);
        text += buf;
        for (const auto& [name, vals] : series) {
            std::snprintf(buf, sizeof(buf), ",%.17g", (*vals)[r]);
            text += buf;
        }
        text += "\n";
    }
    write_file_bytes(path, text.data(), text.size());
}

}  // namespace retarget::restore
