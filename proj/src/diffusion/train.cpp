#include "retarget/diffusion/train.hpp"

#include <cmath>

#include "retarget/nn/tensor.hpp"

namespace retarget::diffusion {

using nn::Tensor;

Image NetDenoiser::predict_noise(const Image& x_t, int t) const {
    return net_->predict_noise_image(x_t, t);
}

std::vector<Image> NetDenoiser::predict_noise_batch(const std::vector<Image>& x_ts, int t) const {
    // one forward per image: GEMM blocking depends on batch width, so a joint
    // forward would let batch composition perturb low-order bits
    std::vector<Image> out;
    out.reserve(x_ts.size());
    for (const Image& x : x_ts) out.push_back(predict_noise(x, t));
    return out;
}

double ddpm_train_step(nn::DenoiserNet& net, const std::vector<Image>& x0_batch, RngStream& rng,
                       const NoiseSchedule& sched) {
    if (x0_batch.empty()) throw param_error("ddpm_train_step: empty batch");
    for (const Image& x0 : x0_batch) require_domain(x0, Domain::diffusion11, "ddpm_train_step");

    std::vector<int> ts;
    std::vector<Image> xts, epss;
    ts.reserve(x0_batch.size());
    for (const Image& x0 : x0_batch) {
        int t = static_cast<int>(rng.uniform_int(1, sched.T));
        Image eps = sample_noise_like(x0, rng);
        xts.push_back(q_sample(x0, t, eps, sched));
        epss.push_back(std::move(eps));
        ts.push_back(t);
    }

    Tensor x = nn::batch_from_images(xts);
    Tensor target = nn::batch_from_images(epss);
    Tensor pred = net.forward(x, ts);

    double loss = 0.0;
    Tensor dpred = Tensor::zeros_like(pred);
    double inv = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred.v[i] - target.v[i];
        loss += d * d * inv;
        dpred.v[i] = 2.0 * d * inv;
    }
    net.backward(dpred);

    if (!std::isfinite(loss))
        throw numeric_error("ddpm_train_step: non-finite loss (t range " + std::to_string(sched.T) + ")");
    return loss;
}

TrainResult train_denoiser(nn::DenoiserNet& net, const std::vector<Image>& corpus,
                           const NoiseSchedule& sched, const nn::TrainConfig& cfg,
                           const std::function<void(int, double)>& on_iter) {
    if (corpus.empty()) throw data_error("train_denoiser: empty corpus");
    if (cfg.iters < 0 || cfg.batch < 1) throw param_error("train_denoiser: bad iteration or batch count");

    nn::NamedParams np = net.named_params();
    nn::AdamW opt(np.flat(), {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    RngStream batch_rng(cfg.seed, "diffusion/batch");
    RngStream noise_rng(cfg.seed, "diffusion/noise");

    TrainResult result;
    result.loss_history.reserve(cfg.iters);
    for (int iter = 0; iter < cfg.iters; ++iter) {
        std::vector<Image> x0s;
        x0s.reserve(cfg.batch);
        for (int b = 0; b < cfg.batch; ++b) {
            int idx = static_cast<int>(batch_rng.uniform_int(0, static_cast<int64_t>(corpus.size()) - 1));
            x0s.push_back(to_diffusion(corpus[idx]));
        }

        opt.zero_grad();
        double loss = ddpm_train_step(net, x0s, noise_rng, sched);
        opt.set_lr(nn::scheduled_lr(cfg, iter));
        opt.step();

        result.loss_history.push_back(loss);
        if (on_iter) on_iter(iter, loss);
    }
    return result;
}

void save_denoiser(const std::string& path, nn::DenoiserNet& net, const NoiseSchedule& sched,
                   const json& extra) {
    Checkpoint ck;
    ck.manifest["kind"] = "denoiser";
    ck.manifest["arch"] = {{"in_ch", net.in_ch}, {"base_ch", net.base_ch}, {"emb_dim", net.emb_dim}};
    ck.manifest["schedule"] = {{"T", sched.T},
                               {"beta_start", sched.beta_start},
                               {"beta_end", sched.beta_end},
                               {"variance", sched.variance_mode == VarianceMode::posterior_small
                                                ? "posterior"
                                                : "beta"}};
    for (auto& [k, v] : extra.items()) ck.manifest[k] = v;
    nn::NamedParams np = net.named_params();
    nn::save_params(ck, np);
    ck.save(path);
}

LoadedDenoiser load_denoiser(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    if (!ck.manifest.contains("kind") || ck.manifest["kind"] != "denoiser")
        throw data_error("load_denoiser: " + path + " is not a denoiser checkpoint");

    const json& arch = ck.manifest["arch"];
    const json& sj = ck.manifest["schedule"];
    LoadedDenoiser out;
    out.net = std::make_unique<nn::DenoiserNet>(arch["in_ch"].get<int>(), arch["base_ch"].get<int>(),
                                                arch["emb_dim"].get<int>(), 0);
    out.sched = make_schedule(sj["T"].get<int>(), sj["beta_start"].get<double>(),
                              sj["beta_end"].get<double>(),
                              sj["variance"] == "beta" ? VarianceMode::beta
                                                       : VarianceMode::posterior_small);
    nn::NamedParams np = out.net->named_params();
    nn::load_params(ck, np);
    out.manifest = ck.manifest;
    return out;
}

}  // namespace retarget::diffusion
