#include "retarget/restore/losses.hpp"

#include <cmath>

namespace retarget::restore {

namespace {

constexpr double kNormEps = 1e-10;

void check_prob(double p, const char* where) {
    if (!(p > 0.0) || !(p < 1.0)) throw numeric_error(std::string(where) + ": probability left (0,1)");
}

// Channel-unit normalization at each spatial location.
Tensor normalize_features(const Tensor& f) {
    Tensor z = f;
    for (int ni = 0; ni < f.n; ++ni)
        for (int y = 0; y < f.h; ++y)
            for (int x = 0; x < f.w; ++x) {
                double s = 0.0;
                for (int c = 0; c < f.c; ++c) s += f.at(ni, c, y, x) * f.at(ni, c, y, x);
                double nrm = std::sqrt(s + kNormEps);
                for (int c = 0; c < f.c; ++c) z.at(ni, c, y, x) = f.at(ni, c, y, x) / nrm;
            }
    return z;
}

// dL/df given dL/dz for z = f / sqrt(sum_c f^2 + eps).
Tensor normalize_backward(const Tensor& f, const Tensor& dz) {
    Tensor df = Tensor::zeros_like(f);
    for (int ni = 0; ni < f.n; ++ni)
        for (int y = 0; y < f.h; ++y)
            for (int x = 0; x < f.w; ++x) {
                double s = 0.0, dot = 0.0;
                for (int c = 0; c < f.c; ++c) {
                    s += f.at(ni, c, y, x) * f.at(ni, c, y, x);
                    dot += f.at(ni, c, y, x) * dz.at(ni, c, y, x);
                }
                double nrm = std::sqrt(s + kNormEps);
                double n3 = nrm * nrm * nrm;
                for (int c = 0; c < f.c; ++c)
                    df.at(ni, c, y, x) = dz.at(ni, c, y, x) / nrm - f.at(ni, c, y, x) * dot / n3;
            }
    return df;
}

}  // namespace

double l1_loss(const Tensor& pred, const Tensor& target, Tensor* dpred) {
    nn::require_same_shape(pred, target, "l1_loss");
    double inv = 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    if (dpred) *dpred = Tensor::zeros_like(pred);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred.v[i] - target.v[i];
        loss += std::abs(d) * inv;
        if (dpred) dpred->v[i] = (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) * inv;
    }
    return loss;
}

double lpips_loss(const Tensor& pred, const Tensor& target, nn::FeatureNet& feat, Tensor* dpred) {
    nn::require_same_shape(pred, target, "lpips_loss");

    std::vector<Tensor> ft = feat.forward(target);
    std::vector<Tensor> fp = feat.forward(pred);  // leaves pred in the layer caches

    double loss = 0.0;
    std::vector<Tensor> dlevels;
    for (std::size_t l = 0; l < fp.size(); ++l) {
        Tensor za = normalize_features(fp[l]);
        Tensor zb = normalize_features(ft[l]);
        double inv = 1.0 / static_cast<double>(za.size());
        double dl = 0.0;
        Tensor dz = Tensor::zeros_like(za);
        for (std::size_t i = 0; i < za.size(); ++i) {
            double d = za.v[i] - zb.v[i];
            dl += d * d * inv;
            dz.v[i] = 2.0 * d * inv;
        }
        loss += dl;
        if (dpred) dlevels.push_back(normalize_backward(fp[l], dz));
    }
    if (dpred) *dpred = feat.backward(dlevels);
    return loss;
}

GanLosses gan_losses(nn::DiscriminatorNet& d, const Tensor& fake, const Tensor& real,
                     bool saturating) {
    Tensor pf = d.forward(fake);
    double g = 0.0, df = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        check_prob(pf.v[i], "gan_losses");
        g += saturating ? std::log(1.0 - pf.v[i]) : -std::log(pf.v[i]);
        df += -std::log(1.0 - pf.v[i]);
    }
    g /= static_cast<double>(pf.size());
    df /= static_cast<double>(pf.size());

    Tensor pr = d.forward(real);
    double dr = 0.0;
    for (std::size_t i = 0; i < pr.size(); ++i) {
        check_prob(pr.v[i], "gan_losses");
        dr += -std::log(pr.v[i]);
    }
    dr /= static_cast<double>(pr.size());
    return {g, df + dr};
}

double gan_generator_loss(nn::DiscriminatorNet& d, const Tensor& fake, bool saturating,
                          Tensor* dfake) {
    Tensor p = d.forward(fake);
    double inv = 1.0 / static_cast<double>(p.size());
    double loss = 0.0;
    Tensor dp = Tensor::zeros_like(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        check_prob(p.v[i], "gan_generator_loss");
        if (saturating) {
            loss += std::log(1.0 - p.v[i]) * inv;
            dp.v[i] = -inv / (1.0 - p.v[i]);
        } else {
            loss += -std::log(p.v[i]) * inv;
            dp.v[i] = -inv / p.v[i];
        }
    }
    if (dfake) *dfake = d.backward(dp);
    return loss;
}

double gan_discriminator_loss(nn::DiscriminatorNet& d, const Tensor& fake, const Tensor& real) {
    Tensor pf = d.forward(fake);
    double inv_f = 1.0 / static_cast<double>(pf.size());
    double loss = 0.0;
    Tensor dpf = Tensor::zeros_like(pf);
    for (std::size_t i = 0; i < pf.size(); ++i) {
        check_prob(pf.v[i], "gan_discriminator_loss");
        loss += -std::log(1.0 - pf.v[i]) * inv_f;
        dpf.v[i] = inv_f / (1.0 - pf.v[i]);
    }
    d.backward(dpf);

    Tensor pr = d.forward(real);
    double inv_r = 1.0 / static_cast<double>(pr.size());
    Tensor dpr = Tensor::zeros_like(pr);
    for (std::size_t i = 0; i < pr.size(); ++i) {
        check_prob(pr.v[i], "gan_discriminator_loss");
        loss += -std::log(pr.v[i]) * inv_r;
        dpr.v[i] = -inv_r / pr.v[i];
    }
    d.backward(dpr);
    return loss;
}

double total_loss(const Tensor& pred, const Tensor& target, nn::DiscriminatorNet* d,
                  nn::FeatureNet& feat, const LossWeights& w, bool saturating, Tensor* dpred) {
    if (w.lambda_lpips < 0.0 || w.lambda_gan < 0.0 || !std::isfinite(w.lambda_lpips) ||
        !std::isfinite(w.lambda_gan))
        throw param_error("total_loss: weights must be finite and nonnegative");
    if (w.lambda_gan != 0.0 && d == nullptr)
        throw param_error("total_loss: GAN term enabled without a discriminator");

    Tensor d_l1, d_lp, d_gan;
    double loss = l1_loss(pred, target, dpred ? &d_l1 : nullptr);
    if (w.lambda_lpips != 0.0)
        loss += w.lambda_lpips * lpips_loss(pred, target, feat, dpred ? &d_lp : nullptr);
    if (w.lambda_gan != 0.0)
        loss += w.lambda_gan * gan_generator_loss(*d, pred, saturating, dpred ? &d_gan : nullptr);

    if (dpred) {
        *dpred = d_l1;
        if (w.lambda_lpips != 0.0)
            for (std::size_t i = 0; i < dpred->size(); ++i) dpred->v[i] += w.lambda_lpips * d_lp.v[i];
        if (w.lambda_gan != 0.0)
            for (std::size_t i = 0; i < dpred->size(); ++i) dpred->v[i] += w.lambda_gan * d_gan.v[i];
    }
    return loss;
}

}  // namespace retarget::restore
