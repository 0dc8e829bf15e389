#include "retarget/nn/models.hpp"

#include <cmath>

namespace retarget::nn {

std::vector<Param*> NamedParams::flat() const {
    std::vector<Param*> out;
    out.reserve(items.size());
    for (const auto& [name, p] : items) out.push_back(p);
    return out;
}

void save_params(Checkpoint& ck, const NamedParams& np) {
    for (const auto& [name, p] : np.items) ck.put(name, p->w);
}

void load_params(const Checkpoint& ck, NamedParams& np) {
    for (auto& [name, p] : np.items) {
        const auto& vals = ck.get(name);
        if (vals.size() != p->size())
            throw data_error("load_params: size mismatch for " + name);
        p->w = vals;
    }
}

Tensor timestep_embedding(const std::vector<int>& ts, int dim) {
    if (dim % 2) throw param_error("timestep_embedding: dim must be even");
    const int half = dim / 2;
    Tensor out(static_cast<int>(ts.size()), dim, 1, 1);
    for (std::size_t ni = 0; ni < ts.size(); ++ni)
        for (int i = 0; i < half; ++i) {
            double freq = std::exp(-std::log(10000.0) * i / half);
            double arg = ts[ni] * freq;
            out.at(static_cast<int>(ni), i, 0, 0) = std::cos(arg);
            out.at(static_cast<int>(ni), half + i, 0, 0) = std::sin(arg);
        }
    return out;
}

CondResBlock::CondResBlock(int ch, int emb_dim, int groups, RngStream rng)
    : gn1(ch, groups),
      gn2(ch, groups),
      conv1(ch, ch, 3, 1, 1, rng.child("conv1")),
      conv2(ch, ch, 3, 1, 1, rng.child("conv2"), 0.0),
      tproj(emb_dim, ch, rng.child("tproj")) {}

Tensor CondResBlock::forward(const Tensor& x, const Tensor& temb) {
    Tensor h = conv1.forward(act1.forward(gn1.forward(x)));
    h = add_channel_bias(h, tproj.forward(temb));
    h = conv2.forward(act2.forward(gn2.forward(h)));
    for (std::size_t i = 0; i < h.size(); ++i) h.v[i] += x.v[i];
    return h;
}

Tensor CondResBlock::backward(const Tensor& dy, Tensor& dtemb_accum) {
    Tensor dh = gn2.backward(act2.backward(conv2.backward(dy)));
    Tensor dtb = tproj.backward(reduce_channel_bias_grad(dh));
    for (std::size_t i = 0; i < dtemb_accum.size(); ++i) dtemb_accum.v[i] += dtb.v[i];
    Tensor dx = gn1.backward(act1.backward(conv1.backward(dh)));
    for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] += dy.v[i];
    return dx;
}

void CondResBlock::collect(const std::string& prefix, NamedParams& np) {
    np.add(prefix + ".gn1", gn1);
    np.add(prefix + ".conv1", conv1);
    np.add(prefix + ".tproj", tproj);
    np.add(prefix + ".gn2", gn2);
    np.add(prefix + ".conv2", conv2);
}

namespace {
constexpr int kGroups = 8;
}

DenoiserNet::DenoiserNet(int in_ch_, int base_ch_, int emb_dim_, uint64_t seed)
    : in_ch(in_ch_),
      base_ch(base_ch_),
      emb_dim(emb_dim_),
      temb1(emb_dim_, emb_dim_, RngStream(seed, "temb1")),
      conv_in(in_ch_, base_ch_, 3, 1, 1, RngStream(seed, "conv_in")),
      rb1(base_ch_, emb_dim_, kGroups, RngStream(seed, "rb1")),
      conv_d1(base_ch_, 2 * base_ch_, 3, 1, 1, RngStream(seed, "conv_d1")),
      rb2(2 * base_ch_, emb_dim_, kGroups, RngStream(seed, "rb2")),
      rb_mid(2 * base_ch_, emb_dim_, kGroups, RngStream(seed, "rb_mid")),
      conv_u1(4 * base_ch_, 2 * base_ch_, 3, 1, 1, RngStream(seed, "conv_u1")),
      rb4(2 * base_ch_, emb_dim_, kGroups, RngStream(seed, "rb4")),
      conv_u2(3 * base_ch_, base_ch_, 3, 1, 1, RngStream(seed, "conv_u2")),
      rb5(base_ch_, emb_dim_, kGroups, RngStream(seed, "rb5")),
      gn_out(base_ch_, kGroups),
      conv_out(base_ch_, in_ch_, 3, 1, 1, RngStream(seed, "conv_out"), 0.0) {
    if (base_ch_ % kGroups) throw param_error("DenoiserNet: base_ch must be a multiple of 8");
}

Tensor DenoiserNet::forward(const Tensor& x, const std::vector<int>& ts) {
    if (static_cast<int>(ts.size()) != x.n)
        throw shape_error("DenoiserNet: one timestep per sample required");
    if (x.h % 4 || x.w % 4) throw shape_error("DenoiserNet: input size must be divisible by 4");

    Tensor temb = tact.forward(temb1.forward(timestep_embedding(ts, emb_dim)));

    Tensor h = conv_in.forward(x);
    e1_ = rb1.forward(h, temb);
    h = pool1.forward(e1_);
    h = conv_d1.forward(h);
    e2_ = rb2.forward(h, temb);
    h = pool2.forward(e2_);
    h = rb_mid.forward(h, temb);
    h = up1.forward(h);
    h = conv_u1.forward(concat_channels(h, e2_));
    h = rb4.forward(h, temb);
    h = up2.forward(h);
    h = conv_u2.forward(concat_channels(h, e1_));
    h = rb5.forward(h, temb);
    return conv_out.forward(act_out.forward(gn_out.forward(h)));
}

Tensor DenoiserNet::backward(const Tensor& dy) {
    Tensor dtemb(dy.n, emb_dim, 1, 1);

    Tensor dh = gn_out.backward(act_out.backward(conv_out.backward(dy)));
    dh = rb5.backward(dh, dtemb);
    dh = conv_u2.backward(dh);
    Tensor tmp, de1, de2;
    split_channels(dh, 2 * base_ch, tmp, de1);
    dh = up2.backward(tmp);
    dh = rb4.backward(dh, dtemb);
    dh = conv_u1.backward(dh);
    split_channels(dh, 2 * base_ch, tmp, de2);
    dh = up1.backward(tmp);
    dh = rb_mid.backward(dh, dtemb);
    dh = pool2.backward(dh);
    for (std::size_t i = 0; i < dh.size(); ++i) dh.v[i] += de2.v[i];
    dh = rb2.backward(dh, dtemb);
    dh = conv_d1.backward(dh);
    dh = pool1.backward(dh);
    for (std::size_t i = 0; i < dh.size(); ++i) dh.v[i] += de1.v[i];
    dh = rb1.backward(dh, dtemb);
    Tensor dx = conv_in.backward(dh);

    temb1.backward(tact.backward(dtemb));
    return dx;
}

NamedParams DenoiserNet::named_params() {
    NamedParams np;
    np.add("temb1", temb1);
    np.add("conv_in", conv_in);
    rb1.collect("rb1", np);
    np.add("conv_d1", conv_d1);
    rb2.collect("rb2", np);
    rb_mid.collect("rb_mid", np);
    np.add("conv_u1", conv_u1);
    rb4.collect("rb4", np);
    np.add("conv_u2", conv_u2);
    rb5.collect("rb5", np);
    np.add("gn_out", gn_out);
    np.add("conv_out", conv_out);
    return np;
}

Image DenoiserNet::predict_noise_image(const Image& x_t, int t) {
    Tensor out = forward(tensor_from_image(x_t), {t});
    return image_from_tensor(out, 0, Domain::diffusion11);
}

RestorerNet::Block::Block(int w, RngStream rng)
    : conv1(w, w, 3, 1, 1, rng.child("conv1")), conv2(w, w, 3, 1, 1, rng.child("conv2"), 0.1) {}

Tensor RestorerNet::Block::forward(const Tensor& x) {
    Tensor h = conv2.forward(act.forward(conv1.forward(x)));
    for (std::size_t i = 0; i < h.size(); ++i) h.v[i] += x.v[i];
    return h;
}

Tensor RestorerNet::Block::backward(const Tensor& dy) {
    Tensor dx = conv1.backward(act.backward(conv2.backward(dy)));
    for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] += dy.v[i];
    return dx;
}

RestorerNet::RestorerNet(int channels_, int width_, int depth_, uint64_t seed)
    : channels(channels_),
      width(width_),
      depth(depth_),
      head(channels_, width_, 3, 1, 1, RngStream(seed, "head")),
      tail(width_, channels_, 3, 1, 1, RngStream(seed, "tail"), 0.1) {
    RngStream root(seed, "blocks");
    blocks.reserve(depth_);
    for (int i = 0; i < depth_; ++i)
        blocks.emplace_back(width_, root.child("b" + std::to_string(i)));
}

Tensor RestorerNet::forward(const Tensor& x) {
    Tensor h = head.forward(x);
    for (auto& b : blocks) h = b.forward(h);
    h = tail.forward(h);
    for (std::size_t i = 0; i < h.size(); ++i) h.v[i] += x.v[i];
    return h;
}

Tensor RestorerNet::backward(const Tensor& dy) {
    Tensor dh = tail.backward(dy);
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) dh = it->backward(dh);
    Tensor dx = head.backward(dh);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] += dy.v[i];
    return dx;
}

NamedParams RestorerNet::named_params() {
    NamedParams np;
    np.add("head", head);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        np.add("blocks." + std::to_string(i) + ".conv1", blocks[i].conv1);
        np.add("blocks." + std::to_string(i) + ".conv2", blocks[i].conv2);
    }
    np.add("tail", tail);
    return np;
}

Image RestorerNet::restore(const Image& y) {
    require_domain(y, Domain::pixel01, "RestorerNet::restore");
    Tensor out = forward(tensor_from_image(y));
    return clip01(image_from_tensor(out, 0, Domain::pixel01));
}

DiscriminatorNet::DiscriminatorNet(int in_ch_, int width_, uint64_t seed, double prob_eps)
    : in_ch(in_ch_),
      width(width_),
      c1(in_ch_, width_, 3, 2, 1, RngStream(seed, "c1")),
      c2(width_, 2 * width_, 3, 2, 1, RngStream(seed, "c2")),
      c3(2 * width_, 1, 3, 1, 1, RngStream(seed, "c3")),
      prob_eps_(prob_eps) {}

Tensor DiscriminatorNet::forward(const Tensor& x) {
    logits_ = c3.forward(a2.forward(c2.forward(a1.forward(c1.forward(x)))));
    Tensor out(x.n, 1, 1, 1);
    probs_ = Tensor(x.n, 1, 1, 1);
    clamped_.assign(x.n, false);
    const double span = static_cast<double>(logits_.h) * logits_.w;
    for (int ni = 0; ni < x.n; ++ni) {
        double s = 0;
        for (int yy = 0; yy < logits_.h; ++yy)
            for (int xx = 0; xx < logits_.w; ++xx) s += logits_.at(ni, 0, yy, xx);
        double p = 1.0 / (1.0 + std::exp(-s / span));
        if (p < prob_eps_) { p = prob_eps_; clamped_[ni] = true; }
        if (p > 1.0 - prob_eps_) { p = 1.0 - prob_eps_; clamped_[ni] = true; }
        probs_.at(ni, 0, 0, 0) = p;
        out.at(ni, 0, 0, 0) = p;
    }
    return out;
}

Tensor DiscriminatorNet::backward(const Tensor& dprob) {
    Tensor dlogits(logits_.n, 1, logits_.h, logits_.w);
    const double span = static_cast<double>(logits_.h) * logits_.w;
    for (int ni = 0; ni < dprob.n; ++ni) {
        double p = probs_.at(ni, 0, 0, 0);
        double g = clamped_[ni] ? 0.0 : dprob.at(ni, 0, 0, 0) * p * (1.0 - p) / span;
        for (int yy = 0; yy < logits_.h; ++yy)
            for (int xx = 0; xx < logits_.w; ++xx) dlogits.at(ni, 0, yy, xx) = g;
    }
    return c1.backward(a1.backward(c2.backward(a2.backward(c3.backward(dlogits)))));
}

NamedParams DiscriminatorNet::named_params() {
    NamedParams np;
    np.add("c1", c1);
    np.add("c2", c2);
    np.add("c3", c3);
    return np;
}

FeatureNet::FeatureNet(uint64_t seed_, int in_ch)
    : seed(seed_),
      c1(in_ch, 16, 3, 1, 1, RngStream(seed_, "c1")),
      c2(16, 32, 3, 1, 1, RngStream(seed_, "c2")),
      c3(32, 64, 3, 1, 1, RngStream(seed_, "c3")) {}

std::vector<Tensor> FeatureNet::forward(const Tensor& x) {
    std::vector<Tensor> levels;
    Tensor h = a1.forward(c1.forward(x));
    levels.push_back(h);
    h = a2.forward(c2.forward(p1.forward(h)));
    levels.push_back(h);
    h = a3.forward(c3.forward(p2.forward(h)));
    levels.push_back(h);
    return levels;
}

Tensor FeatureNet::backward(const std::vector<Tensor>& dlevels) {
    if (dlevels.size() != 3) throw param_error("FeatureNet::backward: need 3 level grads");
    Tensor dh = p2.backward(c3.backward(a3.backward(dlevels[2])));
    for (std::size_t i = 0; i < dh.size(); ++i) dh.v[i] += dlevels[1].v[i];
    dh = p1.backward(c2.backward(a2.backward(dh)));
    for (std::size_t i = 0; i < dh.size(); ++i) dh.v[i] += dlevels[0].v[i];
    return c1.backward(a1.backward(dh));
}

std::vector<double> FeatureNet::descriptor(const Image& img) {
    auto levels = forward(tensor_from_image(img));
    std::vector<double> out;
    out.reserve(descriptor_dim());
    for (int li : {1, 2}) {
        const Tensor& t = levels[li];
        for (int ci = 0; ci < t.c; ++ci) {
            double s = 0;
            for (int yy = 0; yy < t.h; ++yy)
                for (int xx = 0; xx < t.w; ++xx) s += t.at(0, ci, yy, xx);
            out.push_back(s / (static_cast<double>(t.h) * t.w));
        }
    }
    return out;
}

int FeatureNet::descriptor_dim() const { return 32 + 64; }

}  // namespace retarget::nn
