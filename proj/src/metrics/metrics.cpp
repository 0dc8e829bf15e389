#include "retarget/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "retarget/core/errors.hpp"
#include "retarget/core/io.hpp"
#include "retarget/nn/tensor.hpp"
#include "retarget/restore/losses.hpp"

namespace retarget::metrics {

namespace {

constexpr double kPsnrCap = 99.0;
constexpr int kWin = 11;
constexpr double kWinSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> ssim_window() {
    std::vector<double> w(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        double d = i - (kWin - 1) / 2.0;
        w[i] = std::exp(-d * d / (2.0 * kWinSigma * kWinSigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// single-plane image as rows*cols doubles
struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
    double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane luma_plane(const Image& img) {
    Plane p{img.height(), img.width(), {}};
    p.v.resize(static_cast<std::size_t>(p.h) * p.w);
    if (img.channels() == 1) {
        p.v.assign(img.data().begin(), img.data().end());
    } else if (img.channels() == 3) {
        for (int y = 0; y < p.h; ++y)
            for (int x = 0; x < p.w; ++x)
                p.at(y, x) = 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) +
                             0.114 * img.at(2, y, x);
    } else {
        throw shape_error("ssim expects 1 or 3 channels");
    }
    return p;
}

// valid-mode separable correlation with the normalized window
Plane smooth(const Plane& p, const std::vector<double>& win) {
    const int k = static_cast<int>(win.size());
    Plane rows{p.h, p.w - k + 1, {}};
    rows.v.resize(static_cast<std::size_t>(rows.h) * rows.w);
    for (int y = 0; y < rows.h; ++y)
        for (int x = 0; x < rows.w; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += win[i] * p.at(y, x + i);
            rows.at(y, x) = s;
        }
    Plane out{p.h - k + 1, rows.w, {}};
    out.v.resize(static_cast<std::size_t>(out.h) * out.w);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += win[i] * rows.at(y + i, x);
            out.at(y, x) = s;
        }
    return out;
}

Plane hadamard(const Plane& a, const Plane& b) {
    Plane out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.v[i];
    return out;
}

// Symmetric PSD square root; negative eigenvalues beyond tolerance are a
// conditioning failure, tiny ones are clamped.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* label) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw numeric_error(std::string("eigendecomposition failed for ") + label);
    Eigen::VectorXd ev = es.eigenvalues();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 1.0);
    const double tol = 1e-8 * top;
    if (ev.minCoeff() < -tol) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%s is not PSD: min eigenvalue %.3e against largest %.3e", label,
                      ev.minCoeff(), ev.maxCoeff());
        throw numeric_error(buf);
    }
    Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double sqrt_trace(const Eigen::MatrixXd& m, const char* label) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw numeric_error(std::string("eigendecomposition failed for ") + label);
    Eigen::VectorXd ev = es.eigenvalues();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 1.0);
    if (ev.minCoeff() < -1e-8 * top) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%s is not PSD: min eigenvalue %.3e against largest %.3e", label,
                      ev.minCoeff(), ev.maxCoeff());
        throw numeric_error(buf);
    }
    double tr = 0.0;
    for (int i = 0; i < ev.size(); ++i) tr += std::sqrt(std::max(ev[i], 0.0));
    return tr;
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
    require_same_shape(a, b, "psnr");
    if (!(peak > 0.0) || !std::isfinite(peak)) throw param_error("psnr peak must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b, "ssim");
    if (a.height() < kWin || a.width() < kWin)
        throw shape_error("ssim needs at least 11x11 images");
    Plane pa = luma_plane(a);
    Plane pb = luma_plane(b);
    auto win = ssim_window();

    Plane mu_a = smooth(pa, win);
    Plane mu_b = smooth(pb, win);
    Plane e_aa = smooth(hadamard(pa, pa), win);
    Plane e_bb = smooth(hadamard(pb, pb), win);
    Plane e_ab = smooth(hadamard(pa, pb), win);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
        double ma = mu_a.v[i], mb = mu_b.v[i];
        double va = e_aa.v[i] - ma * ma;
        double vb = e_bb.v[i] - mb * mb;
        double cab = e_ab.v[i] - ma * mb;
        double num = (2.0 * ma * mb + kC1) * (2.0 * cab + kC2);
        double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
        total += num / den;
    }
    return total / static_cast<double>(mu_a.v.size());
}

FeatureStats compute_stats(const std::vector<std::vector<double>>& features) {
    if (features.size() < 2) throw data_error("feature stats need at least 2 samples");
    const auto dim = features.front().size();
    if (dim == 0) throw data_error("feature stats need nonempty vectors");
    for (const auto& f : features)
        if (f.size() != dim) throw data_error("feature dimensions differ");

    const int n = static_cast<int>(features.size());
    FeatureStats st;
    st.count = n;
    st.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& f : features)
        st.mean += Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(dim));
    st.mean /= n;

    st.cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (const auto& f : features) {
        Eigen::VectorXd d =
            Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(dim)) - st.mean;
        st.cov += d * d.transpose();
    }
    st.cov /= (n - 1);
    return st;
}

double fid(const FeatureStats& a, const FeatureStats& b) {
    if (a.mean.size() == 0 || b.mean.size() == 0) throw param_error("fid on empty stats");
    if (a.mean.size() != b.mean.size()) throw param_error("fid stats dimensions differ");
    if (!a.mean.allFinite() || !b.mean.allFinite() || !a.cov.allFinite() || !b.cov.allFinite())
        throw numeric_error("fid stats contain non-finite values");

    double mean_term = (a.mean - b.mean).squaredNorm();
    Eigen::MatrixXd root_a = psd_sqrt(a.cov, "first covariance");
    double cross = sqrt_trace(root_a * b.cov * root_a, "cross covariance");
    return mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross;
}

MetricsReport evaluate_model(const RestoreFn& restore, const std::vector<EvalItem>& items,
                             nn::FeatureNet& feat, json metadata) {
    if (items.size() < 2) throw data_error("evaluation needs at least 2 items");
    MetricsReport report;
    report.metadata = std::move(metadata);
    report.metadata["feature_seed"] = feat.seed;
    report.metadata["feature_space"] = "repo-internal extractor; scores comparable across runs "
                                       "of this code base only";

    std::vector<std::vector<double>> out_desc, gt_desc;
    for (const auto& item : items) {
        require_domain(item.lq, Domain::pixel01, "evaluate lq");
        require_domain(item.gt, Domain::pixel01, "evaluate gt");
        Image restored = restore(item.lq);
        require_same_shape(restored, item.gt, "evaluate");

        MetricRow row;
        row.id = item.id;
        row.psnr = psnr(restored, item.gt);
        row.ssim = ssim(restored, item.gt);
        row.lpips = restore::lpips_loss(nn::batch_from_images({restored}),
                                        nn::batch_from_images({item.gt}), feat);
        if (!std::isfinite(row.psnr) || !std::isfinite(row.ssim) || !std::isfinite(row.lpips))
            throw numeric_error("non-finite metric for image " + item.id);
        report.rows.push_back(row);

        out_desc.push_back(feat.descriptor(restored));
        gt_desc.push_back(feat.descriptor(item.gt));

        report.mean_psnr += row.psnr;
        report.mean_ssim += row.ssim;
        report.mean_lpips += row.lpips;
    }
    const double n = static_cast<double>(items.size());
    report.mean_psnr /= n;
    report.mean_ssim /= n;
    report.mean_lpips /= n;
    report.fid = fid(compute_stats(out_desc), compute_stats(gt_desc));
    return report;
}

void write_metrics_csv(const std::string& path, const MetricsReport& report) {
    std::string text = "id,psnr,ssim,lpips\n";
    char buf[128];
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof(buf), ",%.10g,%.10g,%.10g\n", row.psnr, row.ssim, row.lpips);
        text += row.id;
        text += buf;
    }
    write_file_bytes(path, text.data(), text.size());
}

std::string metrics_summary(const MetricsReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "images: %zu\npsnr_mean: %.10g\nssim_mean: %.10g\nlpips_mean: %.10g\nfid: %.10g\n",
                  report.rows.size(), report.mean_psnr, report.mean_ssim, report.mean_lpips,
                  report.fid);
    return buf;
}

}  // namespace retarget::metrics
