#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "retarget/core/checkpoint.hpp"
#include "retarget/core/image.hpp"
#include "retarget/nn/models.hpp"

namespace retarget::metrics {

// 10*log10(peak^2 / MSE), capped at 99 dB so identical images stay finite.
double psnr(const Image& a, const Image& b, double peak = 1.0);

// Windowed structural similarity: 11-tap Gaussian window (sigma 1.5),
// k1 = 0.01, k2 = 0.03, peak 1, valid windows only. Three-channel images are
// compared on ITU-R 601 luma; single-channel directly.
double ssim(const Image& a, const Image& b);

struct FeatureStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // n-1 normalization
    int count = 0;
};

FeatureStats compute_stats(const std::vector<std::vector<double>>& features);

// Frechet distance between two Gaussians fitted to feature sets. The matrix
// square roots go through symmetric eigendecompositions; eigenvalues below
// -tol relative to the largest raise a numeric error naming the offender.
double fid(const FeatureStats& a, const FeatureStats& b);

struct MetricRow {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
    double lpips = 0.0;
};

struct MetricsReport {
    std::vector<MetricRow> rows;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double mean_lpips = 0.0;
    double fid = 0.0;
    json metadata;
};

struct EvalItem {
    std::string id;
    Image lq;
    Image gt;
};

using RestoreFn = std::function<Image(const Image&)>;

// Runs the restorer over every item, scores each output against its ground
// truth, and fits the distribution metric on the shared descriptor space.
// Feature distances here come from this repo's fixed-seed extractor, so they
// compare runs of this code base, not externally published numbers.
MetricsReport evaluate_model(const RestoreFn& restore, const std::vector<EvalItem>& items,
                             nn::FeatureNet& feat, json metadata = json::object());

// Columns: id,psnr,ssim,lpips. Same report, same bytes.
void write_metrics_csv(const std::string& path, const MetricsReport& report);
std::string metrics_summary(const MetricsReport& report);

}  // namespace retarget::metrics
