#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "retarget/core/errors.hpp"
#include "retarget/core/io.hpp"
#include "retarget/core/rng.hpp"
#include "retarget/degrade/corpus.hpp"
#include "retarget/metrics/metrics.hpp"

using namespace retarget;
using namespace retarget::metrics;

namespace {

Image random_image(int c, int h, int w, RngStream& rng) {
    Image img = Image::zeros(c, h, w, Domain::pixel01);
    for (auto& v : img.data()) v = rng.uniform();
    return img;
}

// Direct windowed implementation: explicit 2-D window, one pass per window
// position, no separability tricks. Kept deliberately different from the
// production code path.
double ssim_direct(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
    const int k = 11;
    const double sigma = 1.5;
    std::vector<double> win(k * k);
    double wsum = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double dy = i - 5.0, dx = j - 5.0;
            win[i * k + j] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
            wsum += win[i * k + j];
        }
    for (double& v : win) v /= wsum;

    const double c1 = 1e-4, c2 = 9e-4;
    double total = 0.0;
    int count = 0;
    for (int y = 0; y + k <= h; ++y)
        for (int x = 0; x + k <= w; ++x) {
            double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    double wv = win[i * k + j];
                    double va = a[(y + i) * w + (x + j)];
                    double vb = b[(y + i) * w + (x + j)];
                    ma += wv * va;
                    mb += wv * vb;
                    aa += wv * va * va;
                    bb += wv * vb * vb;
                    ab += wv * va * vb;
                }
            double sa = aa - ma * ma, sb = bb - mb * mb, sab = ab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * sab + c2)) /
                     ((ma * ma + mb * mb + c1) * (sa + sb + c2));
            ++count;
        }
    return total / count;
}

std::vector<double> luma_direct(const Image& img) {
    std::vector<double> out(static_cast<std::size_t>(img.height()) * img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out[y * img.width() + x] = img.channels() == 1
                                           ? img.at(0, y, x)
                                           : 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) +
                                                 0.114 * img.at(2, y, x);
    return out;
}

}  // namespace

TEST_CASE("psnr hits its pinned values") {
    Image zeros = Image::zeros(3, 8, 8, Domain::pixel01);
    Image ones = Image::constant(3, 8, 8, Domain::pixel01, 1.0);
    CHECK(psnr(zeros, zeros) == 99.0);
    CHECK(psnr(zeros, ones) == doctest::Approx(0.0).epsilon(1e-12));

    Image offset = Image::constant(3, 8, 8, Domain::pixel01, 0.1);
    CHECK(psnr(zeros, offset) == doctest::Approx(20.0).epsilon(1e-12));

    // widening the error strictly lowers the score
    Image offset2 = Image::constant(3, 8, 8, Domain::pixel01, 0.2);
    CHECK(psnr(zeros, offset2) < psnr(zeros, offset));

    // peak rescales the cap-free region
    CHECK(psnr(zeros, offset, 0.5) ==
          doctest::Approx(psnr(zeros, offset) - 20.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(psnr(zeros, offset, 0.0), param_error);
}

TEST_CASE("ssim is exactly one at identity and penalizes inversion") {
    RngStream rng(71, "ssim");
    Image a = random_image(1, 16, 16, rng);
    CHECK(ssim(a, a) == 1.0);

    Image checker = Image::zeros(1, 16, 16, Domain::pixel01);
    Image inverse = Image::zeros(1, 16, 16, Domain::pixel01);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            double v = (x + y) % 2 ? 1.0 : 0.0;
            checker.at(0, y, x) = v;
            inverse.at(0, y, x) = 1.0 - v;
        }
    double s = ssim(checker, inverse);
    CHECK(s < 0.0);  // anti-correlated structure
    CHECK(s < 1.0);

    Image tiny = Image::zeros(1, 8, 8, Domain::pixel01);
    CHECK_THROWS_AS(ssim(tiny, tiny), shape_error);
}

TEST_CASE("ssim matches a direct per-window oracle") {
    RngStream rng(72, "oracle");
    for (int trial = 0; trial < 2; ++trial) {
        Image a = random_image(1, 64, 64, rng);
        Image b = random_image(1, 64, 64, rng);
        double direct = ssim_direct(luma_direct(a), luma_direct(b), 64, 64);
        CHECK(std::abs(ssim(a, b) - direct) < 1e-6);
    }
    Image a = random_image(3, 64, 64, rng);
    Image b = random_image(3, 64, 64, rng);
    double direct = ssim_direct(luma_direct(a), luma_direct(b), 64, 64);
    CHECK(std::abs(ssim(a, b) - direct) < 1e-6);
}

TEST_CASE("feature stats match a hand-built two-sample case") {
    auto st = compute_stats({{0.0, 0.0}, {2.0, 2.0}});
    CHECK(st.count == 2);
    CHECK(st.mean(0) == 1.0);
    CHECK(st.mean(1) == 1.0);
    CHECK(st.cov(0, 0) == 2.0);
    CHECK(st.cov(0, 1) == 2.0);
    CHECK(st.cov(1, 0) == 2.0);
    CHECK(st.cov(1, 1) == 2.0);
    CHECK_THROWS_AS(compute_stats({{1.0}}), data_error);
    CHECK_THROWS_AS(compute_stats({{1.0}, {1.0, 2.0}}), data_error);
}

TEST_CASE("distribution distance closed forms and properties") {
    FeatureStats a, b;
    a.mean = Eigen::VectorXd::Zero(1);
    a.cov = Eigen::MatrixXd::Identity(1, 1);
    b.mean = Eigen::VectorXd::Ones(1);
    b.cov = Eigen::MatrixXd::Identity(1, 1);
    CHECK(fid(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(fid(a, a)) < 1e-6);

    RngStream rng(73, "fid");
    std::vector<std::vector<double>> fa, fb;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> va(5), vb(5);
        for (int j = 0; j < 5; ++j) {
            va[j] = rng.normal();
            vb[j] = 0.5 * rng.normal() + 0.3 * j;
        }
        fa.push_back(va);
        fb.push_back(vb);
    }
    auto sa = compute_stats(fa);
    auto sb = compute_stats(fb);
    double ab = fid(sa, sb);
    double ba = fid(sb, sa);
    CHECK(std::abs(ab - ba) <= 1e-8);
    CHECK(ab > -1e-8);
    CHECK(std::abs(fid(sa, sa)) < 1e-8);

    FeatureStats bad;
    bad.mean = Eigen::VectorXd::Zero(2);
    bad.cov = Eigen::MatrixXd::Identity(2, 2);
    bad.cov(1, 1) = -1.0;
    CHECK_THROWS_AS(fid(bad, sa), param_error);  // dim mismatch reported first
    FeatureStats good2;
    good2.mean = Eigen::VectorXd::Zero(2);
    good2.cov = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(fid(bad, good2), numeric_error);
}

TEST_CASE("identity restoration on clean data scores perfectly") {
    RngStream rng(74, "eval");
    std::vector<EvalItem> items;
    for (int i = 0; i < 4; ++i) {
        Image face = degrade::toy_face(rng, 16);
        items.push_back({"img_" + std::to_string(i), face, face});
    }
    nn::FeatureNet feat(75);
    auto report = evaluate_model([](const Image& x) { return x; }, items, feat);
    REQUIRE(report.rows.size() == items.size());
    for (const auto& row : report.rows) {
        CHECK(row.psnr == 99.0);
        CHECK(row.ssim == 1.0);
        CHECK(row.lpips == 0.0);
    }
    CHECK(report.mean_psnr == 99.0);
    CHECK(std::abs(report.fid) < 1e-6);
    CHECK_THROWS_AS(
        evaluate_model([](const Image& x) { return x; }, {items[0]}, feat), data_error);
}

TEST_CASE("metric reports regenerate byte for byte") {
    RngStream rng(76, "csv");
    std::vector<EvalItem> items;
    for (int i = 0; i < 3; ++i) {
        Image gt = degrade::toy_face(rng, 16);
        Image lq = gt;
        for (auto& v : lq.data()) v = std::min(1.0, std::max(0.0, v + 0.05 * rng.normal()));
        items.push_back({"img_" + std::to_string(i), lq, gt});
    }
    nn::FeatureNet feat(77);
    auto report = evaluate_model([](const Image& x) { return x; }, items, feat);
    for (const auto& row : report.rows) {
        CHECK(std::isfinite(row.psnr));
        CHECK(row.psnr < 99.0);
        CHECK(row.lpips > 0.0);
    }

    auto dir = std::filesystem::temp_directory_path() / "rtg_metrics_csv";
    std::filesystem::create_directories(dir);
    auto p1 = (dir / "a.csv").string();
    auto p2 = (dir / "b.csv").string();
    write_metrics_csv(p1, report);
    auto report2 = evaluate_model([](const Image& x) { return x; }, items, feat);
    write_metrics_csv(p2, report2);
    CHECK(read_file_bytes(p1) == read_file_bytes(p2));

    auto bytes = read_file_bytes(p1);
    std::string text(bytes.begin(), bytes.end());
    CHECK(text.rfind("id,psnr,ssim,lpips\n", 0) == 0);
    CHECK(text.find("img_0,") != std::string::npos);

    auto summary = metrics_summary(report);
    CHECK(summary.find("psnr_mean:") != std::string::npos);
    CHECK(summary.find("fid:") != std::string::npos);
    std::filesystem::remove_all(dir);
}
