#include "retarget/degrade/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "retarget/core/io.hpp"
#include "retarget/degrade/dataset.hpp"

namespace retarget::degrade {

namespace {

struct Rgb {
    double r, g, b;
};

// 1px linear edge from a signed distance measured in pixels.
double coverage(double d_px) { return std::clamp(0.5 - d_px, 0.0, 1.0); }

double ellipse_dist_px(double x, double y, double cx, double cy, double rx, double ry, int size) {
    double u = (x - cx) / rx;
    double v = (y - cy) / ry;
    double d = std::sqrt(u * u + v * v) - 1.0;
    return d * std::min(rx, ry) * size;
}

void blend(Rgb* dst, const Rgb& src, double alpha) {
    dst->r += (src.r - dst->r) * alpha;
    dst->g += (src.g - dst->g) * alpha;
    dst->b += (src.b - dst->b) * alpha;
}

}  // namespace

Image toy_face(RngStream& rng, int size) {
    if (size < 8) throw param_error("toy_face: size must be >= 8");

    Rgb bg0{rng.uniform_in(0.1, 0.9), rng.uniform_in(0.1, 0.9), rng.uniform_in(0.1, 0.9)};
    Rgb bg1{rng.uniform_in(0.1, 0.9), rng.uniform_in(0.1, 0.9), rng.uniform_in(0.1, 0.9)};
    double bg_tilt = rng.uniform_in(-0.3, 0.3);

    double cx = rng.uniform_in(0.46, 0.54);
    double cy = rng.uniform_in(0.48, 0.56);
    double rx = rng.uniform_in(0.28, 0.38);
    double ry = rng.uniform_in(0.34, 0.44);
    Rgb skin;
    skin.r = rng.uniform_in(0.55, 0.95);
    skin.g = skin.r * rng.uniform_in(0.72, 0.9);
    skin.b = skin.g * rng.uniform_in(0.65, 0.88);

    double hair_v = rng.uniform_in(0.05, 0.4);
    Rgb hair{hair_v * rng.uniform_in(0.6, 1.4), hair_v * rng.uniform_in(0.5, 1.1),
             hair_v * rng.uniform_in(0.4, 1.0)};
    double hairline = cy - ry * rng.uniform_in(0.3, 0.55);
    double hair_pad = rng.uniform_in(1.05, 1.18);

    double eye_y = cy - ry * rng.uniform_in(0.08, 0.22);
    double eye_dx = rx * rng.uniform_in(0.38, 0.55);
    double eye_r = std::min(rx, ry) * rng.uniform_in(0.10, 0.17);
    Rgb eye{rng.uniform_in(0.02, 0.25), rng.uniform_in(0.02, 0.25), rng.uniform_in(0.05, 0.4)};

    double mouth_y = cy + ry * rng.uniform_in(0.42, 0.62);
    double mouth_rx = rx * rng.uniform_in(0.28, 0.5);
    double mouth_ry = ry * rng.uniform_in(0.06, 0.13);
    Rgb mouth{rng.uniform_in(0.35, 0.7), rng.uniform_in(0.08, 0.25), rng.uniform_in(0.08, 0.3)};

    Image img(3, size, size, Domain::pixel01);
    for (int py = 0; py < size; ++py)
        for (int px = 0; px < size; ++px) {
            double x = (px + 0.5) / size;
            double y = (py + 0.5) / size;

            double t = std::clamp(y + bg_tilt * (x - 0.5), 0.0, 1.0);
            Rgb c{bg0.r + (bg1.r - bg0.r) * t, bg0.g + (bg1.g - bg0.g) * t,
                  bg0.b + (bg1.b - bg0.b) * t};

            double head_a = coverage(ellipse_dist_px(x, y, cx, cy, rx, ry, size));
            blend(&c, hair, coverage(ellipse_dist_px(x, y, cx, cy - 0.04, rx * hair_pad, ry * hair_pad, size)));
            blend(&c, skin, head_a);

            double fringe = coverage((y - hairline) * size) * head_a;
            blend(&c, hair, fringe);

            blend(&c, eye, coverage(ellipse_dist_px(x, y, cx - eye_dx, eye_y, eye_r, eye_r, size)));
            blend(&c, eye, coverage(ellipse_dist_px(x, y, cx + eye_dx, eye_y, eye_r, eye_r, size)));
            blend(&c, mouth, coverage(ellipse_dist_px(x, y, cx, mouth_y, mouth_rx, mouth_ry, size)));

            img.at(0, py, px) = std::clamp(c.r, 0.0, 1.0);
            img.at(1, py, px) = std::clamp(c.g, 0.0, 1.0);
            img.at(2, py, px) = std::clamp(c.b, 0.0, 1.0);
        }
    return img;
}

json build_toy_corpus(const std::string& dst_dir, int count, uint64_t seed, int size) {
    if (count < 1) throw param_error("build_toy_corpus: count must be >= 1");
    std::filesystem::create_directories(dst_dir);

    RngStream root(seed, "corpus");
    uint64_t agg = 1469598103934665603ull;
    for (int i = 0; i < count; ++i) {
        RngStream rng = root.child("face/" + std::to_string(i));
        Image face = toy_face(rng, size);
        std::string path = (std::filesystem::path(dst_dir) / image_name(i)).string();
        write_png(path, face);
        uint64_t h = hash_file(path);
        agg = splitmix64(agg ^ h);
    }

    json manifest;
    manifest["seed"] = seed;
    manifest["count"] = count;
    manifest["size"] = size;
    manifest["aggregate_sha"] = hex64(agg);
    write_json_file((std::filesystem::path(dst_dir) / "corpus.json").string(), manifest);
    return manifest;
}

}  // namespace retarget::degrade
