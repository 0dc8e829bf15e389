#include "retarget/degrade/dataset.hpp"

#include <cstdio>
#include <filesystem>

#include "retarget/core/io.hpp"
#include "retarget/core/resize.hpp"

namespace retarget::degrade {

namespace fs = std::filesystem;

Image apply_degradation(const Image& img, const DegradationConfig& cfg, RngStream& rng) {
    if (cfg.kind == DegradationConfig::Kind::classic) return classic_degrade(img, cfg.classic, rng);
    return realistic_degrade(img, cfg.realistic, rng);
}

json degradation_config_json(const DegradationConfig& cfg) {
    json j;
    if (cfg.kind == DegradationConfig::Kind::classic) {
        j["kind"] = "classic";
        j["sigma"] = cfg.classic.sigma;
        j["r"] = cfg.classic.r;
        j["delta"] = cfg.classic.delta;
        j["q"] = cfg.classic.q;
    } else {
        j["kind"] = "realistic";
        j["r"] = cfg.realistic.r;
        j["shot"] = cfg.realistic.noise.shot;
        j["read"] = cfg.realistic.noise.read;
        j["wb_gains"] = cfg.realistic.isp.wb_gains;
        j["ccm"] = cfg.realistic.isp.ccm;
        j["gamma"] = cfg.realistic.isp.gamma;
    }
    return j;
}

std::string image_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%05d.png", index);
    return buf;
}

namespace {

Image preprocess(Image img, int target_size) {
    if (target_size <= 0) return img;
    int side = std::min(img.height(), img.width());
    if (side != img.height() || side != img.width()) {
        int y0 = (img.height() - side) / 2;
        int x0 = (img.width() - side) / 2;
        Image crop(img.channels(), side, side, img.domain());
        for (int c = 0; c < img.channels(); ++c)
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x) crop.at(c, y, x) = img.at(c, y0 + y, x0 + x);
        img = crop;
    }
    if (img.height() != target_size) img = area_resize(img, target_size, target_size);
    return img;
}

}  // namespace

json build_dataset(const std::string& src_dir, const std::string& dst_root,
                   const DegradationConfig& cfg, const DatasetSplit& split, uint64_t seed,
                   int target_size) {
    if (split.fit_count < 0 || split.eval_count < 0 || split.fit_count + split.eval_count == 0)
        throw param_error("build_dataset: split counts must be nonnegative and not both zero");

    auto files = list_files(src_dir, {".png"});
    int needed = split.fit_count + split.eval_count;
    if (static_cast<int>(files.size()) < needed)
        throw data_error("build_dataset: need " + std::to_string(needed) + " source images, found " +
                         std::to_string(files.size()));

    fs::create_directories(fs::path(dst_root) / "lq" / "fit");
    fs::create_directories(fs::path(dst_root) / "lq" / "eval");
    fs::create_directories(fs::path(dst_root) / "gt" / "eval");

    RngStream root(seed, "dataset");
    json manifest;
    manifest["seed"] = seed;
    manifest["source"] = src_dir;
    manifest["params"] = degradation_config_json(cfg);
    manifest["target_size"] = target_size;
    manifest["splits"] = {{"fit", split.fit_count}, {"eval", split.eval_count}};
    manifest["files"] = json::array();

    int first_h = -1, first_w = -1;
    for (int i = 0; i < needed; ++i) {
        bool is_fit = i < split.fit_count;
        std::string split_name = is_fit ? "fit" : "eval";
        int local = is_fit ? i : i - split.fit_count;
        std::string name = image_name(local);

        Image gt = preprocess(read_png(files[i].string()), target_size);
        if (first_h < 0) {
            first_h = gt.height();
            first_w = gt.width();
        } else if (gt.height() != first_h || gt.width() != first_w) {
            throw data_error("build_dataset: source images have mixed sizes; set target_size");
        }

        RngStream rng = root.child(split_name + "/" + name);
        Image lq = apply_degradation(gt, cfg, rng);

        std::string lq_path = (fs::path(dst_root) / "lq" / split_name / name).string();
        write_png(lq_path, lq);

        json entry;
        entry["split"] = split_name;
        entry["name"] = name;
        entry["source"] = files[i].filename().string();
        entry["lq_sha"] = hex64(hash_file(lq_path));
        if (!is_fit) {
            std::string gt_path = (fs::path(dst_root) / "gt" / "eval" / name).string();
            write_png(gt_path, gt);
            entry["gt_sha"] = hex64(hash_file(gt_path));
        }
        manifest["files"].push_back(entry);
    }

    write_json_file((fs::path(dst_root) / "manifest.json").string(), manifest);
    return manifest;
}

}  // namespace retarget::degrade
