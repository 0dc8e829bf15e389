#include "retarget/pipeline/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "retarget/core/errors.hpp"
#include "retarget/core/io.hpp"
#include "retarget/core/rng.hpp"
#include "retarget/degrade/corpus.hpp"
#include "retarget/degrade/isp.hpp"
#include "retarget/diffusion/train.hpp"
#include "retarget/guidance/targets.hpp"
#include "retarget/restore/train.hpp"

namespace retarget::pipeline {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& base, const std::string& leaf) {
    return (fs::path(base) / leaf).string();
}

std::string default_path(const RunConfig& cfg, const std::string& leaf,
                         const std::string& given) {
    return given.empty() ? join(cfg.data_root, leaf) : given;
}

std::vector<Image> images_only(const std::vector<std::pair<std::string, Image>>& named) {
    std::vector<Image> out;
    out.reserve(named.size());
    for (const auto& [name, img] : named) out.push_back(img);
    return out;
}

// every name in a must pair with the same name in b
void require_matched(const std::vector<std::pair<std::string, Image>>& a,
                     const std::vector<std::pair<std::string, Image>>& b, const char* what) {
    if (a.size() != b.size())
        throw data_error(std::string(what) + ": file counts differ (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].first != b[i].first)
            throw data_error(std::string(what) + ": name mismatch at index " + std::to_string(i) +
                             " (" + a[i].first + " vs " + b[i].first + ")");
}

uint64_t combined_dir_hash(const std::string& dir) {
    uint64_t agg = 1469598103934665603ull;
    for (const auto& p : list_files(dir, {".png"})) agg = splitmix64(agg ^ hash_file(p.string()));
    return agg;
}

json checkpoint_ref(const std::string& path) {
    return json{{"path", path}, {"sha", hex64(hash_file(path))}};
}

double series_front(const std::vector<double>& v) { return v.empty() ? 0.0 : v.front(); }
double series_back(const std::vector<double>& v) { return v.empty() ? 0.0 : v.back(); }

// Writes target PNGs plus targets.json for named LQ images. The restorer is
// optional; the denoiser and schedule come from a loaded checkpoint.
json generate_target_set(const RunConfig& cfg,
                         const std::vector<std::pair<std::string, Image>>& lqs,
                         nn::RestorerNet* restorer, const diffusion::NetDenoiser& nd,
                         const diffusion::NoiseSchedule& sched, const std::string& out_dir,
                         const json& extra) {
    if (cfg.k_start > sched.T)
        throw param_error("k_start exceeds the checkpoint schedule length " +
                          std::to_string(sched.T));
    if (cfg.sampler == "dr2" && cfg.l_stop < 1)
        throw param_error("the dr2 sampler projects at l_stop and needs l_stop >= 1");

    const bool uses_filter = cfg.sampler != "difface";
    for (const auto& [name, img] : lqs) {
        if (uses_filter &&
            (img.height() % cfg.n_factor != 0 || img.width() % cfg.n_factor != 0))
            throw param_error(name + ": image sides must be divisible by n_factor " +
                              std::to_string(cfg.n_factor));
        if (restorer && img.channels() != restorer->channels)
            throw data_error(name + ": channel count does not fit the restorer");
    }

    fs::create_directories(out_dir);
    auto filter = cfg.filter();
    auto tg = cfg.targetgen();

    json files = json::array();
    for (const auto& [name, img] : lqs) {
        Image restored = restorer ? restorer->restore(img) : img;
        RngStream rng(cfg.seed, "targets/" + name);
        Image target;
        if (cfg.sampler == "ours") {
            target = guidance::generate_pseudo_target(restored, tg, nd, sched, rng);
        } else if (cfg.sampler == "difface") {
            target = guidance::difface_sample(restored, cfg.k_start, nd, sched, rng, cfg.steps);
        } else if (cfg.sampler == "ilvr") {
            target = guidance::ilvr_sample(restored, cfg.k_start, filter, nd, sched, rng,
                                           cfg.steps);
        } else {
            target = guidance::dr2_sample(restored, cfg.k_start, cfg.l_stop, filter, nd, sched,
                                          rng, cfg.steps);
        }
        auto out_path = join(out_dir, name);
        write_png(out_path, target);
        files.push_back({{"name", name},
                         {"lq_sha", hex64(hash_image(img))},
                         {"target_sha", hex64(hash_file(out_path))}});
    }

    json manifest{{"config", cfg.to_json()},
                  {"schedule_hash", hex64(sched.hash())},
                  {"count", lqs.size()},
                  {"files", files}};
    for (auto& [key, val] : extra.items()) manifest[key] = val;
    write_json_file(join(out_dir, "targets.json"), manifest);
    return manifest;
}

metrics::MetricsReport evaluate_net(nn::RestorerNet& net,
                                    const std::vector<metrics::EvalItem>& items,
                                    nn::FeatureNet& feat, json metadata) {
    return metrics::evaluate_model([&net](const Image& x) { return net.restore(x); }, items, feat,
                                   std::move(metadata));
}

std::vector<metrics::EvalItem> eval_items(
    const std::vector<std::pair<std::string, Image>>& lqs,
    const std::vector<std::pair<std::string, Image>>& gts) {
    require_matched(lqs, gts, "evaluation pairs");
    std::vector<metrics::EvalItem> items;
    for (std::size_t i = 0; i < lqs.size(); ++i) {
        if (!lqs[i].second.same_shape(gts[i].second))
            throw data_error(lqs[i].first + ": input and ground-truth shapes differ");
        items.push_back({lqs[i].first, lqs[i].second, gts[i].second});
    }
    return items;
}

}  // namespace

std::vector<std::pair<std::string, Image>> load_image_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw data_error("not a directory: " + dir);
    std::vector<std::pair<std::string, Image>> out;
    for (const auto& p : list_files(dir, {".png"}))
        out.emplace_back(p.filename().string(), read_png(p.string()));
    if (out.empty()) throw data_error("no PNG images under " + dir);
    return out;
}

void write_contact_sheet(const std::string& path, const std::vector<std::vector<Image>>& rows,
                         int pad) {
    if (rows.empty() || rows.front().empty()) throw param_error("contact sheet needs images");
    int ch = rows.front().front().channels();
    int cell_h = 0, cell_w = 0;
    std::size_t cols = 0;
    for (const auto& row : rows) {
        cols = std::max(cols, row.size());
        for (const auto& img : row) {
            if (img.channels() != ch) throw shape_error("contact sheet channels differ");
            cell_h = std::max(cell_h, img.height());
            cell_w = std::max(cell_w, img.width());
        }
    }
    const int H = static_cast<int>(rows.size()) * (cell_h + pad) + pad;
    const int W = static_cast<int>(cols) * (cell_w + pad) + pad;
    Image sheet = Image::constant(ch, H, W, Domain::pixel01, 1.0);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const Image& img = rows[r][c];
            int y0 = pad + static_cast<int>(r) * (cell_h + pad);
            int x0 = pad + static_cast<int>(c) * (cell_w + pad);
            for (int k = 0; k < ch; ++k)
                for (int y = 0; y < img.height(); ++y)
                    for (int x = 0; x < img.width(); ++x)
                        sheet.at(k, y0 + y, x0 + x) = img.at(k, y, x);
        }
    write_png(path, sheet);
}

std::string cmd_make_corpus(const RunConfig& cfg, const CorpusArgs& args) {
    cfg.validate();
    auto out = default_path(cfg, "corpus", args.out);
    degrade::build_toy_corpus(out, args.count, cfg.seed, args.size);
    return join(out, "corpus.json");
}

DegradeSummary cmd_degrade(const RunConfig& cfg, const DegradeArgs& args) {
    cfg.validate();
    if (args.src.empty()) throw param_error("degrade needs a source directory");
    auto out = default_path(cfg, join("datasets", args.kind), args.out);

    degrade::DegradationConfig dcfg;
    if (args.kind == "classic") {
        dcfg.kind = degrade::DegradationConfig::Kind::classic;
        dcfg.classic = args.classic;
    } else if (args.kind == "realistic") {
        dcfg.kind = degrade::DegradationConfig::Kind::realistic;
        dcfg.realistic.r = args.scale;
        dcfg.realistic.noise = degrade::NoiseModel::preset(args.iso);
    } else {
        throw param_error("degradation kind must be 'classic' or 'realistic'");
    }

    DegradeSummary summary;
    summary.plan = {{"src", args.src},
                    {"out", out},
                    {"degradation", degrade::degradation_config_json(dcfg)},
                    {"fit_count", args.fit_count},
                    {"eval_count", args.eval_count},
                    {"target_size", args.target_size},
                    {"seed", cfg.seed}};
    if (args.dry_run) return summary;

    degrade::build_dataset(args.src, out, dcfg, {args.fit_count, args.eval_count}, cfg.seed,
                           args.target_size);
    summary.manifest = join(out, "manifest.json");
    return summary;
}

TrainSummary cmd_train_diffusion(const RunConfig& cfg, const TrainDiffusionArgs& args) {
    cfg.validate();
    if (args.iters < 0 || args.batch < 1) throw param_error("bad training size parameters");
    auto corpus_dir = default_path(cfg, "corpus", args.corpus);
    auto out = default_path(cfg, join("ckpt", "diffusion.ckpt"), args.out);

    auto corpus = images_only(load_image_dir(corpus_dir));

    std::unique_ptr<nn::DenoiserNet> net;
    diffusion::NoiseSchedule sched;
    int done = 0;
    if (!args.resume.empty()) {
        auto loaded = diffusion::load_denoiser(args.resume);
        net = std::move(loaded.net);
        sched = loaded.sched;
        done = loaded.manifest.value("iteration", 0);
    } else {
        net = std::make_unique<nn::DenoiserNet>(corpus.front().channels(), args.base_ch,
                                                args.emb_dim,
                                                stage_seed(cfg.seed, "diffusion/init"));
        sched = cfg.schedule();
    }
    const int remaining = args.iters - done;
    if (remaining < 0)
        throw param_error("checkpoint already trained past " + std::to_string(args.iters) +
                          " iterations");

    auto sample_dir = out + ".samples";
    auto emit_grid = [&](int global_iter) {
        fs::create_directories(sample_dir);
        diffusion::NetDenoiser nd(*net);
        Image mid = Image::constant(corpus.front().channels(), corpus.front().height(),
                                    corpus.front().width(), Domain::pixel01, 0.5);
        std::vector<std::vector<Image>> grid(2);
        for (int j = 0; j < 4; ++j) {
            RngStream rng(cfg.seed,
                          "diffusion/grid/" + std::to_string(global_iter) + "/" +
                              std::to_string(j));
            grid[j / 2].push_back(
                guidance::difface_sample(mid, sched.T, nd, sched, rng, cfg.steps));
        }
        char name[32];
        std::snprintf(name, sizeof(name), "grid_%06d.png", global_iter);
        write_contact_sheet(join(sample_dir, name), grid);
    };

    nn::TrainConfig tc;
    tc.lr = args.lr;
    tc.iters = remaining;
    tc.batch = args.batch;
    tc.seed = stage_seed(cfg.seed, "diffusion/train/" + std::to_string(done));
    auto result = diffusion::train_denoiser(
        *net, corpus, sched, tc, [&](int iter, double) {
            if (args.sample_every > 0 && (done + iter + 1) % args.sample_every == 0)
                emit_grid(done + iter + 1);
        });

    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
    diffusion::save_denoiser(out, *net, sched,
                             {{"iteration", done + remaining}, {"config", cfg.to_json()}});
    auto csv = out + ".loss.csv";
    restore::write_loss_csv(csv, {{"loss", &result.loss_history}});

    return {out,  csv, done + remaining, series_front(result.loss_history),
            series_back(result.loss_history), result.diverged, result.stopped_at};
}

TrainSummary cmd_pretrain_restorer(const RunConfig& cfg, const PretrainArgs& args) {
    cfg.validate();
    if (args.iters < 0 || args.batch < 1 || args.width < 1 || args.depth < 1)
        throw param_error("bad training size parameters");
    auto corpus_dir = default_path(cfg, "corpus", args.corpus);
    auto out = default_path(cfg, join("ckpt", "restorer_pre.ckpt"), args.out);

    auto corpus = images_only(load_image_dir(corpus_dir));
    nn::RestorerNet net(corpus.front().channels(), args.width, args.depth,
                        stage_seed(cfg.seed, "restorer/init"));
    nn::FeatureNet feat(stage_seed(cfg.seed, "features"), corpus.front().channels());

    restore::LossWeights w{cfg.lambda_lpips, args.lambda_gan};
    nn::TrainConfig tc;
    tc.lr = args.lr;
    tc.iters = args.iters;
    tc.batch = args.batch;
    tc.seed = stage_seed(cfg.seed, "pretrain");
    auto result = restore::pretrain_restorer(net, corpus, args.range, w, tc, feat);

    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
    int trained = result.diverged ? result.stopped_at : args.iters;
    restore::save_restorer(out, net,
                           {{"stage", "pretrain"},
                            {"iteration", trained},
                            {"diverged", result.diverged},
                            {"config", cfg.to_json()}});
    auto csv = out + ".loss.csv";
    std::vector<std::pair<std::string, const std::vector<double>*>> series{
        {"loss", &result.loss_history}};
    if (!result.d_loss_history.empty()) series.push_back({"d_loss", &result.d_loss_history});
    restore::write_loss_csv(csv, series);

    return {out,  csv, trained, series_front(result.loss_history),
            series_back(result.loss_history), result.diverged, result.stopped_at};
}

std::string cmd_gen_targets(const RunConfig& cfg, const GenTargetsArgs& args) {
    cfg.validate();
    if (args.lq.empty()) throw param_error("gen-targets needs an input directory");
    if (args.diffusion.empty()) throw param_error("gen-targets needs a diffusion checkpoint");
    if (!cfg.skip_restorer && args.restorer.empty())
        throw param_error("gen-targets needs a restorer checkpoint unless skip_restorer is set");
    auto out = default_path(cfg, "targets", args.out);

    auto lqs = load_image_dir(args.lq);
    auto dn = diffusion::load_denoiser(args.diffusion);
    diffusion::NetDenoiser nd(*dn.net);

    restore::LoadedRestorer rest;
    if (!cfg.skip_restorer) rest = restore::load_restorer(args.restorer);

    json extra{{"lq_dir", args.lq}, {"diffusion_ckpt", checkpoint_ref(args.diffusion)}};
    extra["restorer_ckpt"] = cfg.skip_restorer ? json(nullptr) : checkpoint_ref(args.restorer);
    generate_target_set(cfg, lqs, rest.net.get(), nd, dn.sched, out, extra);
    return join(out, "targets.json");
}

TrainSummary cmd_finetune(const RunConfig& cfg, const FinetuneArgs& args) {
    cfg.validate();
    if (args.iters < 0 || args.batch < 1) throw param_error("bad training size parameters");
    if (args.lq.empty() || args.targets.empty() || args.restorer.empty())
        throw param_error("finetune needs --lq, --targets, and --restorer");
    if (cfg.lambda_gan > 0.0 && args.real.empty())
        throw param_error("finetune needs --real while the adversarial weight is nonzero");
    auto out = default_path(cfg, join("ckpt", "restorer_ft.ckpt"), args.out);

    auto lqs = load_image_dir(args.lq);
    auto tgts = load_image_dir(args.targets);
    require_matched(lqs, tgts, "adaptation pairs");
    std::vector<Image> real;
    if (cfg.lambda_gan > 0.0) real = images_only(load_image_dir(args.real));

    auto rest = restore::load_restorer(args.restorer);
    nn::FeatureNet feat(stage_seed(cfg.seed, "features"), rest.net->channels);

    nn::TrainConfig tc;
    tc.lr = args.lr;
    tc.iters = args.iters;
    tc.batch = args.batch;
    tc.seed = stage_seed(cfg.seed, "finetune");
    auto result = restore::finetune_restorer(*rest.net, images_only(lqs), images_only(tgts), real,
                                             cfg.weights(), tc, feat);

    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
    int trained = result.diverged ? result.stopped_at : args.iters;
    restore::save_restorer(out, *rest.net,
                           {{"stage", "finetune"},
                            {"iteration", trained},
                            {"diverged", result.diverged},
                            {"base_ckpt", checkpoint_ref(args.restorer)},
                            {"config", cfg.to_json()}});
    auto csv = out + ".loss.csv";
    std::vector<std::pair<std::string, const std::vector<double>*>> series{
        {"loss", &result.loss_history}};
    if (!result.d_loss_history.empty()) series.push_back({"d_loss", &result.d_loss_history});
    restore::write_loss_csv(csv, series);

    return {out,  csv, trained, series_front(result.loss_history),
            series_back(result.loss_history), result.diverged, result.stopped_at};
}

EvaluateSummary cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& args) {
    cfg.validate();
    if (args.ckpt.empty() || args.lq.empty() || args.gt.empty())
        throw param_error("evaluate needs --ckpt, --lq, and --gt");
    auto out = default_path(cfg, "eval", args.out);

    auto lqs = load_image_dir(args.lq);
    auto gts = load_image_dir(args.gt);
    auto items = eval_items(lqs, gts);

    auto rest = restore::load_restorer(args.ckpt);
    nn::FeatureNet feat(stage_seed(cfg.seed, "features"), rest.net->channels);

    json metadata{{"checkpoint", checkpoint_ref(args.ckpt)},
                  {"dataset",
                   {{"lq_dir", args.lq},
                    {"gt_dir", args.gt},
                    {"lq_sha", hex64(combined_dir_hash(args.lq))},
                    {"gt_sha", hex64(combined_dir_hash(args.gt))}}},
                  {"config", cfg.to_json()}};

    EvaluateSummary summary;
    summary.report = evaluate_net(*rest.net, items, feat, metadata);

    restore::LoadedRestorer other;
    if (!args.compare.empty()) {
        other = restore::load_restorer(args.compare);
        json md2 = metadata;
        md2["checkpoint"] = checkpoint_ref(args.compare);
        summary.compare_report = evaluate_net(*other.net, items, feat, md2);
        summary.has_compare = true;
    }

    fs::create_directories(out);
    summary.csv = join(out, "metrics.csv");
    metrics::write_metrics_csv(summary.csv, summary.report);

    std::string text = metrics::metrics_summary(summary.report);
    if (summary.has_compare) {
        metrics::write_metrics_csv(join(out, "metrics_compare.csv"), summary.compare_report);
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "compare_psnr: %.10g\ncompare_ssim: %.10g\ncompare_lpips: %.10g\n"
                      "compare_fid: %.10g\ndelta_psnr: %.10g\ndelta_lpips: %.10g\ndelta_fid: "
                      "%.10g\n",
                      summary.compare_report.mean_psnr, summary.compare_report.mean_ssim,
                      summary.compare_report.mean_lpips, summary.compare_report.fid,
                      summary.report.mean_psnr - summary.compare_report.mean_psnr,
                      summary.report.mean_lpips - summary.compare_report.mean_lpips,
                      summary.report.fid - summary.compare_report.fid);
        text += buf;
    }
    summary.summary_path = join(out, "summary.txt");
    write_file_bytes(summary.summary_path, text.data(), text.size());

    json report_json{{"metadata", summary.report.metadata},
                     {"aggregate",
                      {{"psnr", summary.report.mean_psnr},
                       {"ssim", summary.report.mean_ssim},
                       {"lpips", summary.report.mean_lpips},
                       {"fid", summary.report.fid}}}};
    if (summary.has_compare)
        report_json["compare"] = {{"checkpoint", checkpoint_ref(args.compare)},
                                  {"psnr", summary.compare_report.mean_psnr},
                                  {"ssim", summary.compare_report.mean_ssim},
                                  {"lpips", summary.compare_report.mean_lpips},
                                  {"fid", summary.compare_report.fid}};
    write_json_file(join(out, "report.json"), report_json);

    if (args.grids) {
        const std::size_t per_sheet = 6;
        int sheet_index = 0;
        for (std::size_t start = 0; start < items.size(); start += per_sheet) {
            std::vector<std::vector<Image>> rows;
            for (std::size_t i = start; i < std::min(items.size(), start + per_sheet); ++i) {
                // columns: input, this checkpoint, optional compare, ground truth
                std::vector<Image> row{items[i].lq, rest.net->restore(items[i].lq)};
                if (summary.has_compare) row.push_back(other.net->restore(items[i].lq));
                row.push_back(items[i].gt);
                rows.push_back(std::move(row));
            }
            char name[32];
            std::snprintf(name, sizeof(name), "grid_%03d.png", sheet_index++);
            write_contact_sheet(join(out, name), rows);
        }
    }
    return summary;
}

AblateSummary cmd_ablate(const RunConfig& cfg, const AblateArgs& args) {
    cfg.validate();
    if (args.values.empty()) throw param_error("ablate needs at least one value");
    if (args.axis != "n" && args.axis != "k" && args.axis != "l" && args.axis != "dataset-size")
        throw param_error("ablate axis must be one of n, k, l, dataset-size");
    if (args.lq.empty() || args.restorer.empty() || args.diffusion.empty() ||
        args.eval_lq.empty() || args.eval_gt.empty())
        throw param_error("ablate needs --lq, --restorer, --diffusion, --eval-lq, --eval-gt");
    auto out = default_path(cfg, "ablate", args.out);

    // validate the whole sweep before any side effects
    std::vector<RunConfig> sweep;
    for (int v : args.values) {
        RunConfig c = cfg;
        if (args.axis == "n")
            c.n_factor = v;
        else if (args.axis == "k")
            c.k_start = v;
        else if (args.axis == "l")
            c.l_stop = v;
        else if (v < 1)
            throw param_error("dataset-size values must be positive");
        c.validate();
        sweep.push_back(c);
    }

    auto lqs = load_image_dir(args.lq);
    auto eval_lqs = load_image_dir(args.eval_lq);
    auto eval_gts = load_image_dir(args.eval_gt);
    auto items = eval_items(eval_lqs, eval_gts);
    std::vector<Image> real;
    if (cfg.lambda_gan > 0.0) {
        if (args.real.empty())
            throw param_error("ablate needs --real while the adversarial weight is nonzero");
        real = images_only(load_image_dir(args.real));
    }
    if (args.axis == "dataset-size")
        for (int v : args.values)
            if (static_cast<std::size_t>(v) > lqs.size())
                throw data_error("dataset-size " + std::to_string(v) + " exceeds the " +
                                 std::to_string(lqs.size()) + " available pairs");

    auto dn = diffusion::load_denoiser(args.diffusion);
    diffusion::NetDenoiser nd(*dn.net);
    restore::LoadedRestorer base = restore::load_restorer(args.restorer);
    nn::FeatureNet feat(stage_seed(cfg.seed, "features"), base.net->channels);

    fs::create_directories(out);

    // dataset-size sweeps reuse one target set; parameter sweeps regenerate
    std::vector<std::pair<std::string, Image>> shared_targets;
    if (args.axis == "dataset-size") {
        auto dir = join(out, "targets");
        generate_target_set(cfg, lqs, base.net.get(), nd, dn.sched, dir,
                            {{"lq_dir", args.lq}});
        shared_targets = load_image_dir(dir);
    }

    AblateSummary summary;
    std::string table = "axis,value,fid,lpips,psnr,ssim\n";
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const RunConfig& c = sweep[i];
        const int v = args.values[i];

        std::vector<std::pair<std::string, Image>> pairs_lq, pairs_tgt;
        if (args.axis == "dataset-size") {
            pairs_lq.assign(lqs.begin(), lqs.begin() + v);
            pairs_tgt.assign(shared_targets.begin(), shared_targets.begin() + v);
        } else {
            auto dir = join(out, "targets_" + args.axis + std::to_string(v));
            generate_target_set(c, lqs, base.net.get(), nd, dn.sched, dir,
                                {{"lq_dir", args.lq}});
            pairs_lq = lqs;
            pairs_tgt = load_image_dir(dir);
        }
        // targets.json sits outside the png listing, keep pairs consistent
        require_matched(pairs_lq, pairs_tgt, "ablation pairs");

        auto tuned = restore::load_restorer(args.restorer);
        nn::TrainConfig tc;
        tc.lr = args.lr;
        tc.iters = args.finetune_iters;
        tc.batch = args.batch;
        tc.seed = stage_seed(cfg.seed, "finetune");
        restore::finetune_restorer(*tuned.net, images_only(pairs_lq), images_only(pairs_tgt),
                                   real, cfg.weights(), tc, feat);

        auto report = evaluate_net(*tuned.net, items, feat,
                                   {{"axis", args.axis}, {"value", v}});
        summary.rows.push_back({v, report.fid, report.mean_lpips, report.mean_psnr,
                                report.mean_ssim});
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s,%d,%.10g,%.10g,%.10g,%.10g\n", args.axis.c_str(), v,
                      report.fid, report.mean_lpips, report.mean_psnr, report.mean_ssim);
        table += buf;
    }

    summary.table_csv = join(out, "ablation.csv");
    write_file_bytes(summary.table_csv, table.data(), table.size());
    return summary;
}

DemoReport cmd_demo(const RunConfig& cfg, const DemoArgs& args) {
    cfg.validate();
    if (args.corpus_count < args.fit_count + args.eval_count + args.batch)
        throw param_error("demo corpus too small for the requested splits");
    for (int c : args.extra_pair_counts)
        if (c < 1 || c > args.fit_count)
            throw param_error("extra pair counts must lie in [1, fit_count]");
    auto out = default_path(cfg, "demo", args.out);
    fs::create_directories(out);

    DemoReport report;
    report.corpus_dir = join(out, "corpus");
    degrade::build_toy_corpus(report.corpus_dir, args.corpus_count, cfg.seed, args.image_size);

    // clean pool disjoint from the degradation splits: pretraining, diffusion
    // training, and the adversary never see the evaluation identities
    auto pool_dir = join(out, "pool");
    fs::create_directories(pool_dir);
    {
        auto names = list_files(report.corpus_dir, {".png"});
        for (std::size_t i = args.fit_count + args.eval_count; i < names.size(); ++i)
            fs::copy_file(names[i], fs::path(pool_dir) / names[i].filename(),
                          fs::copy_options::overwrite_existing);
    }

    report.dataset_dir = join(out, "dataset");
    DegradeArgs deg;
    deg.src = report.corpus_dir;
    deg.out = report.dataset_dir;
    deg.kind = "realistic";
    deg.iso = "moderate";
    deg.scale = 4;
    deg.fit_count = args.fit_count;
    deg.eval_count = args.eval_count;
    cmd_degrade(cfg, deg);

    PretrainArgs pre;
    pre.corpus = pool_dir;
    pre.out = join(out, "restorer_pre.ckpt");
    pre.iters = args.pretrain_iters;
    pre.batch = args.batch;
    auto pre_summary = cmd_pretrain_restorer(cfg, pre);
    report.pretrain_ckpt = pre_summary.ckpt;

    TrainDiffusionArgs diff;
    diff.corpus = pool_dir;
    diff.out = join(out, "diffusion.ckpt");
    diff.iters = args.diffusion_iters;
    diff.batch = args.batch;
    auto diff_summary = cmd_train_diffusion(cfg, diff);
    report.diffusion_ckpt = diff_summary.ckpt;

    auto lq_fit = join(report.dataset_dir, "lq/fit");
    auto lq_eval = join(report.dataset_dir, "lq/eval");
    auto gt_eval = join(report.dataset_dir, "gt/eval");

    EvaluateArgs ev_pre;
    ev_pre.ckpt = report.pretrain_ckpt;
    ev_pre.lq = lq_eval;
    ev_pre.gt = gt_eval;
    ev_pre.out = join(out, "eval_pre");
    report.before = cmd_evaluate(cfg, ev_pre).report;

    report.targets_dir = join(out, "targets");
    GenTargetsArgs gen;
    gen.lq = lq_fit;
    gen.restorer = report.pretrain_ckpt;
    gen.diffusion = report.diffusion_ckpt;
    gen.out = report.targets_dir;
    cmd_gen_targets(cfg, gen);

    FinetuneArgs ft;
    ft.lq = lq_fit;
    ft.targets = report.targets_dir;
    ft.real = pool_dir;
    ft.restorer = report.pretrain_ckpt;
    ft.out = join(out, "restorer_ft.ckpt");
    ft.iters = args.finetune_iters;
    ft.batch = args.batch;
    auto ft_summary = cmd_finetune(cfg, ft);
    report.finetune_ckpt = ft_summary.ckpt;

    EvaluateArgs ev_ft;
    ev_ft.ckpt = report.finetune_ckpt;
    ev_ft.lq = lq_eval;
    ev_ft.gt = gt_eval;
    ev_ft.out = join(out, "eval_ft");
    ev_ft.compare = report.pretrain_ckpt;
    ev_ft.grids = true;
    report.after = cmd_evaluate(cfg, ev_ft).report;

    report.improved_fid = report.after.fid < report.before.fid;
    report.improved_lpips = report.after.mean_lpips < report.before.mean_lpips;
    report.psnr_ok = report.after.mean_psnr >= report.before.mean_psnr - 0.5;

    // adaptation-set size runs reuse the generated targets
    report.size_runs = json::array();
    if (!args.extra_pair_counts.empty()) {
        auto lqs = load_image_dir(lq_fit);
        auto tgts = load_image_dir(report.targets_dir);
        require_matched(lqs, tgts, "demo pairs");
        auto real = images_only(load_image_dir(pool_dir));
        auto eval_set = eval_items(load_image_dir(lq_eval), load_image_dir(gt_eval));
        nn::FeatureNet feat(stage_seed(cfg.seed, "features"),
                            eval_set.front().lq.channels());
        for (int c : args.extra_pair_counts) {
            auto tuned = restore::load_restorer(report.pretrain_ckpt);
            nn::TrainConfig tc;
            tc.lr = 1e-4;
            tc.iters = args.finetune_iters;
            tc.batch = args.batch;
            tc.seed = stage_seed(cfg.seed, "finetune");
            restore::finetune_restorer(
                *tuned.net, images_only({lqs.begin(), lqs.begin() + c}),
                images_only({tgts.begin(), tgts.begin() + c}), real, cfg.weights(), tc, feat);
            auto r = evaluate_net(*tuned.net, eval_set, feat, {{"pairs", c}});
            report.size_runs.push_back({{"pairs", c},
                                        {"fid", r.fid},
                                        {"lpips", r.mean_lpips},
                                        {"psnr", r.mean_psnr},
                                        {"delta_fid", r.fid - report.before.fid},
                                        {"delta_lpips", r.mean_lpips - report.before.mean_lpips},
                                        {"delta_psnr", r.mean_psnr - report.before.mean_psnr}});
        }
    }

    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "pre-trained:  psnr %.4f  ssim %.4f  lpips %.6f  fid %.6f\n"
                  "fine-tuned:   psnr %.4f  ssim %.4f  lpips %.6f  fid %.6f\n"
                  "fid improved: %s\nlpips improved: %s\npsnr within 0.5 dB: %s\n",
                  report.before.mean_psnr, report.before.mean_ssim, report.before.mean_lpips,
                  report.before.fid, report.after.mean_psnr, report.after.mean_ssim,
                  report.after.mean_lpips, report.after.fid,
                  report.improved_fid ? "yes" : "no", report.improved_lpips ? "yes" : "no",
                  report.psnr_ok ? "yes" : "no");
    std::string text = buf;
    for (const auto& run : report.size_runs) {
        std::snprintf(buf, sizeof(buf),
                      "pairs %d: psnr %.4f  lpips %.6f  fid %.6f  (delta_fid %.6f)\n",
                      run.at("pairs").get<int>(), run.at("psnr").get<double>(),
                      run.at("lpips").get<double>(), run.at("fid").get<double>(),
                      run.at("delta_fid").get<double>());
        text += buf;
    }
    report.summary_path = join(out, "summary.txt");
    write_file_bytes(report.summary_path, text.data(), text.size());
    write_json_file(join(out, "report.json"),
                    {{"before",
                      {{"psnr", report.before.mean_psnr},
                       {"ssim", report.before.mean_ssim},
                       {"lpips", report.before.mean_lpips},
                       {"fid", report.before.fid}}},
                     {"after",
                      {{"psnr", report.after.mean_psnr},
                       {"ssim", report.after.mean_ssim},
                       {"lpips", report.after.mean_lpips},
                       {"fid", report.after.fid}}},
                     {"improved_fid", report.improved_fid},
                     {"improved_lpips", report.improved_lpips},
                     {"psnr_ok", report.psnr_ok},
                     {"size_runs", report.size_runs},
                     {"config", cfg.to_json()}});
    return report;
}

}  // namespace retarget::pipeline
