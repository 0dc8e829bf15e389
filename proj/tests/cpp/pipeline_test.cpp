#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>

#include "retarget/core/errors.hpp"
#include "retarget/core/io.hpp"
#include "retarget/diffusion/train.hpp"
#include "retarget/metrics/metrics.hpp"
#include "retarget/pipeline/cli.hpp"
#include "retarget/pipeline/commands.hpp"
#include "retarget/restore/train.hpp"

using namespace retarget;
using namespace retarget::pipeline;
namespace fs = std::filesystem;

namespace {

// one tiny corpus, dataset, and checkpoint pair shared across the cases below
struct Stage {
    RunConfig cfg;
    std::string root = "pipeline_test_tmp";
    std::string corpus, lq_fit, lq_eval, gt_eval, pre_ckpt, diff_ckpt;
};

const Stage& stage() {
    static Stage s = [] {
        Stage st;
        fs::remove_all(st.root);
        st.cfg.seed = 77;
        st.cfg.data_root = st.root;
        st.cfg.steps = 25;
        st.cfg.n_factor = 4;

        CorpusArgs ca;
        ca.count = 14;
        ca.size = 16;
        cmd_make_corpus(st.cfg, ca);
        st.corpus = st.root + "/corpus";

        DegradeArgs da;
        da.src = st.corpus;
        da.kind = "realistic";
        da.fit_count = 4;
        da.eval_count = 3;
        cmd_degrade(st.cfg, da);
        st.lq_fit = st.root + "/datasets/realistic/lq/fit";
        st.lq_eval = st.root + "/datasets/realistic/lq/eval";
        st.gt_eval = st.root + "/datasets/realistic/gt/eval";

        PretrainArgs pa;
        pa.iters = 15;
        pa.batch = 2;
        pa.width = 8;
        pa.depth = 1;
        st.pre_ckpt = cmd_pretrain_restorer(st.cfg, pa).ckpt;

        TrainDiffusionArgs ta;
        ta.iters = 15;
        ta.batch = 2;
        ta.base_ch = 8;
        ta.emb_dim = 16;
        st.diff_ckpt = cmd_train_diffusion(st.cfg, ta).ckpt;
        return st;
    }();
    return s;
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "retarget");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

double quantized(double v) { return std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

TEST_CASE("run config validation") {
    RunConfig good;
    CHECK_NOTHROW(good.validate());

    auto bad = [&](auto&& mutate) {
        RunConfig c;
        mutate(c);
        CHECK_THROWS_AS(c.validate(), param_error);
    };
    bad([](RunConfig& c) { c.T = 0; });
    bad([](RunConfig& c) { c.beta_start = 0.0; });
    bad([](RunConfig& c) { c.beta_start = 0.03; });  // above beta_end
    bad([](RunConfig& c) { c.beta_end = 1.0; });
    bad([](RunConfig& c) { c.variance = "exact"; });
    bad([](RunConfig& c) { c.steps = 1; });
    bad([](RunConfig& c) { c.steps = c.T + 1; });
    bad([](RunConfig& c) { c.k_start = c.T + 1; });
    bad([](RunConfig& c) { c.l_stop = c.k_start; });
    bad([](RunConfig& c) { c.k_start = 0; });  // leaves l_stop above it
    bad([](RunConfig& c) { c.l_stop = -1; });
    bad([](RunConfig& c) { c.n_factor = 0; });
    bad([](RunConfig& c) { c.upsample = "bicubic"; });
    bad([](RunConfig& c) { c.sampler = "ddim"; });
    bad([](RunConfig& c) { c.lambda_lpips = -0.1; });
    bad([](RunConfig& c) { c.lambda_gan = std::nan(""); });

    RunConfig degenerate;
    degenerate.k_start = 0;
    degenerate.l_stop = 0;
    CHECK_NOTHROW(degenerate.validate());

    CHECK(stage_seed(1, "a") == stage_seed(1, "a"));
    CHECK(stage_seed(1, "a") != stage_seed(1, "b"));
    CHECK(stage_seed(1, "a") != stage_seed(2, "a"));
}

TEST_CASE("image directory loading") {
    const auto& st = stage();
    auto imgs = load_image_dir(st.corpus);
    CHECK(imgs.size() == 14);
    CHECK(std::is_sorted(imgs.begin(), imgs.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; }));
    for (const auto& [name, img] : imgs) {
        CHECK(name.ends_with(".png"));
        CHECK(img.height() == 16);
    }
    CHECK_THROWS_AS(load_image_dir(st.root + "/no_such_dir"), data_error);
}

TEST_CASE("contact sheet layout") {
    const auto& st = stage();
    Image a = Image::constant(3, 4, 6, Domain::pixel01, 0.0);
    auto path = st.root + "/sheet.png";
    write_contact_sheet(path, {{a, a, a}, {a, a, a}}, 2);
    Image sheet = read_png(path);
    CHECK(sheet.height() == 2 * (4 + 2) + 2);
    CHECK(sheet.width() == 3 * (6 + 2) + 2);
    CHECK(sheet.at(0, 0, 0) == 1.0);  // padding stays white
    CHECK(sheet.at(0, 2, 2) == 0.0);

    Image gray = Image::constant(1, 4, 6, Domain::pixel01, 0.5);
    CHECK_THROWS_AS(write_contact_sheet(path, {{a, gray}}), shape_error);
}

TEST_CASE("degrade dry run plans without writing") {
    const auto& st = stage();
    DegradeArgs da;
    da.src = st.corpus;
    da.out = st.root + "/dry_out";
    da.kind = "classic";
    da.fit_count = 2;
    da.eval_count = 2;
    da.dry_run = true;
    auto summary = cmd_degrade(st.cfg, da);
    CHECK(summary.manifest.empty());
    CHECK(summary.plan.at("out") == da.out);
    CHECK(summary.plan.at("degradation").at("kind") == "classic");
    CHECK(!fs::exists(da.out));
}

TEST_CASE("depth-zero regeneration reproduces the restorer output") {
    const auto& st = stage();
    RunConfig cfg = st.cfg;
    cfg.sampler = "difface";
    cfg.k_start = 0;
    cfg.l_stop = 0;

    GenTargetsArgs ga;
    ga.lq = st.lq_fit;
    ga.restorer = st.pre_ckpt;
    ga.diffusion = st.diff_ckpt;
    ga.out = st.root + "/targets_identity";
    cmd_gen_targets(cfg, ga);

    auto rest = restore::load_restorer(st.pre_ckpt);
    for (const auto& [name, lq] : load_image_dir(st.lq_fit)) {
        Image expected = rest.net->restore(lq);
        Image got = read_png(ga.out + "/" + name);
        REQUIRE(got.same_shape(expected));
        for (std::size_t i = 0; i < got.data().size(); ++i)
            REQUIRE(got.data()[i] == quantized(expected.data()[i]));
    }
}

TEST_CASE("target generation is deterministic and self-describing") {
    const auto& st = stage();
    GenTargetsArgs ga;
    ga.lq = st.lq_fit;
    ga.restorer = st.pre_ckpt;
    ga.diffusion = st.diff_ckpt;
    ga.out = st.root + "/targets_a";
    auto manifest_a = cmd_gen_targets(st.cfg, ga);
    ga.out = st.root + "/targets_b";
    auto manifest_b = cmd_gen_targets(st.cfg, ga);

    CHECK(read_file_bytes(manifest_a) == read_file_bytes(manifest_b));

    auto manifest = read_json_file(manifest_a);
    auto lqs = load_image_dir(st.lq_fit);
    REQUIRE(manifest.at("files").size() == lqs.size());
    CHECK(manifest.at("schedule_hash") == hex64(st.cfg.schedule().hash()));
    for (std::size_t i = 0; i < lqs.size(); ++i) {
        const auto& entry = manifest.at("files")[i];
        CHECK(entry.at("name") == lqs[i].first);
        CHECK(entry.at("lq_sha") == hex64(hash_image(lqs[i].second)));
        auto a = st.root + "/targets_a/" + lqs[i].first;
        auto b = st.root + "/targets_b/" + lqs[i].first;
        CHECK(entry.at("target_sha") == hex64(hash_file(a)));
        CHECK(hash_file(a) == hash_file(b));
        // guided regeneration must move the image, not copy it through
        CHECK(hash_file(a) != hash_image(lqs[i].second));
    }
}

TEST_CASE("sampler grids validate before writing") {
    const auto& st = stage();
    GenTargetsArgs ga;
    ga.lq = st.lq_fit;
    ga.restorer = st.pre_ckpt;
    ga.diffusion = st.diff_ckpt;
    ga.out = st.root + "/targets_invalid";

    RunConfig cfg = st.cfg;
    cfg.n_factor = 5;  // 16 is not divisible by 5
    CHECK_THROWS_AS(cmd_gen_targets(cfg, ga), param_error);
    CHECK(!fs::exists(ga.out));

    cfg = st.cfg;
    cfg.sampler = "dr2";
    cfg.l_stop = 0;
    cfg.k_start = 600;
    CHECK_THROWS_AS(cmd_gen_targets(cfg, ga), param_error);
    CHECK(!fs::exists(ga.out));
}

TEST_CASE("finetune rejects unpaired directories") {
    const auto& st = stage();
    auto targets = st.root + "/targets_a";  // built above; doctest runs cases in order
    REQUIRE(fs::is_directory(targets));

    auto broken = st.root + "/targets_broken";
    fs::remove_all(broken);
    fs::create_directories(broken);
    for (const auto& p : list_files(targets, {".png"}))
        fs::copy_file(p, fs::path(broken) / p.filename());
    auto files = list_files(broken, {".png"});
    fs::rename(files.front(), fs::path(broken) / "renamed.png");

    FinetuneArgs fa;
    fa.lq = st.lq_fit;
    fa.targets = broken;
    fa.real = st.corpus;
    fa.restorer = st.pre_ckpt;
    fa.iters = 2;
    fa.batch = 2;
    CHECK_THROWS_AS(cmd_finetune(st.cfg, fa), data_error);

    fs::remove(fs::path(broken) / "renamed.png");
    CHECK_THROWS_AS(cmd_finetune(st.cfg, fa), data_error);
}

TEST_CASE("finetune then evaluate writes the full report") {
    const auto& st = stage();
    FinetuneArgs fa;
    fa.lq = st.lq_fit;
    fa.targets = st.root + "/targets_a";
    fa.real = st.corpus;
    fa.restorer = st.pre_ckpt;
    fa.out = st.root + "/ft.ckpt";
    fa.iters = 10;
    fa.batch = 2;
    auto ft = cmd_finetune(st.cfg, fa);
    CHECK(fs::exists(ft.ckpt));
    CHECK(ft.iterations == 10);
    auto csv = read_file_bytes(ft.loss_csv);
    std::string head(csv.begin(), csv.begin() + 12);
    CHECK(head == "iter,loss,d_");

    EvaluateArgs ea;
    ea.ckpt = ft.ckpt;
    ea.lq = st.lq_eval;
    ea.gt = st.gt_eval;
    ea.out = st.root + "/eval_out";
    ea.compare = st.pre_ckpt;
    ea.grids = true;
    auto ev = cmd_evaluate(st.cfg, ea);
    CHECK(ev.has_compare);
    CHECK(ev.report.rows.size() == 3);
    CHECK(std::isfinite(ev.report.fid));
    CHECK(std::isfinite(ev.compare_report.fid));

    auto metrics_bytes = read_file_bytes(ev.csv);
    std::string header(metrics_bytes.begin(), metrics_bytes.begin() + 19);
    CHECK(header == "id,psnr,ssim,lpips\n");
    auto report = read_json_file(st.root + "/eval_out/report.json");
    CHECK(report.at("aggregate").contains("fid"));
    CHECK(report.at("compare").contains("lpips"));
    CHECK(report.at("metadata").at("checkpoint").at("sha") == hex64(hash_file(ft.ckpt)));
    CHECK(fs::exists(st.root + "/eval_out/grid_000.png"));
    CHECK(fs::exists(st.root + "/eval_out/summary.txt"));

    // evaluation is read-only on the model, so a rerun reproduces the bytes
    EvaluateArgs again = ea;
    again.out = st.root + "/eval_out2";
    cmd_evaluate(st.cfg, again);
    CHECK(read_file_bytes(st.root + "/eval_out/metrics.csv") ==
          read_file_bytes(st.root + "/eval_out2/metrics.csv"));
}

TEST_CASE("single point ablation matches a composed run") {
    const auto& st = stage();

    AblateArgs aa;
    aa.axis = "n";
    aa.values = {4};
    aa.lq = st.lq_fit;
    aa.real = st.corpus;
    aa.restorer = st.pre_ckpt;
    aa.diffusion = st.diff_ckpt;
    aa.eval_lq = st.lq_eval;
    aa.eval_gt = st.gt_eval;
    aa.out = st.root + "/ablate_out";
    aa.finetune_iters = 10;
    aa.batch = 2;
    auto summary = cmd_ablate(st.cfg, aa);
    REQUIRE(summary.rows.size() == 1);

    FinetuneArgs fa;
    fa.lq = st.lq_fit;
    fa.targets = st.root + "/targets_a";  // same config, so same targets
    fa.real = st.corpus;
    fa.restorer = st.pre_ckpt;
    fa.out = st.root + "/ablate_manual.ckpt";
    fa.iters = 10;
    fa.batch = 2;
    auto ft = cmd_finetune(st.cfg, fa);

    EvaluateArgs ea;
    ea.ckpt = ft.ckpt;
    ea.lq = st.lq_eval;
    ea.gt = st.gt_eval;
    ea.out = st.root + "/ablate_manual_eval";
    auto ev = cmd_evaluate(st.cfg, ea);

    CHECK(summary.rows[0].value == 4);
    CHECK(summary.rows[0].fid == ev.report.fid);
    CHECK(summary.rows[0].lpips == ev.report.mean_lpips);
    CHECK(summary.rows[0].psnr == ev.report.mean_psnr);
    CHECK(summary.rows[0].ssim == ev.report.mean_ssim);

    auto table = read_file_bytes(summary.table_csv);
    std::string head(table.begin(), table.begin() + 31);
    CHECK(head == "axis,value,fid,lpips,psnr,ssim\n");

    AblateArgs bad = aa;
    bad.axis = "dataset-size";
    bad.values = {99};
    CHECK_THROWS_AS(cmd_ablate(st.cfg, bad), data_error);
}

TEST_CASE("diffusion training resumes from a checkpoint") {
    const auto& st = stage();
    RunConfig cfg = st.cfg;
    cfg.data_root = st.root + "/resume";

    TrainDiffusionArgs ta;
    ta.corpus = st.corpus;
    ta.iters = 6;
    ta.batch = 2;
    ta.base_ch = 8;
    ta.emb_dim = 16;
    auto first = cmd_train_diffusion(cfg, ta);
    CHECK(first.iterations == 6);

    TrainDiffusionArgs more = ta;
    more.resume = first.ckpt;
    more.iters = 9;
    more.out = st.root + "/resume/continued.ckpt";
    auto second = cmd_train_diffusion(cfg, more);
    CHECK(second.iterations == 9);
    auto loaded = diffusion::load_denoiser(second.ckpt);
    CHECK(loaded.manifest.at("iteration") == 9);

    more.iters = 3;  // already past this point
    CHECK_THROWS_AS(cmd_train_diffusion(cfg, more), param_error);
}

TEST_CASE("cli maps outcomes to exit codes") {
    const auto& st = stage();
    CHECK(run({"--help"}) == 0);
    CHECK(run({}) == 2);
    CHECK(run({"gen-targets", "--lq", st.lq_fit, "--restorer", st.pre_ckpt, "--diffusion",
               st.diff_ckpt, "--sampler", "bogus", "--data-root", st.root}) == 2);
    CHECK(run({"gen-targets", "--lq", st.root + "/no_such_dir", "--restorer", st.pre_ckpt,
               "--diffusion", st.diff_ckpt, "--out", st.root + "/targets_cli", "--data-root",
               st.root}) == 3);
    CHECK(run({"evaluate", "--ckpt", st.pre_ckpt, "--lq", st.lq_eval, "--gt", st.gt_eval,
               "--out", st.root + "/eval_cli", "--data-root", st.root}) == 0);
}
