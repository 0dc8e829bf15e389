#include "retarget/pipeline/cli.hpp"

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "retarget/core/errors.hpp"
#include "retarget/core/io.hpp"
#include "retarget/pipeline/commands.hpp"

namespace retarget::pipeline {

namespace {

void add_schedule_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--timesteps", cfg.T, "diffusion schedule length");
    sub->add_option("--beta-start", cfg.beta_start, "first beta");
    sub->add_option("--beta-end", cfg.beta_end, "last beta");
    sub->add_option("--variance", cfg.variance, "reverse variance: posterior | beta");
    sub->add_option("--steps", cfg.steps, "respaced sampler grid; 0 walks every timestep");
}

void add_targetgen_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("-k,--k-start", cfg.k_start, "entry noising depth");
    sub->add_option("-l,--l-stop", cfg.l_stop, "last low-frequency-constrained timestep");
    sub->add_option("-n,--n-factor", cfg.n_factor, "low-pass block size");
    sub->add_option("--upsample", cfg.upsample, "low-pass upsampling: nearest | bilinear");
    sub->add_option("--sampler", cfg.sampler, "ours | difface | ilvr | dr2");
    sub->add_flag("--skip-restorer", cfg.skip_restorer,
                  "diffuse the raw input instead of a restorer output");
}

void add_loss_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--lambda-lpips", cfg.lambda_lpips, "perceptual loss weight");
    sub->add_option("--lambda-gan", cfg.lambda_gan, "adversarial loss weight");
}

void print_train_summary(const char* stage, const TrainSummary& s) {
    std::printf("%s: %d iterations, loss %.6g -> %.6g\n", stage, s.iterations, s.first_loss,
                s.last_loss);
    std::printf("checkpoint: %s\nloss curve: %s\n", s.ckpt.c_str(), s.loss_csv.c_str());
    if (s.diverged)
        std::printf("training diverged at iteration %d; kept the last finite weights\n",
                    s.stopped_at);
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"adapts a restoration model to an unknown degradation via diffusion-made targets"};
    app.require_subcommand(1);
    app.fallthrough();  // --seed and --data-root may follow the subcommand
    app.set_config("--config", "", "INI config; sections per subcommand, flags win");
    app.allow_config_extras(CLI::config_extras_mode::ignore_all);

    RunConfig cfg;
    app.add_option("--seed", cfg.seed, "root seed; every stage derives from it");
    app.add_option("--data-root", cfg.data_root, "default artifact root")
        ->envname("RETARGET_DATA_ROOT");

    auto* corpus_cmd = app.add_subcommand("make-corpus", "render a toy face corpus");
    CorpusArgs corpus_args;
    corpus_cmd->add_option("--out", corpus_args.out, "output directory");
    corpus_cmd->add_option("--count", corpus_args.count, "number of images");
    corpus_cmd->add_option("--size", corpus_args.size, "square side in pixels");

    auto* degrade_cmd = app.add_subcommand("degrade", "build a paired lq/gt dataset");
    DegradeArgs degrade_args;
    degrade_cmd->add_option("--src", degrade_args.src, "clean source directory")->required();
    degrade_cmd->add_option("--out", degrade_args.out, "dataset root");
    degrade_cmd->add_option("--kind", degrade_args.kind, "classic | realistic");
    degrade_cmd->add_option("--iso", degrade_args.iso, "noise preset: mild | moderate | severe");
    degrade_cmd->add_option("--scale", degrade_args.scale, "downscale factor (realistic)");
    degrade_cmd->add_option("--fit-count", degrade_args.fit_count, "adaptation split size");
    degrade_cmd->add_option("--eval-count", degrade_args.eval_count, "evaluation split size");
    degrade_cmd->add_option("--target-size", degrade_args.target_size,
                            "crop and resize sources to this side; 0 keeps them");
    degrade_cmd->add_flag("--dry-run", degrade_args.dry_run, "print the plan, write nothing");

    auto* diff_cmd = app.add_subcommand("train-diffusion", "train the unconditional denoiser");
    TrainDiffusionArgs diff_args;
    diff_cmd->add_option("--corpus", diff_args.corpus, "clean training directory");
    diff_cmd->add_option("--out", diff_args.out, "checkpoint path");
    diff_cmd->add_option("--iters", diff_args.iters, "total iterations");
    diff_cmd->add_option("--batch", diff_args.batch, "batch size");
    diff_cmd->add_option("--lr", diff_args.lr, "learning rate");
    diff_cmd->add_option("--base-ch", diff_args.base_ch, "first conv width");
    diff_cmd->add_option("--emb-dim", diff_args.emb_dim, "timestep embedding size");
    diff_cmd->add_option("--sample-every", diff_args.sample_every,
                         "write a sample grid every this many iterations");
    diff_cmd->add_option("--resume", diff_args.resume, "continue from this checkpoint");
    add_schedule_options(diff_cmd, cfg);

    auto* pre_cmd = app.add_subcommand("pretrain-restorer",
                                       "train the restorer on synthetic classic degradations");
    PretrainArgs pre_args;
    pre_cmd->add_option("--corpus", pre_args.corpus, "clean training directory");
    pre_cmd->add_option("--out", pre_args.out, "checkpoint path");
    pre_cmd->add_option("--iters", pre_args.iters, "iterations");
    pre_cmd->add_option("--batch", pre_args.batch, "batch size");
    pre_cmd->add_option("--lr", pre_args.lr, "learning rate");
    pre_cmd->add_option("--width", pre_args.width, "restorer width");
    pre_cmd->add_option("--depth", pre_args.depth, "restorer residual blocks");
    pre_cmd->add_option("--lambda-gan-pretrain", pre_args.lambda_gan,
                        "adversarial weight during pretraining");
    add_loss_options(pre_cmd, cfg);

    auto* gen_cmd = app.add_subcommand("gen-targets", "make pseudo targets for unpaired inputs");
    GenTargetsArgs gen_args;
    gen_cmd->add_option("--lq", gen_args.lq, "input directory")->required();
    gen_cmd->add_option("--restorer", gen_args.restorer, "restorer checkpoint");
    gen_cmd->add_option("--diffusion", gen_args.diffusion, "denoiser checkpoint")->required();
    gen_cmd->add_option("--out", gen_args.out, "target directory");
    add_schedule_options(gen_cmd, cfg);
    add_targetgen_options(gen_cmd, cfg);

    auto* ft_cmd = app.add_subcommand("finetune", "adapt a restorer on (input, target) pairs");
    FinetuneArgs ft_args;
    ft_cmd->add_option("--lq", ft_args.lq, "input directory")->required();
    ft_cmd->add_option("--targets", ft_args.targets, "pseudo-target directory")->required();
    ft_cmd->add_option("--real", ft_args.real, "clean images for the adversary");
    ft_cmd->add_option("--restorer", ft_args.restorer, "starting checkpoint")->required();
    ft_cmd->add_option("--out", ft_args.out, "checkpoint path");
    ft_cmd->add_option("--iters", ft_args.iters, "iterations");
    ft_cmd->add_option("--batch", ft_args.batch, "batch size");
    ft_cmd->add_option("--lr", ft_args.lr, "learning rate");
    add_loss_options(ft_cmd, cfg);

    auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on paired data");
    EvaluateArgs eval_args;
    eval_cmd->add_option("--ckpt", eval_args.ckpt, "checkpoint to score")->required();
    eval_cmd->add_option("--lq", eval_args.lq, "input directory")->required();
    eval_cmd->add_option("--gt", eval_args.gt, "ground-truth directory")->required();
    eval_cmd->add_option("--out", eval_args.out, "report directory");
    eval_cmd->add_option("--compare", eval_args.compare, "second checkpoint for deltas");
    eval_cmd->add_flag("--grids", eval_args.grids, "write side-by-side image sheets");

    auto* abl_cmd = app.add_subcommand("ablate", "sweep one knob and tabulate metrics");
    AblateArgs abl_args;
    abl_cmd->add_option("--axis", abl_args.axis, "n | k | l | dataset-size");
    abl_cmd->add_option("--values", abl_args.values, "sweep values")->required();
    abl_cmd->add_option("--lq", abl_args.lq, "adaptation input directory")->required();
    abl_cmd->add_option("--real", abl_args.real, "clean images for the adversary");
    abl_cmd->add_option("--restorer", abl_args.restorer, "pretrained checkpoint")->required();
    abl_cmd->add_option("--diffusion", abl_args.diffusion, "denoiser checkpoint")->required();
    abl_cmd->add_option("--eval-lq", abl_args.eval_lq, "evaluation inputs")->required();
    abl_cmd->add_option("--eval-gt", abl_args.eval_gt, "evaluation ground truth")->required();
    abl_cmd->add_option("--out", abl_args.out, "output directory");
    abl_cmd->add_option("--finetune-iters", abl_args.finetune_iters, "adaptation iterations");
    abl_cmd->add_option("--batch", abl_args.batch, "batch size");
    abl_cmd->add_option("--lr", abl_args.lr, "learning rate");
    add_schedule_options(abl_cmd, cfg);
    add_targetgen_options(abl_cmd, cfg);
    add_loss_options(abl_cmd, cfg);

    auto* demo_cmd = app.add_subcommand("demo", "end-to-end run on a rendered corpus");
    DemoArgs demo_args;
    demo_cmd->add_option("--out", demo_args.out, "output directory");
    demo_cmd->add_option("--corpus-count", demo_args.corpus_count, "rendered corpus size");
    demo_cmd->add_option("--image-size", demo_args.image_size, "image side in pixels");
    demo_cmd->add_option("--diffusion-iters", demo_args.diffusion_iters, "denoiser iterations");
    demo_cmd->add_option("--pretrain-iters", demo_args.pretrain_iters, "pretrain iterations");
    demo_cmd->add_option("--finetune-iters", demo_args.finetune_iters, "adaptation iterations");
    demo_cmd->add_option("--fit-count", demo_args.fit_count, "adaptation pairs");
    demo_cmd->add_option("--eval-count", demo_args.eval_count, "evaluation pairs");
    demo_cmd->add_option("--batch", demo_args.batch, "batch size");
    demo_cmd->add_option("--pair-counts", demo_args.extra_pair_counts,
                         "extra adaptation-set sizes to try");
    add_schedule_options(demo_cmd, cfg);
    add_targetgen_options(demo_cmd, cfg);
    add_loss_options(demo_cmd, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (corpus_cmd->parsed()) {
            auto manifest = cmd_make_corpus(cfg, corpus_args);
            std::printf("corpus manifest: %s\n", manifest.c_str());
        } else if (degrade_cmd->parsed()) {
            auto summary = cmd_degrade(cfg, degrade_args);
            if (degrade_args.dry_run)
                std::printf("%s\n", summary.plan.dump(2).c_str());
            else
                std::printf("dataset manifest: %s\n", summary.manifest.c_str());
        } else if (diff_cmd->parsed()) {
            auto summary = cmd_train_diffusion(cfg, diff_args);
            print_train_summary("train-diffusion", summary);
        } else if (pre_cmd->parsed()) {
            auto summary = cmd_pretrain_restorer(cfg, pre_args);
            print_train_summary("pretrain-restorer", summary);
            if (summary.diverged) return 4;
        } else if (gen_cmd->parsed()) {
            auto manifest = cmd_gen_targets(cfg, gen_args);
            std::printf("target manifest: %s\n", manifest.c_str());
        } else if (ft_cmd->parsed()) {
            auto summary = cmd_finetune(cfg, ft_args);
            print_train_summary("finetune", summary);
            if (summary.diverged) return 4;
        } else if (eval_cmd->parsed()) {
            auto summary = cmd_evaluate(cfg, eval_args);
            std::printf("metrics: %s\n", summary.csv.c_str());
            auto text = read_file_bytes(summary.summary_path);
            std::fwrite(text.data(), 1, text.size(), stdout);
        } else if (abl_cmd->parsed()) {
            auto summary = cmd_ablate(cfg, abl_args);
            std::printf("ablation table: %s\n", summary.table_csv.c_str());
            auto text = read_file_bytes(summary.table_csv);
            std::fwrite(text.data(), 1, text.size(), stdout);
        } else if (demo_cmd->parsed()) {
            auto report = cmd_demo(cfg, demo_args);
            auto text = read_file_bytes(report.summary_path);
            std::fwrite(text.data(), 1, text.size(), stdout);
            std::printf("full report: %s\n", report.summary_path.c_str());
            if (!report.improved_fid || !report.improved_lpips || !report.psnr_ok) {
                std::fprintf(stderr, "demo: adaptation did not improve on this run\n");
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "retarget: %s\n", e.what());
        return exit_code_for(e);
    }
    return 0;
}

}  // namespace retarget::pipeline
