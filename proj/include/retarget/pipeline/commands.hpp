#pragma once

#include <string>
#include <utility>
#include <vector>

#include "retarget/degrade/classic.hpp"
#include "retarget/degrade/dataset.hpp"
#include "retarget/metrics/metrics.hpp"
#include "retarget/pipeline/config.hpp"

namespace retarget::pipeline {

// Sorted (name, image) pairs for every PNG directly under dir.
std::vector<std::pair<std::string, Image>> load_image_dir(const std::string& dir);

// Grid of images on a white canvas, written as one PNG. Rows may have
// different lengths; cells are sized to the largest image.
void write_contact_sheet(const std::string& path, const std::vector<std::vector<Image>>& rows,
                         int pad = 2);

struct CorpusArgs {
    std::string out;
    int count = 64;
    int size = 32;
};

// Returns the corpus manifest path.
std::string cmd_make_corpus(const RunConfig& cfg, const CorpusArgs& args);

struct DegradeArgs {
    std::string src;
    std::string out;
    std::string kind = "classic";  // classic | realistic
    degrade::ClassicDegradationParams classic;
    std::string iso = "moderate";  // noise preset for the realistic path
    int scale = 4;                 // integer factor for the realistic path
    int fit_count = 0;
    int eval_count = 0;
    int target_size = 0;
    bool dry_run = false;
};

struct DegradeSummary {
    std::string manifest;  // empty on a dry run
    json plan;
};

DegradeSummary cmd_degrade(const RunConfig& cfg, const DegradeArgs& args);

struct TrainDiffusionArgs {
    std::string corpus;
    std::string out;
    int iters = 20000;
    int batch = 4;
    double lr = 1e-4;
    int base_ch = 16;
    int emb_dim = 64;
    int sample_every = 0;  // emit an unconditional sample grid every k iters
    std::string resume;
};

struct TrainSummary {
    std::string ckpt;
    std::string loss_csv;
    int iterations = 0;
    double first_loss = 0.0;
    double last_loss = 0.0;
    bool diverged = false;
    int stopped_at = -1;
};

TrainSummary cmd_train_diffusion(const RunConfig& cfg, const TrainDiffusionArgs& args);

struct PretrainArgs {
    std::string corpus;
    std::string out;
    int iters = 3000;
    int batch = 4;
    double lr = 1e-4;
    int width = 32;
    int depth = 3;
    degrade::ClassicRange range;
    // The adversarial term defaults off during pretraining; tiny corpora make
    // it fight the reconstruction terms. The shared lambda applies when set.
    double lambda_gan = 0.0;
};

TrainSummary cmd_pretrain_restorer(const RunConfig& cfg, const PretrainArgs& args);

struct GenTargetsArgs {
    std::string lq;
    std::string restorer;   // may stay empty with cfg.skip_restorer
    std::string diffusion;
    std::string out;
};

// Returns the target-set manifest path.
std::string cmd_gen_targets(const RunConfig& cfg, const GenTargetsArgs& args);

struct FinetuneArgs {
    std::string lq;
    std::string targets;
    std::string real;
    std::string restorer;
    std::string out;
    int iters = 2000;
    int batch = 4;
    double lr = 1e-4;
};

TrainSummary cmd_finetune(const RunConfig& cfg, const FinetuneArgs& args);

struct EvaluateArgs {
    std::string ckpt;
    std::string lq;
    std::string gt;
    std::string out;
    std::string compare;  // optional second checkpoint for side-by-side deltas
    bool grids = false;
};

struct EvaluateSummary {
    metrics::MetricsReport report;
    metrics::MetricsReport compare_report;
    bool has_compare = false;
    std::string csv;
    std::string summary_path;
};

EvaluateSummary cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& args);

struct AblateArgs {
    std::string axis = "n";  // n | k | l | dataset-size
    std::vector<int> values;
    std::string lq;
    std::string real;
    std::string restorer;
    std::string diffusion;
    std::string eval_lq;
    std::string eval_gt;
    std::string out;
    int finetune_iters = 2000;
    int batch = 4;
    double lr = 1e-4;
};

struct AblateRow {
    int value = 0;
    double fid = 0.0;
    double lpips = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct AblateSummary {
    std::vector<AblateRow> rows;
    std::string table_csv;
};

AblateSummary cmd_ablate(const RunConfig& cfg, const AblateArgs& args);

struct DemoArgs {
    std::string out;
    int corpus_count = 64;
    int image_size = 32;
    int diffusion_iters = 400;
    int pretrain_iters = 250;
    int finetune_iters = 200;
    int fit_count = 12;
    int eval_count = 6;
    int batch = 4;
    std::vector<int> extra_pair_counts;  // additional adaptation-set sizes to report
};

struct DemoReport {
    metrics::MetricsReport before;
    metrics::MetricsReport after;
    json size_runs;
    bool improved_fid = false;
    bool improved_lpips = false;
    bool psnr_ok = false;  // within 0.5 dB of the pre-trained score
    std::string summary_path;
    std::string corpus_dir;
    std::string dataset_dir;
    std::string diffusion_ckpt;
    std::string pretrain_ckpt;
    std::string finetune_ckpt;
    std::string targets_dir;
};

DemoReport cmd_demo(const RunConfig& cfg, const DemoArgs& args);

}  // namespace retarget::pipeline
