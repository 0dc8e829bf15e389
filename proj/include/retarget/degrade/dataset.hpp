#pragma once

#include <string>

#include "retarget/core/checkpoint.hpp"
#include "retarget/degrade/classic.hpp"
#include "retarget/degrade/isp.hpp"

namespace retarget::degrade {

using retarget::json;

// Which degradation a dataset build applies.
struct DegradationConfig {
    enum class Kind { classic, realistic };
    Kind kind = Kind::classic;
    ClassicDegradationParams classic;
    RealisticDegradationParams realistic;
};

Image apply_degradation(const Image& img, const DegradationConfig& cfg, RngStream& rng);

json degradation_config_json(const DegradationConfig& cfg);

struct DatasetSplit {
    int fit_count = 0;
    int eval_count = 0;
};

// Builds {dst}/lq/{fit,eval}/img_%05d.png from the sorted PNGs under src_dir,
// plus {dst}/gt/eval for the evaluation pairs, and writes manifest.json with
// params, seed, and content hashes. Sources are center-cropped square and
// resized to target_size first (0 keeps them as they are, but they must then
// share one size).
json build_dataset(const std::string& src_dir, const std::string& dst_root,
                   const DegradationConfig& cfg, const DatasetSplit& split, uint64_t seed,
                   int target_size = 0);

// Standard file name for dataset images: img_%05d.png.
std::string image_name(int index);

}  // namespace retarget::degrade
