#pragma once

#include <string>

#include "retarget/core/checkpoint.hpp"
#include "retarget/core/image.hpp"
#include "retarget/core/rng.hpp"

namespace retarget::degrade {

using retarget::Image;
using retarget::json;
using retarget::RngStream;

// Procedural face-like image: background, head, hair, eyes, mouth, all with
// randomized geometry and palette. Shares enough structure across draws for a
// small generative model to learn, with enough variation to tell sets apart.
Image toy_face(RngStream& rng, int size = 32);

// Writes count faces as {dst_dir}/img_%05d.png plus corpus.json with the
// seed and an aggregate content hash. Returns the manifest.
json build_toy_corpus(const std::string& dst_dir, int count, uint64_t seed, int size = 32);

}  // namespace retarget::degrade
