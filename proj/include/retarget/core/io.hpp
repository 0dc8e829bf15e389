#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "retarget/core/image.hpp"

namespace retarget {

// 8-bit PNG in/out. Gray files load as 1 channel, color as 3 (alpha stripped).
// Values map k -> k/255 on read and round(clip(v)*255) on write.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

// Baseline JPEG round trip through libjpeg, in memory. quality in [1,100].
std::vector<uint8_t> jpeg_encode(const Image& img, int quality);
Image jpeg_decode(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, std::size_t n);

uint64_t hash_file(const std::string& path);
uint64_t hash_image(const Image& img);

// Sorted list of files in dir with one of the given extensions.
std::vector<std::filesystem::path> list_files(const std::string& dir,
                                              const std::vector<std::string>& extensions);

}  // namespace retarget
