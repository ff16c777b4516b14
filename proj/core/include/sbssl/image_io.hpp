#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sbssl {

// Binary PGM (P5, maxval 255); pixels are row-major, size width*height.
void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& pixels);

// 8-bit RGB PNG; pixels are row-major interleaved, size width*height*3.
// Deterministic output: fixed zlib level, no ancillary chunks, so identical
// inputs produce byte-identical files.
void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels);

}  // namespace sbssl
