#include "sbssl/image_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <string>

#include "sbssl/errors.hpp"

namespace sbssl {

namespace {

void check_raster(int width, int height, std::size_t actual, std::size_t channels,
                  const char* what) {
  if (width < 1 || height < 1 ||
      actual != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels) {
    throw ShapeError(std::string(what) + ": raster size mismatch for " + std::to_string(width) +
                     "x" + std::to_string(height));
  }
}

std::ofstream open_binary(const std::filesystem::path& path, const char* what) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(std::string(what) + ": cannot open " + path.string());
  return out;
}

void append_u32_be(std::vector<std::uint8_t>& bytes, std::uint32_t v) {
  bytes.push_back(static_cast<std::uint8_t>(v >> 24));
  bytes.push_back(static_cast<std::uint8_t>(v >> 16));
  bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  bytes.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& file, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  append_u32_be(file, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = file.size();
  file.insert(file.end(), type, type + 4);
  file.insert(file.end(), payload.begin(), payload.end());
  const auto crc = crc32(0L, file.data() + crc_start, static_cast<uInt>(file.size() - crc_start));
  append_u32_be(file, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& pixels) {
  check_raster(width, height, pixels.size(), 1, "write_pgm");
  std::ofstream out = open_binary(path, "write_pgm");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw DataError("write_pgm: write failed for " + path.string());
}

void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels) {
  check_raster(width, height, pixels.size(), 3, "write_png_rgb");

  // Scanlines with filter byte 0 (None) prepended to each row.
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  std::vector<std::uint8_t> raw((stride + 1) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    row[0] = 0;
    std::memcpy(row + 1, pixels.data() + static_cast<std::size_t>(y) * stride, stride);
  }

  uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()),
                /*level=*/6) != Z_OK) {
    throw DataError("write_png_rgb: deflate failed");
  }
  compressed.resize(compressed_size);

  std::vector<std::uint8_t> file = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  append_u32_be(ihdr, static_cast<std::uint32_t>(width));
  append_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  append_chunk(file, "IHDR", ihdr);
  append_chunk(file, "IDAT", compressed);
  append_chunk(file, "IEND", {});

  std::ofstream out = open_binary(path, "write_png_rgb");
  out.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
  if (!out) throw DataError("write_png_rgb: write failed for " + path.string());
}

}  // namespace sbssl
