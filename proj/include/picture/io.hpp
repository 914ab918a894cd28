#ifndef PICTURE_IO_HPP
#define PICTURE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "picture/raster.hpp"

namespace picture {

// Raster persistence: raw little-endian f32 payload (`<base>.f32`,
// row-major) plus a JSON sidecar (`<base>.json`) carrying shape, dtype,
// semantic tag, and optional spacing/frequency metadata.
struct RasterMeta {
    std::string semantic = "rf";  // rf | disp_axial | disp_lateral | strain | epr
    double spacing_a = 1.0, spacing_l = 1.0;
    double sampling_freq = 0.0, center_freq = 0.0;  // 0 = not applicable
};

void write_raster(const std::filesystem::path& base, const Raster& r, const RasterMeta& meta);
Raster read_raster(const std::filesystem::path& base, RasterMeta* meta = nullptr);

// Atomically replace `path` with `bytes` (write temp, then rename).
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit content hash, hex-encoded; used in run manifests.
std::string content_hash(const std::string& bytes);
std::string file_hash(const std::filesystem::path& path);

// 8-bit grayscale render (binary PGM) with fixed display bounds.
void write_gray_image(const std::filesystem::path& path, const Raster& r, double lo, double hi);

}  // namespace picture

#endif
