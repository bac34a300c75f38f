#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "uec/image.hpp"

namespace uec {

// Decodes 8-bit PNG (any color type, converted to RGB) or binary PPM (P6,
// maxval 255) by content signature. Values map to v/255.
ImageF32 read_image(const std::filesystem::path& path);

// Writes 8-bit RGB; format chosen by extension (.png or .ppm).
void write_image(const std::filesystem::path& path, const ImageF32& img);

std::uint8_t quantize_u8(float v);

// v -> round(v*255)/255, as a write/read cycle would produce.
ImageF32 quantize_8bit(const ImageF32& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace uec
