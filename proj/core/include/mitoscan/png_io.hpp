#pragma once

#include <filesystem>

#include "mitoscan/image.hpp"

namespace mitoscan {

/// Reads a grayscale PNG (8- or 16-bit). Sub-8-bit images are expanded to 8.
/// Throws UnreadableFileError for missing files, decode failures, or
/// non-grayscale content.
GrayImage read_gray_png(const std::filesystem::path& path);

/// Writes a grayscale PNG at the image's native bit depth. Output bytes are
/// a pure function of the pixel data.
void write_gray_png(const std::filesystem::path& path, const GrayImage& img);

}  // namespace mitoscan
