#pragma once

#include <filesystem>

#include "lesionpipe/image.hpp"

namespace lesionpipe {

// Any PNG colour type is expanded to 8-bit RGB on read.
RgbImage read_png_rgb(const std::filesystem::path& path);

// 8-bit grayscale view of any PNG (RGB input goes through to_grayscale).
GrayImage read_png_gray(const std::filesystem::path& path);

// Masks are stored as 0/255 grayscale PNGs; values > 127 map to 1.
BinaryMask read_png_mask(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const GrayImage& img);
void write_png(const std::filesystem::path& path, const RgbImage& img);
void write_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace lesionpipe
