#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lesionpipe/errors.hpp"

namespace lesionpipe {

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(size_t(w) * h * 3) {}
  const uint8_t* px(int y, int x) const {
    return data.data() + (size_t(y) * width + x) * 3;
  }
  uint8_t* px(int y, int x) { return data.data() + (size_t(y) * width + x) * 3; }
};

// Single-channel 8-bit intensities, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, uint8_t fill = 0)
      : width(w), height(h), data(size_t(w) * h, fill) {}
  uint8_t at(int y, int x) const { return data[size_t(y) * width + x]; }
  uint8_t& at(int y, int x) { return data[size_t(y) * width + x]; }
  const uint8_t* row(int y) const { return data.data() + size_t(y) * width; }
  uint8_t* row(int y) { return data.data() + size_t(y) * width; }
  bool operator==(const GrayImage&) const = default;
};

// Per-pixel {0,1} labels aligned to a GrayImage; 1 = lesion.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h, uint8_t fill = 0)
      : width(w), height(h), data(size_t(w) * h, fill) {}
  uint8_t at(int y, int x) const { return data[size_t(y) * width + x]; }
  uint8_t& at(int y, int x) { return data[size_t(y) * width + x]; }
  int64_t area() const {
    int64_t n = 0;
    for (uint8_t v : data) n += v;
    return n;
  }
  bool operator==(const BinaryMask&) const = default;
};

// Floating-point working raster (wavelet coefficients, probability maps).
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Raster() = default;
  Raster(int w, int h, double fill = 0.0)
      : width(w), height(h), data(size_t(w) * h, fill) {}
  double at(int y, int x) const { return data[size_t(y) * width + x]; }
  double& at(int y, int x) { return data[size_t(y) * width + x]; }
};

// Rec. 601 luminance, round-half-up.
GrayImage to_grayscale(const RgbImage& img);

// Bilinear resampling on the (n-1)/(out-1) aligned grid; a constant image maps
// to the same constant and output stays within [min, max] of the input.
GrayImage resize_bilinear(const GrayImage& img, int w, int h);
Raster resize_bilinear(const Raster& img, int w, int h);

// Nearest-neighbour resampling, preserves {0,1} values.
BinaryMask resize_nearest(const BinaryMask& mask, int w, int h);

// Mirror-reflection border (edge row/column not repeated). Requires
// t < min(w, h); t = 0 is the identity.
GrayImage add_border(const GrayImage& img, int t);
Raster add_border(const Raster& img, int t);

// Inverse of add_border. Requires w, h > 2t.
GrayImage crop_border(const GrayImage& img, int t);
BinaryMask crop_border(const BinaryMask& mask, int t);

// Geometric transforms shared by images, masks and feature channels.
// rot90 is counter-clockwise; mirror_x reverses rows (flip across the
// horizontal axis), mirror_y reverses columns.
enum class GeomOp { Identity, Rot90, Rot180, Rot270, MirrorX, MirrorY };

template <typename T>
void apply_geom(GeomOp op, const T* src, T* dst, int w, int h);

GrayImage apply_geom(GeomOp op, const GrayImage& img);
BinaryMask apply_geom(GeomOp op, const BinaryMask& mask);

// The six-way augmentation: original, rot90, rot180, rot270, mirror-x,
// mirror-y, with the mask transformed identically. Image must be square.
std::vector<std::pair<GrayImage, BinaryMask>> augment_six(const GrayImage& img,
                                                          const BinaryMask& mask);

constexpr GeomOp kAugmentOps[6] = {GeomOp::Identity, GeomOp::Rot90,
                                   GeomOp::Rot180,   GeomOp::Rot270,
                                   GeomOp::MirrorX,  GeomOp::MirrorY};

}  // namespace lesionpipe
