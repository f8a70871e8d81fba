#pragma once

#include "lesionpipe/config.hpp"
#include "lesionpipe/image.hpp"

namespace lesionpipe {

// Basic 3x3 local binary pattern: the 8 ring neighbours, clockwise from the
// top-left, form bits b7..b0 with bit = 1 iff neighbour >= center. Border
// pixels carry code 0.
struct LbpMap {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> codes;
};

LbpMap lbp_map(const GrayImage& img);

// One level of the orthonormal Haar (Daubechies-1) analysis, rows then
// columns. lh differentiates along x (horizontal detail), hl along y
// (vertical detail), hh along both. Odd dimensions are edge-replicated to
// even before filtering; the flags record it for the inverse.
struct Subbands {
  Raster ll, lh, hl, hh;
  bool padded_x = false;
  bool padded_y = false;
};

Subbands dwt2_haar(const Raster& img);
Raster idwt2_haar(const Subbands& sb);

struct WaveletPyramid {
  std::vector<Subbands> levels;  // level 0 is the finest

  const Raster& approximation(int level) const { return levels[level].ll; }
};

WaveletPyramid wavelet_pyramid(const Raster& img, int levels);
WaveletPyramid wavelet_pyramid(const GrayImage& img, int levels);
Raster inverse_pyramid(const WaveletPyramid& pyr);

Raster to_raster(const GrayImage& img);

// Network input: channel-major float32 planes, all values in [0, 1].
struct FeatureStack {
  int channels = 0;
  int width = 0;
  int height = 0;
  std::vector<float> data;

  FeatureStack() = default;
  FeatureStack(int c, int w, int h)
      : channels(c), width(w), height(h), data(size_t(c) * w * h, 0.f) {}
  float* channel(int c) { return data.data() + size_t(c) * width * height; }
  const float* channel(int c) const {
    return data.data() + size_t(c) * width * height;
  }
};

// Scenario A/B: grayscale/255. C: + LBP/255. D: + the three pyramid
// approximation images, each min-max normalized, resized to the prepared
// size and mirror-bordered back to the network input size.
FeatureStack build_input_stack(const GrayImage& pre, const ScenarioConfig& cfg);

// Applies one geometric transform to every channel.
FeatureStack apply_geom(GeomOp op, const FeatureStack& stack);

}  // namespace lesionpipe
