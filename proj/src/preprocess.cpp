#include "lesionpipe/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace lesionpipe {

GrayImage contrast_stretch(const GrayImage& img, const ContrastParams& p) {
  if (p.clip_fraction < 0.0 || p.clip_fraction >= 0.5)
    throw ConfigError("contrast_stretch: clip_fraction must be in [0, 0.5)");
  std::array<int64_t, 256> hist{};
  for (uint8_t v : img.data) ++hist[v];
  const double clip = p.clip_fraction * double(img.data.size());

  int lo = 0;
  for (int64_t cum = 0; lo < 256; ++lo) {
    cum += hist[lo];
    if (double(cum) >= clip) break;
  }
  int hi = 255;
  for (int64_t cum = 0; hi >= 0; --hi) {
    cum += hist[hi];
    if (double(cum) >= clip) break;
  }
  if (hi <= lo) return img;

  std::array<uint8_t, 256> lut;
  const double scale = 255.0 / double(hi - lo);
  for (int v = 0; v < 256; ++v)
    lut[v] = static_cast<uint8_t>(
        std::clamp(std::floor((v - lo) * scale + 0.5), 0.0, 255.0));

  GrayImage out(img.width, img.height);
  for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = lut[img.data[i]];
  return out;
}

BinaryMask detect_edges(const GrayImage& img) {
  BinaryMask mask(img.width, img.height);
  for (int y = 1; y < img.height - 1; ++y) {
    const uint8_t* r0 = img.row(y - 1);
    const uint8_t* r1 = img.row(y);
    const uint8_t* r2 = img.row(y + 1);
    for (int x = 1; x < img.width - 1; ++x) {
      const int neighbours = r0[x - 1] + r0[x] + r0[x + 1] + r1[x - 1] +
                             r1[x + 1] + r2[x - 1] + r2[x] + r2[x + 1];
      mask.at(y, x) = (8 * int(r1[x]) != neighbours) ? 1 : 0;
    }
  }
  return mask;
}

namespace {

BinaryMask dilate3x3(const BinaryMask& mask) {
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      uint8_t v = 0;
      for (int dy = -1; dy <= 1 && !v; ++dy)
        for (int dx = -1; dx <= 1 && !v; ++dx) {
          const int ny = y + dy, nx = x + dx;
          if (ny >= 0 && ny < mask.height && nx >= 0 && nx < mask.width)
            v = mask.at(ny, nx);
        }
      out.at(y, x) = v;
    }
  return out;
}

}  // namespace

GrayImage remove_hair(const GrayImage& img, PreprocessTrace* trace) {
  const BinaryMask fill = dilate3x3(detect_edges(img));
  GrayImage out = img;
  int count = 0;
  for (size_t i = 0; i < out.data.size(); ++i)
    if (fill.data[i]) {
      out.data[i] = 255;
      ++count;
    }
  if (trace) trace->edge_pixels = count;
  return out;
}

GrayImage remove_vignette(const GrayImage& img, const VignetteParams& p,
                          PreprocessTrace* trace) {
  if (img.width != img.height)
    throw DataError("remove_vignette: square image required");
  if (p.max_iterations < 1)
    throw ConfigError("remove_vignette: max_iterations must be >= 1");

  GrayImage out = img;
  const int h = img.height;
  const double cy = (h - 1) / 2.0, cx = (h - 1) / 2.0;

  for (int iter = 0; iter < p.max_iterations; ++iter) {
    const double radius = h / 2.0 - p.base_margin + iter * p.step;
    const double r2 = radius * radius;
    int64_t outer_sum = 0, outer_n = 0, inner_sum = 0, inner_n = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < h; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        if (d2 > r2) {
          outer_sum += out.at(y, x);
          ++outer_n;
        } else {
          inner_sum += out.at(y, x);
          ++inner_n;
        }
      }
    if (outer_n == 0 || inner_n == 0) continue;
    const double outer_mean = double(outer_sum) / double(outer_n);
    if (outer_mean < p.darkness_threshold) {
      const auto fill = static_cast<uint8_t>(std::clamp(
          std::floor(double(inner_sum) / double(inner_n) + 0.5), 0.0, 255.0));
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < h; ++x) {
          const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          if (d2 > r2) out.at(y, x) = fill;
        }
      if (trace) trace->vignette_iterations.push_back(iter);
    }
  }
  return out;
}

GrayImage preprocess_chain(const GrayImage& img, const ContrastParams& cp,
                           const VignetteParams& vp, PreprocessTrace* trace) {
  return remove_vignette(remove_hair(contrast_stretch(img, cp), trace), vp, trace);
}

}  // namespace lesionpipe
