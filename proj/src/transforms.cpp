#include "lesionpipe/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace lesionpipe {

LbpMap lbp_map(const GrayImage& img) {
  if (img.width < 3 || img.height < 3)
    throw DataError("lbp_map: image must be at least 3x3");
  LbpMap out{img.width, img.height,
             std::vector<uint8_t>(size_t(img.width) * img.height, 0)};
  // Clockwise ring from the top-left neighbour.
  static constexpr int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  static constexpr int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      const uint8_t c = img.at(y, x);
      uint8_t code = 0;
      for (int i = 0; i < 8; ++i)
        code = uint8_t(code << 1) | uint8_t(img.at(y + dy[i], x + dx[i]) >= c);
      out.codes[size_t(y) * img.width + x] = code;
    }
  return out;
}

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

Raster pad_to_even(const Raster& img, bool& padded_x, bool& padded_y) {
  padded_x = img.width % 2 != 0;
  padded_y = img.height % 2 != 0;
  if (!padded_x && !padded_y) return img;
  Raster out(img.width + (padded_x ? 1 : 0), img.height + (padded_y ? 1 : 0));
  for (int y = 0; y < out.height; ++y) {
    const int sy = std::min(y, img.height - 1);
    for (int x = 0; x < out.width; ++x)
      out.at(y, x) = img.at(sy, std::min(x, img.width - 1));
  }
  return out;
}

}  // namespace

Subbands dwt2_haar(const Raster& img) {
  if (img.width < 1 || img.height < 1) throw DataError("dwt2_haar: empty raster");
  Subbands sb;
  const Raster src = pad_to_even(img, sb.padded_x, sb.padded_y);
  const int hw = src.width / 2, hh = src.height / 2;
  sb.ll = Raster(hw, hh);
  sb.lh = Raster(hw, hh);
  sb.hl = Raster(hw, hh);
  sb.hh = Raster(hw, hh);
  for (int y = 0; y < hh; ++y)
    for (int x = 0; x < hw; ++x) {
      const double a = src.at(2 * y, 2 * x), b = src.at(2 * y, 2 * x + 1);
      const double c = src.at(2 * y + 1, 2 * x), d = src.at(2 * y + 1, 2 * x + 1);
      // Rows first ((a,b) and (c,d)), then columns; each tap 1/sqrt(2).
      sb.ll.at(y, x) = (a + b + c + d) * 0.5;
      sb.lh.at(y, x) = (a - b + c - d) * 0.5;
      sb.hl.at(y, x) = (a + b - c - d) * 0.5;
      sb.hh.at(y, x) = (a - b - c + d) * 0.5;
    }
  return sb;
}

Raster idwt2_haar(const Subbands& sb) {
  const int hw = sb.ll.width, hh = sb.ll.height;
  Raster out(hw * 2, hh * 2);
  for (int y = 0; y < hh; ++y)
    for (int x = 0; x < hw; ++x) {
      const double ll = sb.ll.at(y, x), lh = sb.lh.at(y, x);
      const double hl = sb.hl.at(y, x), hh_ = sb.hh.at(y, x);
      out.at(2 * y, 2 * x) = (ll + lh + hl + hh_) * 0.5;
      out.at(2 * y, 2 * x + 1) = (ll - lh + hl - hh_) * 0.5;
      out.at(2 * y + 1, 2 * x) = (ll + lh - hl - hh_) * 0.5;
      out.at(2 * y + 1, 2 * x + 1) = (ll - lh - hl + hh_) * 0.5;
    }
  if (sb.padded_x || sb.padded_y) {
    Raster cropped(out.width - (sb.padded_x ? 1 : 0),
                   out.height - (sb.padded_y ? 1 : 0));
    for (int y = 0; y < cropped.height; ++y)
      for (int x = 0; x < cropped.width; ++x) cropped.at(y, x) = out.at(y, x);
    return cropped;
  }
  return out;
}

Raster to_raster(const GrayImage& img) {
  Raster out(img.width, img.height);
  for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = double(img.data[i]);
  return out;
}

WaveletPyramid wavelet_pyramid(const Raster& img, int levels) {
  if (levels < 1) throw ConfigError("wavelet_pyramid: levels must be >= 1");
  int w = img.width, h = img.height;
  for (int l = 0; l < levels; ++l) {
    if (w < 2 || h < 2)
      throw DataError("wavelet_pyramid: image too small for " +
                      std::to_string(levels) + " levels");
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  WaveletPyramid pyr;
  pyr.levels.reserve(levels);
  const Raster* cur = &img;
  for (int l = 0; l < levels; ++l) {
    pyr.levels.push_back(dwt2_haar(*cur));
    cur = &pyr.levels.back().ll;
  }
  return pyr;
}

WaveletPyramid wavelet_pyramid(const GrayImage& img, int levels) {
  return wavelet_pyramid(to_raster(img), levels);
}

Raster inverse_pyramid(const WaveletPyramid& pyr) {
  if (pyr.levels.empty()) throw DataError("inverse_pyramid: empty pyramid");
  Raster cur = pyr.levels.back().ll;
  for (auto it = pyr.levels.rbegin(); it != pyr.levels.rend(); ++it) {
    Subbands sb = *it;
    sb.ll = std::move(cur);
    cur = idwt2_haar(sb);
  }
  return cur;
}

namespace {

// Min-max to [0, 1]; a constant raster maps to all zeros.
void normalize_unit(Raster& r) {
  const auto [mn, mx] = std::minmax_element(r.data.begin(), r.data.end());
  const double lo = *mn, hi = *mx;
  if (hi <= lo) {
    std::fill(r.data.begin(), r.data.end(), 0.0);
    return;
  }
  const double inv = 1.0 / (hi - lo);
  for (double& v : r.data) v = (v - lo) * inv;
}

void fill_channel(FeatureStack& stack, int ch, const Raster& r) {
  float* dst = stack.channel(ch);
  for (size_t i = 0; i < r.data.size(); ++i) dst[i] = float(r.data[i]);
}

}  // namespace

FeatureStack build_input_stack(const GrayImage& pre, const ScenarioConfig& cfg) {
  const int size = cfg.net_input_size();
  if (pre.width != size || pre.height != size)
    throw DataError("build_input_stack: expected " + std::to_string(size) + "x" +
                    std::to_string(size) + " prepared image");
  FeatureStack stack(cfg.channels(), size, size);

  float* gray = stack.channel(0);
  for (size_t i = 0; i < pre.data.size(); ++i) gray[i] = pre.data[i] / 255.0f;

  if (cfg.lbp_enabled()) {
    const LbpMap lbp = lbp_map(pre);
    float* dst = stack.channel(1);
    for (size_t i = 0; i < lbp.codes.size(); ++i) dst[i] = lbp.codes[i] / 255.0f;
  }

  if (cfg.wavelet_levels() > 0) {
    const WaveletPyramid pyr = wavelet_pyramid(pre, cfg.wavelet_levels());
    for (int l = 0; l < cfg.wavelet_levels(); ++l) {
      Raster approx = pyr.approximation(l);
      normalize_unit(approx);
      approx = resize_bilinear(approx, cfg.image_size, cfg.image_size);
      approx = add_border(approx, cfg.border);
      fill_channel(stack, 1 + l, approx);
    }
  }
  return stack;
}

FeatureStack apply_geom(GeomOp op, const FeatureStack& stack) {
  FeatureStack out(stack.channels, stack.width, stack.height);
  for (int c = 0; c < stack.channels; ++c)
    apply_geom(op, stack.channel(c), out.channel(c), stack.width, stack.height);
  return out;
}

}  // namespace lesionpipe
