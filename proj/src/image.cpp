#include "lesionpipe/image.hpp"

#include <algorithm>
#include <cmath>

namespace lesionpipe {

GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.width, img.height);
  const uint8_t* s = img.data.data();
  for (size_t i = 0, n = size_t(img.width) * img.height; i < n; ++i, s += 3) {
    const double y = 0.299 * s[0] + 0.587 * s[1] + 0.114 * s[2];
    out.data[i] = static_cast<uint8_t>(std::clamp(std::floor(y + 0.5), 0.0, 255.0));
  }
  return out;
}

namespace {

// Source coordinate for output index i on the aligned (n-1)/(out-1) grid.
inline double src_coord(int i, int in_size, int out_size) {
  if (out_size == 1) return (in_size - 1) / 2.0;
  return double(i) * double(in_size - 1) / double(out_size - 1);
}

template <typename Img, typename Value, typename Round>
Img resize_bilinear_impl(const Img& img, int w, int h, Round round) {
  if (w < 1 || h < 1) throw DataError("resize: target dimensions must be >= 1");
  Img out(w, h);
  for (int y = 0; y < h; ++y) {
    const double sy = src_coord(y, img.height, h);
    const int y0 = std::min(int(sy), img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < w; ++x) {
      const double sx = src_coord(x, img.width, w);
      const int x0 = std::min(int(sx), img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      const double v = (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
                       fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
      out.at(y, x) = static_cast<Value>(round(v));
    }
  }
  return out;
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, int w, int h) {
  return resize_bilinear_impl<GrayImage, uint8_t>(img, w, h, [](double v) {
    return std::clamp(std::floor(v + 0.5), 0.0, 255.0);
  });
}

Raster resize_bilinear(const Raster& img, int w, int h) {
  return resize_bilinear_impl<Raster, double>(img, w, h, [](double v) { return v; });
}

BinaryMask resize_nearest(const BinaryMask& mask, int w, int h) {
  if (w < 1 || h < 1) throw DataError("resize: target dimensions must be >= 1");
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::clamp(int(std::floor(src_coord(y, mask.height, h) + 0.5)), 0,
                              mask.height - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(int(std::floor(src_coord(x, mask.width, w) + 0.5)), 0,
                                mask.width - 1);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

namespace {

// Mirror index without repeating the edge sample; valid for |i| <= n-1.
inline int reflect(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

template <typename Img>
Img add_border_impl(const Img& img, int t) {
  if (t < 0) throw DataError("add_border: negative border");
  if (t >= std::min(img.width, img.height))
    throw DataError("add_border: border exceeds image size, reflection undefined");
  Img out(img.width + 2 * t, img.height + 2 * t);
  for (int y = 0; y < out.height; ++y) {
    const int sy = reflect(y - t, img.height);
    for (int x = 0; x < out.width; ++x)
      out.at(y, x) = img.at(sy, reflect(x - t, img.width));
  }
  return out;
}

template <typename Img>
Img crop_border_impl(const Img& img, int t) {
  if (t < 0) throw DataError("crop_border: negative border");
  if (img.width <= 2 * t || img.height <= 2 * t)
    throw DataError("crop_border: image too small for requested border");
  Img out(img.width - 2 * t, img.height - 2 * t);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(y, x) = img.at(y + t, x + t);
  return out;
}

}  // namespace

GrayImage add_border(const GrayImage& img, int t) { return add_border_impl(img, t); }
Raster add_border(const Raster& img, int t) { return add_border_impl(img, t); }

GrayImage crop_border(const GrayImage& img, int t) { return crop_border_impl(img, t); }
BinaryMask crop_border(const BinaryMask& mask, int t) { return crop_border_impl(mask, t); }

template <typename T>
void apply_geom(GeomOp op, const T* src, T* dst, int w, int h) {
  if ((op == GeomOp::Rot90 || op == GeomOp::Rot270) && w != h)
    throw DataError("rot90/rot270 requires a square raster");
  auto src_at = [&](int y, int x) { return src[size_t(y) * w + x]; };
  for (int y = 0; y < h; ++y) {
    T* d = dst + size_t(y) * w;
    switch (op) {
      case GeomOp::Identity:
        for (int x = 0; x < w; ++x) d[x] = src_at(y, x);
        break;
      case GeomOp::Rot90:
        for (int x = 0; x < w; ++x) d[x] = src_at(x, w - 1 - y);
        break;
      case GeomOp::Rot180:
        for (int x = 0; x < w; ++x) d[x] = src_at(h - 1 - y, w - 1 - x);
        break;
      case GeomOp::Rot270:
        for (int x = 0; x < w; ++x) d[x] = src_at(h - 1 - x, y);
        break;
      case GeomOp::MirrorX:
        for (int x = 0; x < w; ++x) d[x] = src_at(h - 1 - y, x);
        break;
      case GeomOp::MirrorY:
        for (int x = 0; x < w; ++x) d[x] = src_at(y, w - 1 - x);
        break;
    }
  }
}

template void apply_geom<uint8_t>(GeomOp, const uint8_t*, uint8_t*, int, int);
template void apply_geom<float>(GeomOp, const float*, float*, int, int);
template void apply_geom<double>(GeomOp, const double*, double*, int, int);

GrayImage apply_geom(GeomOp op, const GrayImage& img) {
  GrayImage out(img.width, img.height);
  apply_geom(op, img.data.data(), out.data.data(), img.width, img.height);
  return out;
}

BinaryMask apply_geom(GeomOp op, const BinaryMask& mask) {
  BinaryMask out(mask.width, mask.height);
  apply_geom(op, mask.data.data(), out.data.data(), mask.width, mask.height);
  return out;
}

std::vector<std::pair<GrayImage, BinaryMask>> augment_six(const GrayImage& img,
                                                          const BinaryMask& mask) {
  if (img.width != mask.width || img.height != mask.height)
    throw DataError("augment_six: image/mask dimension mismatch");
  if (img.width != img.height)
    throw DataError("augment_six: image must be square");
  std::vector<std::pair<GrayImage, BinaryMask>> out;
  out.reserve(6);
  for (GeomOp op : kAugmentOps)
    out.emplace_back(apply_geom(op, img), apply_geom(op, mask));
  return out;
}

}  // namespace lesionpipe
