#include "lesionpipe/dataset.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "lesionpipe/png_io.hpp"

namespace lesionpipe {

int DatasetManifest::train_count() const {
  return int(std::count_if(entries.begin(), entries.end(),
                           [](const ManifestEntry& e) { return !e.test; }));
}

int DatasetManifest::test_count() const {
  return int(entries.size()) - train_count();
}

namespace {

constexpr const char* kMaskSuffix = "_mask";

void scan_dir(const std::filesystem::path& dir, bool test, DatasetManifest& out) {
  std::map<std::string, std::filesystem::path> images, masks;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.ends_with(kMaskSuffix)) {
      const std::string id = stem.substr(0, stem.size() - 5);
      if (!masks.emplace(id, entry.path()).second)
        throw DataError("ambiguous mask for id '" + id + "' in " + dir.string());
    } else {
      if (!images.emplace(stem, entry.path()).second)
        throw DataError("ambiguous image for id '" + stem + "' in " + dir.string());
    }
  }
  for (const auto& [id, path] : images) {
    auto it = masks.find(id);
    if (it == masks.end()) {
      out.rejected.push_back(path.string() + ": missing mask " + id + "_mask.png");
      continue;
    }
    out.entries.push_back({id, path, it->second, test});
    masks.erase(it);
  }
  for (const auto& [id, path] : masks)
    out.rejected.push_back(path.string() + ": mask without image " + id + ".png");
}

}  // namespace

DatasetManifest ingest(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    throw DataError("dataset root " + root.string() + " is not a directory");

  DatasetManifest manifest;
  const auto train_dir = root / "train";
  const auto val_dir = root / "val";
  const auto test_dir = root / "test";

  if (std::filesystem::is_directory(train_dir) ||
      std::filesystem::is_directory(test_dir)) {
    if (std::filesystem::is_directory(train_dir))
      scan_dir(train_dir, false, manifest);
    if (std::filesystem::is_directory(val_dir))
      scan_dir(val_dir, false, manifest);  // validation folds into train
    if (std::filesystem::is_directory(test_dir)) scan_dir(test_dir, true, manifest);
  } else {
    scan_dir(root, false, manifest);
  }

  if (manifest.entries.empty())
    throw DataError("no image/mask pairs found under " + root.string());

  std::set<std::string> seen;
  for (const auto& e : manifest.entries)
    if (!seen.insert((e.test ? "test/" : "train/") + e.id).second)
      throw DataError("duplicate id '" + e.id + "' in split");
  return manifest;
}

namespace {

void draw_thick_line(GrayImage& img, double x0, double y0, double x1, double y1,
                     int thickness, uint8_t value) {
  const int steps = int(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) * 2 + 1;
  for (int s = 0; s <= steps; ++s) {
    const double t = double(s) / steps;
    const int cx = int(x0 + (x1 - x0) * t + 0.5);
    const int cy = int(y0 + (y1 - y0) * t + 0.5);
    for (int dy = 0; dy < thickness; ++dy)
      for (int dx = 0; dx < thickness; ++dx) {
        const int y = cy + dy, x = cx + dx;
        if (y >= 0 && y < img.height && x >= 0 && x < img.width)
          img.at(y, x) = value;
      }
  }
}

}  // namespace

SynthSample synth_sample(Rng& rng, const SynthParams& params) {
  const int s = params.size;
  SynthSample sample;
  sample.image = GrayImage(s, s);
  sample.mask = BinaryMask(s, s);

  // Skin background: bright with a gentle gradient and mild noise.
  const double base = rng.uniform(150.0, 215.0);
  const double gx = rng.uniform(-12.0, 12.0), gy = rng.uniform(-12.0, 12.0);

  // Lesion ellipse: darker, roughly centered, random pose.
  const double cx = s / 2.0 + rng.uniform(-s / 8.0, s / 8.0);
  const double cy = s / 2.0 + rng.uniform(-s / 8.0, s / 8.0);
  const double ax = rng.uniform(s / 6.0, s / 3.4);
  const double ay = rng.uniform(s / 6.0, s / 3.4);
  const double theta = rng.uniform(0.0, 3.141592653589793);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double lesion = base - rng.uniform(55.0, 95.0);

  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      const double u = (x - cx) * ct + (y - cy) * st;
      const double v = -(x - cx) * st + (y - cy) * ct;
      const bool inside = (u * u) / (ax * ax) + (v * v) / (ay * ay) <= 1.0;
      double value = inside ? lesion : base;
      value += gx * (double(x) / s - 0.5) + gy * (double(y) / s - 0.5);
      value += rng.normal(0.0, 3.0);
      sample.image.at(y, x) = uint8_t(std::clamp(value, 0.0, 255.0));
      sample.mask.at(y, x) = inside ? 1 : 0;
    }

  sample.low_contrast = rng.bernoulli(params.p_lowcontrast);
  if (sample.low_contrast) {
    // Global squeeze toward the mid range.
    for (uint8_t& v : sample.image.data)
      v = uint8_t(std::clamp(110.0 + (double(v) - 128.0) * 0.35, 0.0, 255.0));
  }

  sample.has_hair = rng.bernoulli(params.p_hair);
  if (sample.has_hair) {
    const int strokes = 1 + int(rng.uniform_int(3));
    for (int i = 0; i < strokes; ++i) {
      const int thickness = 1 + int(rng.uniform_int(2));
      const auto dark = uint8_t(rng.uniform(5.0, 55.0));
      double x0 = rng.uniform(0.0, s - 1.0), y0 = rng.uniform(0.0, s - 1.0);
      for (int seg = 0; seg < 3; ++seg) {
        const double x1 = rng.uniform(0.0, s - 1.0);
        const double y1 = rng.uniform(0.0, s - 1.0);
        draw_thick_line(sample.image, x0, y0, x1, y1, thickness, dark);
        x0 = x1;
        y0 = y1;
      }
    }
  }

  sample.has_vignette = rng.bernoulli(params.p_vignette);
  if (sample.has_vignette) {
    const double radius = rng.uniform(0.40, 0.47) * s;
    const double r2 = radius * radius;
    const auto dark = uint8_t(rng.uniform_int(4));
    const double mx = (s - 1) / 2.0;
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x)
        if ((y - mx) * (y - mx) + (x - mx) * (x - mx) > r2)
          sample.image.at(y, x) = dark;
  }
  return sample;
}

DatasetManifest synth_dataset(const std::filesystem::path& root, int n,
                              uint64_t seed, const SynthParams& params, int n_test) {
  if (n < 1) throw ConfigError("synth_dataset: n must be >= 1");
  if (n_test < 0 || n_test > n)
    throw ConfigError("synth_dataset: n_test must be in [0, n]");

  std::filesystem::create_directories(root / "train");
  if (n_test > 0) std::filesystem::create_directories(root / "test");

  Rng rng(derive_seed(seed, 0x5Du));
  DatasetManifest manifest;
  for (int i = 0; i < n; ++i) {
    const SynthSample sample = synth_sample(rng, params);
    const bool test = i >= n - n_test;
    char id[16];
    std::snprintf(id, sizeof id, "synth%04d", i);
    const auto dir = root / (test ? "test" : "train");
    const auto image_path = dir / (std::string(id) + ".png");
    const auto mask_path = dir / (std::string(id) + "_mask.png");
    write_png(image_path, sample.image);
    write_png(mask_path, sample.mask);
    manifest.entries.push_back({id, image_path, mask_path, test});
  }
  return manifest;
}

}  // namespace lesionpipe
