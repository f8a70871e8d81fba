#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lesionpipe/image.hpp"
#include "lesionpipe/rng.hpp"

namespace lesionpipe {

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path mask;
  bool test = false;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> rejected;  // files without a partner, with reason

  int train_count() const;
  int test_count() const;
};

// Scans root/train, root/val and root/test for <id>.png / <id>_mask.png
// pairs; validation folds into train. A root without those subdirectories is
// treated as a single train directory. Unpaired files land in `rejected`.
DatasetManifest ingest(const std::filesystem::path& root);

// One synthetic dermoscopy-like sample: a darker elliptical lesion on a
// brighter skin background with optional hair strokes, vignette ring and a
// global contrast squeeze. The mask is the exact rasterized ellipse.
struct SynthSample {
  GrayImage image;
  BinaryMask mask;
  bool has_hair = false;
  bool has_vignette = false;
  bool low_contrast = false;
};

struct SynthParams {
  int size = 64;
  double p_hair = 0.5;
  double p_vignette = 0.4;
  double p_lowcontrast = 0.35;
};

SynthSample synth_sample(Rng& rng, const SynthParams& params);

// Writes n PNG pairs under root/train and root/test (the trailing n_test go
// to test) and returns the matching manifest. Deterministic per seed.
DatasetManifest synth_dataset(const std::filesystem::path& root, int n,
                              uint64_t seed, const SynthParams& params,
                              int n_test = 0);

}  // namespace lesionpipe
