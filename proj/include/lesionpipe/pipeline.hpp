#pragma once

#include "lesionpipe/config.hpp"
#include "lesionpipe/dataset.hpp"
#include "lesionpipe/eval.hpp"
#include "lesionpipe/postprocess.hpp"
#include "lesionpipe/preprocess.hpp"
#include "lesionpipe/serialize.hpp"
#include "lesionpipe/transforms.hpp"

namespace lesionpipe {

// Geometric preparation: grayscale input resized to image_size with a
// mirror border of `border` pixels on every side.
GrayImage prepare_image(const GrayImage& gray, int image_size, int border);

// Ground truth stays at image_size (no border); nearest keeps it binary.
BinaryMask prepare_mask(const BinaryMask& mask, int image_size);

// One network-ready sample; target is at image_size (the loss crops the
// network output by `border` before comparing).
struct PreparedSample {
  std::string id;
  FeatureStack stack;
  BinaryMask target;
  bool test = false;
};

// Ordered stage plan for a scenario (dry-run output).
std::vector<std::string> plan_stages(const ScenarioConfig& cfg);

// Loads, prepares, pre-processes (per scenario), stacks and six-way augments
// the manifest. Runs the per-image work across `cfg.jobs` threads.
std::vector<PreparedSample> prepare_dataset(const DatasetManifest& manifest,
                                            const ScenarioConfig& cfg);

struct TrainHistoryRow {
  int epoch = 0;
  int iteration = 0;
  double loss = 0;
  double batch_jaccard = 0;
};

struct TrainOutput {
  UNetParams<float> params;
  AdamState adam;
  std::vector<TrainHistoryRow> history;
  double final_train_jaccard = 0;
};

// Seeded training per the epoch/iteration/batch protocol; deterministic for
// a given seed. The reported training Jaccard comes from an infer-mode pass
// over the distinct images sampled in the last epoch, using the scenario's
// mask pipeline.
TrainOutput train_network(const std::vector<const PreparedSample*>& train_set,
                          const ScenarioConfig& cfg);

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<TrainHistoryRow>& history);

// Infer-mode lesion probability (channel 1), border-cropped to image_size.
Raster predict_prob(const UNetParams<float>& params, const FeatureStack& stack,
                    int border);

// Scenario mask pipeline: threshold at tau, object selection for B-D.
BinaryMask finalize_mask(const Raster& prob, const ScenarioConfig& cfg,
                         double tau = 0.5);

struct ScenarioResult {
  EvalReport report;
  std::filesystem::path weights_path;
  std::filesystem::path history_path;
  std::filesystem::path report_path;
  std::filesystem::path masks_dir;
};

// Full Figure-4 pass: prepare -> (preprocess) -> (transforms) -> augment ->
// train -> predict -> (postprocess) -> evaluate, writing weights, history,
// predicted masks and the evaluation CSV under cfg.out_dir.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

// Runs each config (same dataset and seed) and renders the Table-1 shaped
// comparison.
std::string compare_scenarios(const std::vector<ScenarioConfig>& cfgs);

// Red-contour overlay of a mask on a grayscale image.
RgbImage contour_overlay(const GrayImage& img, const BinaryMask& mask);

}  // namespace lesionpipe
