#pragma once

#include <filesystem>
#include <string>

#include "lesionpipe/unet.hpp"

namespace lesionpipe {

// Table-1 ablation grid: A baseline, B +pre/post-processing, C +LBP,
// D +3-level wavelets. Pipeline switches derive from the scenario so the
// flag set can never drift out of sync.
enum class Scenario { A, B, C, D };

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);

enum class Profile { Paper, Toy };

struct ScenarioConfig {
  Scenario scenario = Scenario::B;
  int image_size = 216;  // prepared size before the border
  int border = 20;
  uint64_t seed = 1;
  int jobs = 1;

  // Dataset: a root directory with train/[val/]test subdirectories, or the
  // built-in synthetic generator when the root is empty.
  std::filesystem::path data_root;
  int synth_train = 60;
  int synth_test = 20;
  int synth_size = 64;

  std::filesystem::path out_dir = "out";

  UNetConfig net;
  TrainConfig train;

  int eval_batches = 72;
  int eval_batch_size = 16;

  bool preprocess_enabled() const { return scenario != Scenario::A; }
  bool lbp_enabled() const { return scenario == Scenario::C; }
  int wavelet_levels() const { return scenario == Scenario::D ? 3 : 0; }
  bool postprocess_enabled() const { return scenario != Scenario::A; }
  int channels() const {
    switch (scenario) {
      case Scenario::C: return 2;
      case Scenario::D: return 4;
      default: return 1;
    }
  }
  int net_input_size() const { return image_size + 2 * border; }

  void validate() const;
};

// Paper scale: 216+2*20 inputs, 3 levels, 64 filters, 20 epochs.
// Toy scale: 56+2*4 inputs, 2 levels, 8 filters, 10 epochs; runs on a desktop
// core in minutes.
ScenarioConfig profile_config(Profile profile);

// Profile selected by LESIONPIPE_PROFILE=paper|toy (default paper).
Profile profile_from_env();

// Minimal TOML-style key/value reader ([section] headers, key = value,
// '#' comments, quoted strings, ints, floats, bools).
ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ScenarioConfig& cfg);

}  // namespace lesionpipe
