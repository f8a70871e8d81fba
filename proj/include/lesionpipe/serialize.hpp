#pragma once

#include <filesystem>
#include <optional>

#include "lesionpipe/transforms.hpp"
#include "lesionpipe/unet.hpp"

namespace lesionpipe {

// "LPFS", version u16, channels u16, width u32, height u32, little-endian;
// payload channel-major f32.
void write_feature_stack(const std::filesystem::path& path, const FeatureStack& fs);
FeatureStack read_feature_stack(const std::filesystem::path& path);

// Adam accumulators travel with the weights when present so training can
// resume exactly.
struct AdamState {
  UNetParams<float> m, v;
  int64_t step = 0;
};

// "LPWT", version u16, config (six u16 fields), param count u32, then per
// parameter: name length u16, name, rank u8, dims u32[], f32 payload.
// A trailing flag byte marks optional Adam state (step u64, then m and v
// payloads in parameter order).
void save_weights(const std::filesystem::path& path, const UNetParams<float>& params,
                  const AdamState* adam = nullptr);

struct LoadedWeights {
  UNetParams<float> params;
  std::optional<AdamState> adam;
};

LoadedWeights load_weights(const std::filesystem::path& path);

}  // namespace lesionpipe
