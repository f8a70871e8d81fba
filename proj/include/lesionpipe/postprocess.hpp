#pragma once

#include "lesionpipe/image.hpp"

namespace lesionpipe {

// pixel = 1 iff lesion probability > tau (strict; exactly tau stays 0).
BinaryMask threshold_prob(const Raster& prob, double tau = 0.5);

struct LabeledComponents {
  int width = 0;
  int height = 0;
  std::vector<int32_t> labels;  // 0 = background, components 1..K in scan order

  struct Component {
    int64_t area = 0;
    double centroid_row = 0;
    double centroid_col = 0;
  };
  std::vector<Component> components;  // components[k-1] describes label k
};

// 8-connectivity labeling; labels assigned in row-major first-pixel order.
LabeledComponents connected_components(const BinaryMask& mask);

// Among the top-3 components by area (ties: smaller label), picks the one
// whose centroid lies furthest from the nearest image edge; ties again break
// toward the smaller label. Empty input gives an empty mask.
BinaryMask select_lesion(const LabeledComponents& comps);

// threshold + component selection in one call.
BinaryMask postprocess_mask(const Raster& prob, double tau, bool select_object);

}  // namespace lesionpipe
