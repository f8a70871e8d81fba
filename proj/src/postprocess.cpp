#include "lesionpipe/postprocess.hpp"

#include <algorithm>
#include <numeric>

namespace lesionpipe {

BinaryMask threshold_prob(const Raster& prob, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw ConfigError("threshold_prob: tau must be in (0, 1)");
  BinaryMask mask(prob.width, prob.height);
  for (size_t i = 0; i < prob.data.size(); ++i)
    mask.data[i] = prob.data[i] > tau ? 1 : 0;
  return mask;
}

LabeledComponents connected_components(const BinaryMask& mask) {
  LabeledComponents out;
  out.width = mask.width;
  out.height = mask.height;
  out.labels.assign(size_t(mask.width) * mask.height, 0);

  std::vector<size_t> stack;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      const size_t start = size_t(y) * mask.width + x;
      if (!mask.data[start] || out.labels[start]) continue;
      const int32_t label = int32_t(out.components.size()) + 1;
      LabeledComponents::Component comp;
      int64_t sum_row = 0, sum_col = 0;
      stack.push_back(start);
      out.labels[start] = label;
      while (!stack.empty()) {
        const size_t idx = stack.back();
        stack.pop_back();
        const int cy = int(idx / mask.width), cx = int(idx % mask.width);
        ++comp.area;
        sum_row += cy;
        sum_col += cx;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = cy + dy, nx = cx + dx;
            if (ny < 0 || ny >= mask.height || nx < 0 || nx >= mask.width) continue;
            const size_t nidx = size_t(ny) * mask.width + nx;
            if (mask.data[nidx] && !out.labels[nidx]) {
              out.labels[nidx] = label;
              stack.push_back(nidx);
            }
          }
      }
      comp.centroid_row = double(sum_row) / double(comp.area);
      comp.centroid_col = double(sum_col) / double(comp.area);
      out.components.push_back(comp);
    }
  return out;
}

BinaryMask select_lesion(const LabeledComponents& comps) {
  BinaryMask out(comps.width, comps.height);
  if (comps.components.empty()) return out;

  std::vector<int> order(comps.components.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return comps.components[a].area > comps.components[b].area;
  });
  const size_t top = std::min<size_t>(3, order.size());

  const auto edge_distance = [&](const LabeledComponents::Component& c) {
    return std::min(std::min(c.centroid_row, c.centroid_col),
                    std::min(comps.height - 1 - c.centroid_row,
                             comps.width - 1 - c.centroid_col));
  };

  int winner = order[0];
  double best = edge_distance(comps.components[order[0]]);
  for (size_t i = 1; i < top; ++i) {
    const double d = edge_distance(comps.components[order[i]]);
    if (d > best || (d == best && order[i] < winner)) {
      winner = order[i];
      best = d;
    }
  }

  const int32_t label = winner + 1;
  for (size_t i = 0; i < comps.labels.size(); ++i)
    out.data[i] = comps.labels[i] == label ? 1 : 0;
  return out;
}

BinaryMask postprocess_mask(const Raster& prob, double tau, bool select_object) {
  BinaryMask mask = threshold_prob(prob, tau);
  if (select_object) mask = select_lesion(connected_components(mask));
  return mask;
}

}  // namespace lesionpipe
