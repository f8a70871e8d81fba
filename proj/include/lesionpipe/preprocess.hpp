#pragma once

#include "lesionpipe/image.hpp"

namespace lesionpipe {

struct ContrastParams {
  double clip_fraction = 0.02;  // histogram mass clipped at each tail
};

struct VignetteParams {
  int max_iterations = 10;
  int base_margin = 20;  // pixels
  int step = 5;          // pixels per iteration
  double darkness_threshold = 6.0;
};

// Per-image record of which pre-processing steps fired.
struct PreprocessTrace {
  int edge_pixels = 0;                   // pixels whitened by hair removal
  std::vector<int> vignette_iterations;  // iteration indices that filled a ring
};

// Percentile histogram stretch: the darkest/lightest clip_fraction of pixels
// set the cut-offs, everything remaps linearly onto [0, 255]. Degenerate
// histograms (hi <= lo) pass through unchanged.
GrayImage contrast_stretch(const GrayImage& img, const ContrastParams& p = {});

// 3x3 high-pass (center 8, neighbours -1); a pixel is an edge iff the
// response is non-zero, so both sides of a step are marked. The 1-pixel
// image border is always 0.
BinaryMask detect_edges(const GrayImage& img);

// Edge mask dilated by one pixel (3x3) and filled with white.
GrayImage remove_hair(const GrayImage& img, PreprocessTrace* trace = nullptr);

// Figure-3 style ring correction: for each iteration the pixels outside a
// growing centered circle are replaced by the center mean whenever their own
// mean falls below the darkness threshold. Corrections compound. Square
// images only.
GrayImage remove_vignette(const GrayImage& img, const VignetteParams& p = {},
                          PreprocessTrace* trace = nullptr);

// stretch -> hair -> vignette
GrayImage preprocess_chain(const GrayImage& img, const ContrastParams& cp = {},
                           const VignetteParams& vp = {},
                           PreprocessTrace* trace = nullptr);

}  // namespace lesionpipe
