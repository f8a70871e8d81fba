#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lesionpipe/net_ops.hpp"
#include "lesionpipe/rng.hpp"
#include "lesionpipe/tensor.hpp"

namespace lesionpipe {

struct UNetConfig {
  int levels = 3;        // resolution levels (levels-1 pool/upsample stages)
  int base_filters = 64; // filters at the top level, doubling per level
  int conv_size = 3;
  int pool_size = 2;
  int in_channels = 1;
  int out_classes = 2;

  int filters_at(int level) const { return base_filters << level; }
  int pool_factor() const {
    int f = 1;
    for (int i = 1; i < levels; ++i) f *= pool_size;
    return f;
  }
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 20;
  int iterations_per_epoch = 32;
  int batch_size = 16;
  uint64_t rng_seed = 1;

  void validate() const;
};

template <typename S>
struct ConvParam {
  Buf<S> w, b;
};

template <typename S>
struct BnParam {
  Buf<S> gamma, beta, run_mean, run_var;
};

template <typename S>
struct UNetParams {
  UNetConfig cfg;
  struct Down {
    ConvParam<S> c1, c2;
    BnParam<S> bn1, bn2;
  };
  struct Up {
    ConvParam<S> upconv;  // 2x2 transposed conv
    ConvParam<S> c1, c2;
    BnParam<S> bn1, bn2;
  };
  std::vector<Down> down;  // cfg.levels entries; last one is the bottom
  std::vector<Up> up;      // cfg.levels - 1 entries, deepest first
  ConvParam<S> head;       // 1x1 projection to out_classes
  int64_t step = 0;        // Adam step counter
};

enum class ParamKind { Learnable, RunningStat };

// Enumerates every parameter buffer in the fixed order used by weight files,
// Adam state and initialization.
template <typename S>
void visit_params(UNetParams<S>& p,
                  const std::function<void(const std::string&, Buf<S>&, ParamKind)>& f);
template <typename S>
void visit_params(const UNetParams<S>& p,
                  const std::function<void(const std::string&, const Buf<S>&, ParamKind)>& f);

// Allocates parameter buffers; weights get Kaiming-scaled normals
// (std = sqrt(2 / fan_in)) from the seeded generator, biases/beta zero,
// gamma one, running stats (0, 1).
template <typename S>
UNetParams<S> init_params(const UNetConfig& cfg, uint64_t seed);

// Zero-filled parameter-shaped container (gradients, Adam moments).
template <typename S>
UNetParams<S> zeros_like(const UNetParams<S>& p);

template <typename S>
struct UNetCache {
  struct Block {
    Tensor4<S> conv_in;   // what the convolution consumed
    Tensor4<S> conv_out;  // pre-batch-norm
    net::BnCache<S> bn;
    Tensor4<S> out;       // post-ReLU
  };
  struct DownLevel {
    Block b1, b2;
    Tensor4<S> pooled;
  };
  struct UpLevel {
    Tensor4<S> up_out;  // transposed-conv output
    Tensor4<S> concat;
    Block b1, b2;
  };
  std::vector<DownLevel> down;
  std::vector<UpLevel> up;
  Tensor4<S> logits, probs;
  bool train_mode = false;
};

// Runs the contracting/expanding forward pass; probabilities land in
// cache.probs (per-pixel softmax, channel 1 = lesion). Train mode normalizes
// with batch statistics and records the running-stat update in the cache;
// apply_running_stats commits it.
template <typename S>
void unet_forward(const UNetParams<S>& p, const Tensor4<S>& x, bool train,
                  UNetCache<S>& cache);

template <typename S>
void apply_running_stats(UNetParams<S>& p, const UNetCache<S>& cache);

// Reverse-mode gradients for every learnable parameter; grads must be
// parameter-shaped (see zeros_like) and is accumulated into.
template <typename S>
void unet_backward(const UNetParams<S>& p, const UNetCache<S>& cache,
                   const Tensor4<S>& dlogits, UNetParams<S>& grads);

// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <typename S>
void adam_step(UNetParams<S>& p, const UNetParams<S>& grads, UNetParams<S>& m,
               UNetParams<S>& v, const TrainConfig& cfg);

// Infer-mode forward for one sample; returns the softmax probabilities.
template <typename S>
Tensor4<S> unet_predict(const UNetParams<S>& p, const Tensor4<S>& x);

extern template struct UNetParams<float>;
extern template struct UNetParams<double>;

}  // namespace lesionpipe
