#include "lesionpipe/unet.hpp"

#include <cmath>

namespace lesionpipe {

void UNetConfig::validate() const {
  if (levels < 2) throw ConfigError("unet: levels must be >= 2");
  if (base_filters < 1) throw ConfigError("unet: base_filters must be >= 1");
  if (conv_size % 2 == 0 || conv_size < 1)
    throw ConfigError("unet: conv_size must be odd");
  if (pool_size != 2)
    throw ConfigError("unet: only 2x2 pooling is supported");
  if (in_channels < 1) throw ConfigError("unet: in_channels must be >= 1");
  if (out_classes != 2) throw ConfigError("unet: out_classes must be 2");
}

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw ConfigError("train: learning_rate must be > 0");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
    throw ConfigError("train: betas must be in [0, 1)");
  if (epochs < 1 || iterations_per_epoch < 1 || batch_size < 1)
    throw ConfigError("train: epochs/iterations/batch_size must be >= 1");
}

namespace {

template <typename S, typename P, typename F>
void visit_impl(P& p, F&& f) {
  const auto conv = [&](const std::string& name, auto& c) {
    f(name + ".w", c.w, ParamKind::Learnable);
    f(name + ".b", c.b, ParamKind::Learnable);
  };
  const auto bn = [&](const std::string& name, auto& b) {
    f(name + ".gamma", b.gamma, ParamKind::Learnable);
    f(name + ".beta", b.beta, ParamKind::Learnable);
    f(name + ".mean", b.run_mean, ParamKind::RunningStat);
    f(name + ".var", b.run_var, ParamKind::RunningStat);
  };
  for (size_t l = 0; l < p.down.size(); ++l) {
    const std::string base = "down" + std::to_string(l);
    conv(base + ".conv1", p.down[l].c1);
    bn(base + ".bn1", p.down[l].bn1);
    conv(base + ".conv2", p.down[l].c2);
    bn(base + ".bn2", p.down[l].bn2);
  }
  for (size_t l = 0; l < p.up.size(); ++l) {
    const std::string base = "up" + std::to_string(l);
    conv(base + ".upconv", p.up[l].upconv);
    conv(base + ".conv1", p.up[l].c1);
    bn(base + ".bn1", p.up[l].bn1);
    conv(base + ".conv2", p.up[l].c2);
    bn(base + ".bn2", p.up[l].bn2);
  }
  conv("head", p.head);
}

}  // namespace

template <typename S>
void visit_params(UNetParams<S>& p,
                  const std::function<void(const std::string&, Buf<S>&, ParamKind)>& f) {
  visit_impl<S>(p, f);
}

template <typename S>
void visit_params(const UNetParams<S>& p,
                  const std::function<void(const std::string&, const Buf<S>&, ParamKind)>& f) {
  visit_impl<S>(p, f);
}

namespace {

template <typename S>
void alloc_conv(ConvParam<S>& c, int oc, int ic, int k) {
  c.w.reshape({uint32_t(oc), uint32_t(ic), uint32_t(k), uint32_t(k)});
  c.b.reshape({uint32_t(oc)});
}

template <typename S>
void alloc_bn(BnParam<S>& b, int ch) {
  b.gamma.reshape({uint32_t(ch)}, S(1));
  b.beta.reshape({uint32_t(ch)});
  b.run_mean.reshape({uint32_t(ch)});
  b.run_var.reshape({uint32_t(ch)}, S(1));
}

template <typename S>
UNetParams<S> alloc_params(const UNetConfig& cfg) {
  cfg.validate();
  UNetParams<S> p;
  p.cfg = cfg;
  p.down.resize(cfg.levels);
  for (int l = 0; l < cfg.levels; ++l) {
    const int in_ch = l == 0 ? cfg.in_channels : cfg.filters_at(l - 1);
    const int f = cfg.filters_at(l);
    alloc_conv(p.down[l].c1, f, in_ch, cfg.conv_size);
    alloc_bn(p.down[l].bn1, f);
    alloc_conv(p.down[l].c2, f, f, cfg.conv_size);
    alloc_bn(p.down[l].bn2, f);
  }
  p.up.resize(cfg.levels - 1);
  for (int i = 0; i < cfg.levels - 1; ++i) {
    const int level = cfg.levels - 2 - i;  // deepest first
    const int f = cfg.filters_at(level);
    const int f_below = cfg.filters_at(level + 1);
    alloc_conv(p.up[i].upconv, f, f_below, cfg.pool_size);
    alloc_conv(p.up[i].c1, f, 2 * f, cfg.conv_size);
    alloc_bn(p.up[i].bn1, f);
    alloc_conv(p.up[i].c2, f, f, cfg.conv_size);
    alloc_bn(p.up[i].bn2, f);
  }
  alloc_conv(p.head, cfg.out_classes, cfg.base_filters, 1);
  return p;
}

}  // namespace

template <typename S>
UNetParams<S> init_params(const UNetConfig& cfg, uint64_t seed) {
  UNetParams<S> p = alloc_params<S>(cfg);
  Rng rng(derive_seed(seed, 0x57u));
  visit_params(p, [&](const std::string& name, Buf<S>& buf, ParamKind kind) {
    if (kind != ParamKind::Learnable) return;
    const bool is_weight = name.ends_with(".w") && buf.dims.size() == 4;
    if (!is_weight) return;  // biases/beta stay 0, gamma stays 1
    const double fan_in =
        double(buf.dims[1]) * double(buf.dims[2]) * double(buf.dims[3]);
    const double std = std::sqrt(2.0 / fan_in);
    for (S& v : buf.v) v = S(rng.normal(0.0, std));
  });
  return p;
}

template <typename S>
UNetParams<S> zeros_like(const UNetParams<S>& p) {
  UNetParams<S> z = alloc_params<S>(p.cfg);
  visit_params(z, [](const std::string&, Buf<S>& buf, ParamKind) {
    std::fill(buf.v.begin(), buf.v.end(), S(0));
  });
  return z;
}

namespace {

template <typename S>
void block_forward(const ConvParam<S>& conv, const BnParam<S>& bn,
                   const Tensor4<S>& x, bool train,
                   typename UNetCache<S>::Block& blk, const std::string& name) {
  blk.conv_in = x;
  net::conv2d_forward(x, conv.w, conv.b, blk.conv_out);
  check_finite(blk.conv_out, name + ".conv");
  net::batchnorm_forward(blk.conv_out, bn.gamma, bn.beta, bn.run_mean, bn.run_var,
                         train, blk.out, train ? &blk.bn : nullptr);
  net::relu_forward(blk.out);
  check_finite(blk.out, name + ".bn_relu");
}

// Gradients flow: d(out) -> relu -> bn -> conv; returns d(conv_in).
template <typename S>
void block_backward(const ConvParam<S>& conv, const BnParam<S>& bn,
                    const typename UNetCache<S>::Block& blk, const Tensor4<S>& dout,
                    ConvParam<S>& dconv, BnParam<S>& dbn, Tensor4<S>& dx) {
  Tensor4<S> d_bn_out, d_conv_out;
  net::relu_backward(blk.out, dout, d_bn_out);
  net::batchnorm_backward(blk.conv_out, blk.bn, bn.gamma, d_bn_out, d_conv_out,
                          dbn.gamma, dbn.beta);
  net::conv2d_backward(blk.conv_in, conv.w, d_conv_out, dx, dconv.w, dconv.b);
}

}  // namespace

template <typename S>
void unet_forward(const UNetParams<S>& p, const Tensor4<S>& x, bool train,
                  UNetCache<S>& cache) {
  const UNetConfig& cfg = p.cfg;
  if (x.c != cfg.in_channels)
    throw DataError("unet_forward: expected " + std::to_string(cfg.in_channels) +
                    " input channels, got " + std::to_string(x.c));
  const int factor = cfg.pool_factor();
  if (x.h % factor != 0 || x.w % factor != 0)
    throw DataError("unet_forward: spatial dims must be divisible by " +
                    std::to_string(factor));

  cache = UNetCache<S>{};
  cache.train_mode = train;
  cache.down.resize(cfg.levels);
  cache.up.resize(cfg.levels - 1);

  const Tensor4<S>* cur = &x;
  for (int l = 0; l < cfg.levels; ++l) {
    auto& lvl = cache.down[l];
    const std::string base = "down" + std::to_string(l);
    block_forward(p.down[l].c1, p.down[l].bn1, *cur, train, lvl.b1, base + ".1");
    block_forward(p.down[l].c2, p.down[l].bn2, lvl.b1.out, train, lvl.b2, base + ".2");
    if (l < cfg.levels - 1) {
      net::avgpool2x2_forward(lvl.b2.out, lvl.pooled);
      cur = &lvl.pooled;
    } else {
      cur = &lvl.b2.out;
    }
  }

  for (int i = 0; i < cfg.levels - 1; ++i) {
    auto& lvl = cache.up[i];
    const int skip_level = cfg.levels - 2 - i;
    const std::string base = "up" + std::to_string(i);
    net::tconv2x2_forward(*cur, p.up[i].upconv.w, p.up[i].upconv.b, lvl.up_out);
    check_finite(lvl.up_out, base + ".upconv");
    net::concat_channels(cache.down[skip_level].b2.out, lvl.up_out, lvl.concat);
    block_forward(p.up[i].c1, p.up[i].bn1, lvl.concat, train, lvl.b1, base + ".1");
    block_forward(p.up[i].c2, p.up[i].bn2, lvl.b1.out, train, lvl.b2, base + ".2");
    cur = &lvl.b2.out;
  }

  net::conv2d_forward(*cur, p.head.w, p.head.b, cache.logits);
  check_finite(cache.logits, "head");
  net::softmax2_forward(cache.logits, cache.probs);
}

template <typename S>
void apply_running_stats(UNetParams<S>& p, const UNetCache<S>& cache) {
  if (!cache.train_mode) return;
  const auto commit = [](BnParam<S>& bn, const net::BnCache<S>& c) {
    for (size_t i = 0; i < bn.run_mean.size(); ++i) {
      bn.run_mean[i] = c.new_run_mean[i];
      bn.run_var[i] = c.new_run_var[i];
    }
  };
  for (size_t l = 0; l < p.down.size(); ++l) {
    commit(p.down[l].bn1, cache.down[l].b1.bn);
    commit(p.down[l].bn2, cache.down[l].b2.bn);
  }
  for (size_t l = 0; l < p.up.size(); ++l) {
    commit(p.up[l].bn1, cache.up[l].b1.bn);
    commit(p.up[l].bn2, cache.up[l].b2.bn);
  }
}

template <typename S>
void unet_backward(const UNetParams<S>& p, const UNetCache<S>& cache,
                   const Tensor4<S>& dlogits, UNetParams<S>& grads) {
  const UNetConfig& cfg = p.cfg;
  if (!cache.train_mode)
    throw DataError("unet_backward: cache must come from a train-mode forward");

  Tensor4<S> d;  // gradient flowing backwards
  {
    const Tensor4<S>& head_in =
        cfg.levels > 1 ? cache.up.back().b2.out : cache.down.back().b2.out;
    net::conv2d_backward(head_in, p.head.w, dlogits, d, grads.head.w, grads.head.b);
  }

  // Skip gradients accumulate into the matching contracting level.
  std::vector<Tensor4<S>> skip_grads(cfg.levels - 1);

  for (int i = cfg.levels - 2; i >= 0; --i) {
    const auto& lvl = cache.up[i];
    const int skip_level = cfg.levels - 2 - i;
    Tensor4<S> d_b1, d_concat, d_up;
    block_backward(p.up[i].c2, p.up[i].bn2, lvl.b2, d, grads.up[i].c2,
                   grads.up[i].bn2, d_b1);
    block_backward(p.up[i].c1, p.up[i].bn1, lvl.b1, d_b1, grads.up[i].c1,
                   grads.up[i].bn1, d_concat);
    skip_grads[skip_level] =
        Tensor4<S>(d_concat.n, cache.down[skip_level].b2.out.c, d_concat.h, d_concat.w);
    Tensor4<S> d_up_out(d_concat.n, lvl.up_out.c, d_concat.h, d_concat.w);
    net::split_channels(d_concat, skip_grads[skip_level], d_up_out);
    const Tensor4<S>& up_in = i == 0 ? cache.down[cfg.levels - 1].b2.out
                                     : cache.up[i - 1].b2.out;
    net::tconv2x2_backward(up_in, p.up[i].upconv.w, d_up_out, d_up,
                           grads.up[i].upconv.w, grads.up[i].upconv.b);
    d = std::move(d_up);
  }

  for (int l = cfg.levels - 1; l >= 0; --l) {
    const auto& lvl = cache.down[l];
    if (l < cfg.levels - 1) {
      // d currently holds the gradient at the pooled output of this level.
      Tensor4<S> d_unpooled;
      net::avgpool2x2_backward(d, d_unpooled);
      for (size_t i = 0; i < d_unpooled.size(); ++i)
        d_unpooled.v[i] += skip_grads[l].v[i];
      d = std::move(d_unpooled);
    }
    Tensor4<S> d_b1, d_in;
    block_backward(p.down[l].c2, p.down[l].bn2, lvl.b2, d, grads.down[l].c2,
                   grads.down[l].bn2, d_b1);
    block_backward(p.down[l].c1, p.down[l].bn1, lvl.b1, d_b1, grads.down[l].c1,
                   grads.down[l].bn1, d_in);
    d = std::move(d_in);
  }
}

template <typename S>
void adam_step(UNetParams<S>& p, const UNetParams<S>& grads, UNetParams<S>& m,
               UNetParams<S>& v, const TrainConfig& cfg) {
  p.step += 1;
  const double t = double(p.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  std::vector<Buf<S>*> pb, mb, vb;
  std::vector<const Buf<S>*> gb;
  visit_params(p, [&](const std::string&, Buf<S>& b, ParamKind k) {
    if (k == ParamKind::Learnable) pb.push_back(&b);
  });
  visit_params(grads,
               [&](const std::string&, const Buf<S>& b, ParamKind k) {
                 if (k == ParamKind::Learnable) gb.push_back(&b);
               });
  visit_params(m, [&](const std::string&, Buf<S>& b, ParamKind k) {
    if (k == ParamKind::Learnable) mb.push_back(&b);
  });
  visit_params(v, [&](const std::string&, Buf<S>& b, ParamKind k) {
    if (k == ParamKind::Learnable) vb.push_back(&b);
  });

  for (size_t i = 0; i < pb.size(); ++i) {
    Buf<S>& theta = *pb[i];
    const Buf<S>& g = *gb[i];
    Buf<S>& mm = *mb[i];
    Buf<S>& vv = *vb[i];
    for (size_t j = 0; j < theta.size(); ++j) {
      const double gj = double(g[j]);
      if (!std::isfinite(gj)) throw NumericError("adam_step: non-finite gradient");
      mm[j] = S(cfg.beta1 * double(mm[j]) + (1.0 - cfg.beta1) * gj);
      vv[j] = S(cfg.beta2 * double(vv[j]) + (1.0 - cfg.beta2) * gj * gj);
      const double mhat = double(mm[j]) / bc1;
      const double vhat = double(vv[j]) / bc2;
      theta[j] = S(double(theta[j]) -
                   cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon));
    }
  }
}

template <typename S>
Tensor4<S> unet_predict(const UNetParams<S>& p, const Tensor4<S>& x) {
  UNetCache<S> cache;
  unet_forward(p, x, /*train=*/false, cache);
  return std::move(cache.probs);
}

// Explicit instantiations: float is the production type, double backs the
// gradient-check suite.
#define LESIONPIPE_INSTANTIATE(S)                                                   \
  template void visit_params<S>(                                                    \
      UNetParams<S>&, const std::function<void(const std::string&, Buf<S>&,         \
                                               ParamKind)>&);                       \
  template void visit_params<S>(                                                    \
      const UNetParams<S>&,                                                         \
      const std::function<void(const std::string&, const Buf<S>&, ParamKind)>&);    \
  template UNetParams<S> init_params<S>(const UNetConfig&, uint64_t);               \
  template UNetParams<S> zeros_like<S>(const UNetParams<S>&);                       \
  template void unet_forward<S>(const UNetParams<S>&, const Tensor4<S>&, bool,      \
                                UNetCache<S>&);                                     \
  template void apply_running_stats<S>(UNetParams<S>&, const UNetCache<S>&);        \
  template void unet_backward<S>(const UNetParams<S>&, const UNetCache<S>&,         \
                                 const Tensor4<S>&, UNetParams<S>&);                \
  template void adam_step<S>(UNetParams<S>&, const UNetParams<S>&, UNetParams<S>&,  \
                             UNetParams<S>&, const TrainConfig&);                   \
  template Tensor4<S> unet_predict<S>(const UNetParams<S>&, const Tensor4<S>&);

LESIONPIPE_INSTANTIATE(float)
LESIONPIPE_INSTANTIATE(double)

#undef LESIONPIPE_INSTANTIATE

template struct UNetParams<float>;
template struct UNetParams<double>;

}  // namespace lesionpipe
