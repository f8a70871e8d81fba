#pragma once

#include <algorithm>
#include <cmath>

#include "lesionpipe/tensor.hpp"

// Layer primitives of the segmentation network, templated on the scalar type
// so the float64 gradient-check suite can instantiate exact copies of the
// float32 production path. All reductions run in a fixed order; outputs are
// bit-reproducible for a given build.
namespace lesionpipe::net {

// --- convolution, stride 1, same padding (zeros), odd kernel ---

template <typename S>
void conv2d_forward(const Tensor4<S>& x, const Buf<S>& w, const Buf<S>& b,
                    Tensor4<S>& out) {
  const int oc = int(w.dims[0]), ic = int(w.dims[1]), k = int(w.dims[2]);
  const int pad = k / 2, H = x.h, W = x.w;
  out = Tensor4<S>(x.n, oc, H, W);
  for (int in = 0; in < x.n; ++in)
    for (int o = 0; o < oc; ++o) {
      S* __restrict op = out.plane(in, o);
      std::fill(op, op + size_t(H) * W, b[o]);
      for (int i = 0; i < ic; ++i) {
        const S* xp = x.plane(in, i);
        const S* wk = w.data() + (size_t(o) * ic + i) * k * k;
        for (int ky = 0; ky < k; ++ky)
          for (int y = std::max(0, pad - ky); y < std::min(H, H + pad - ky); ++y) {
            const S* __restrict xr = xp + size_t(y + ky - pad) * W;
            S* __restrict orow = op + size_t(y) * W;
            for (int kx = 0; kx < k; ++kx) {
              const int dx = kx - pad;
              const S wv = wk[ky * k + kx];
              const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
              for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * xr[xx + dx];
            }
          }
      }
    }
}

template <typename S>
void conv2d_backward(const Tensor4<S>& x, const Buf<S>& w, const Tensor4<S>& dout,
                     Tensor4<S>& dx, Buf<S>& dw, Buf<S>& db) {
  const int oc = int(w.dims[0]), ic = int(w.dims[1]), k = int(w.dims[2]);
  const int pad = k / 2, H = x.h, W = x.w;
  dx = Tensor4<S>(x.n, x.c, H, W);
  dw.reshape(w.dims);
  db.reshape({uint32_t(oc)});

  for (int in = 0; in < x.n; ++in)
    for (int o = 0; o < oc; ++o) {
      const S* dop = dout.plane(in, o);
      S acc = S(0);
      for (size_t i = 0, npx = size_t(H) * W; i < npx; ++i) acc += dop[i];
      db[o] += acc;

      for (int i = 0; i < ic; ++i) {
        const S* xp = x.plane(in, i);
        S* __restrict dxp = dx.plane(in, i);
        const S* wk = w.data() + (size_t(o) * ic + i) * k * k;
        S* dwk = dw.data() + (size_t(o) * ic + i) * k * k;
        for (int ky = 0; ky < k; ++ky)
          for (int y = std::max(0, pad - ky); y < std::min(H, H + pad - ky); ++y) {
            const S* __restrict xr = xp + size_t(y + ky - pad) * W;
            S* __restrict dxr = dxp + size_t(y + ky - pad) * W;
            const S* __restrict dor = dop + size_t(y) * W;
            for (int kx = 0; kx < k; ++kx) {
              const int dxo = kx - pad;
              const int x0 = std::max(0, -dxo), x1 = std::min(W, W - dxo);
              S wsum = S(0);
              const S wv = wk[ky * k + kx];
              for (int xx = x0; xx < x1; ++xx) {
                wsum += dor[xx] * xr[xx + dxo];
                dxr[xx + dxo] += wv * dor[xx];
              }
              dwk[ky * k + kx] += wsum;
            }
          }
      }
    }
}

// --- 2x2 stride-2 transposed convolution (learned upsampling) ---
// Weight layout (out_ch, in_ch, 2, 2); out[..][2y+ky][2x+kx] takes exactly one
// contribution per input pixel because stride equals the kernel size.

template <typename S>
void tconv2x2_forward(const Tensor4<S>& x, const Buf<S>& w, const Buf<S>& b,
                      Tensor4<S>& out) {
  const int oc = int(w.dims[0]), ic = int(w.dims[1]);
  out = Tensor4<S>(x.n, oc, x.h * 2, x.w * 2);
  for (int in = 0; in < x.n; ++in)
    for (int o = 0; o < oc; ++o) {
      S* op = out.plane(in, o);
      std::fill(op, op + size_t(out.h) * out.w, b[o]);
      for (int i = 0; i < ic; ++i) {
        const S* xp = x.plane(in, i);
        const S* wk = w.data() + (size_t(o) * ic + i) * 4;
        for (int y = 0; y < x.h; ++y) {
          const S* __restrict xr = xp + size_t(y) * x.w;
          for (int ky = 0; ky < 2; ++ky) {
            S* __restrict orow = op + size_t(2 * y + ky) * out.w;
            const S w0 = wk[ky * 2], w1 = wk[ky * 2 + 1];
            for (int xx = 0; xx < x.w; ++xx) {
              orow[2 * xx] += w0 * xr[xx];
              orow[2 * xx + 1] += w1 * xr[xx];
            }
          }
        }
      }
    }
}

template <typename S>
void tconv2x2_backward(const Tensor4<S>& x, const Buf<S>& w, const Tensor4<S>& dout,
                       Tensor4<S>& dx, Buf<S>& dw, Buf<S>& db) {
  const int oc = int(w.dims[0]), ic = int(w.dims[1]);
  dx = Tensor4<S>(x.n, x.c, x.h, x.w);
  dw.reshape(w.dims);
  db.reshape({uint32_t(oc)});

  for (int in = 0; in < x.n; ++in)
    for (int o = 0; o < oc; ++o) {
      const S* dop = dout.plane(in, o);
      S acc = S(0);
      for (size_t i = 0, npx = size_t(dout.h) * dout.w; i < npx; ++i) acc += dop[i];
      db[o] += acc;

      for (int i = 0; i < ic; ++i) {
        const S* xp = x.plane(in, i);
        S* dxp = dx.plane(in, i);
        const S* wk = w.data() + (size_t(o) * ic + i) * 4;
        S* dwk = dw.data() + (size_t(o) * ic + i) * 4;
        for (int y = 0; y < x.h; ++y) {
          const S* __restrict xr = xp + size_t(y) * x.w;
          S* __restrict dxr = dxp + size_t(y) * x.w;
          for (int ky = 0; ky < 2; ++ky) {
            const S* __restrict dor = dop + size_t(2 * y + ky) * dout.w;
            const S w0 = wk[ky * 2], w1 = wk[ky * 2 + 1];
            S s0 = S(0), s1 = S(0);
            for (int xx = 0; xx < x.w; ++xx) {
              const S d0 = dor[2 * xx], d1 = dor[2 * xx + 1];
              dxr[xx] += w0 * d0 + w1 * d1;
              s0 += d0 * xr[xx];
              s1 += d1 * xr[xx];
            }
            dwk[ky * 2] += s0;
            dwk[ky * 2 + 1] += s1;
          }
        }
      }
    }
}

// --- 2x2 average pooling, stride 2 ---

template <typename S>
void avgpool2x2_forward(const Tensor4<S>& x, Tensor4<S>& out) {
  out = Tensor4<S>(x.n, x.c, x.h / 2, x.w / 2);
  for (int in = 0; in < x.n; ++in)
    for (int ch = 0; ch < x.c; ++ch) {
      const S* xp = x.plane(in, ch);
      S* op = out.plane(in, ch);
      for (int y = 0; y < out.h; ++y) {
        const S* r0 = xp + size_t(2 * y) * x.w;
        const S* r1 = r0 + x.w;
        S* orow = op + size_t(y) * out.w;
        for (int xx = 0; xx < out.w; ++xx)
          orow[xx] = (r0[2 * xx] + r0[2 * xx + 1] + r1[2 * xx] + r1[2 * xx + 1]) *
                     S(0.25);
      }
    }
}

template <typename S>
void avgpool2x2_backward(const Tensor4<S>& dout, Tensor4<S>& dx) {
  dx = Tensor4<S>(dout.n, dout.c, dout.h * 2, dout.w * 2);
  for (int in = 0; in < dout.n; ++in)
    for (int ch = 0; ch < dout.c; ++ch) {
      const S* dop = dout.plane(in, ch);
      S* dxp = dx.plane(in, ch);
      for (int y = 0; y < dout.h; ++y) {
        S* r0 = dxp + size_t(2 * y) * dx.w;
        S* r1 = r0 + dx.w;
        const S* dor = dop + size_t(y) * dout.w;
        for (int xx = 0; xx < dout.w; ++xx) {
          const S g = dor[xx] * S(0.25);
          r0[2 * xx] = g;
          r0[2 * xx + 1] = g;
          r1[2 * xx] = g;
          r1[2 * xx + 1] = g;
        }
      }
    }
}

// --- batch normalization ---

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.9;

// Saved statistics for the backward pass (train mode) plus the momentum
// update of the running statistics, which the caller applies explicitly.
template <typename S>
struct BnCache {
  std::vector<S> mean, invstd;
  std::vector<S> new_run_mean, new_run_var;
};

template <typename S>
void batchnorm_forward(const Tensor4<S>& x, const Buf<S>& gamma, const Buf<S>& beta,
                       const Buf<S>& run_mean, const Buf<S>& run_var, bool train,
                       Tensor4<S>& out, BnCache<S>* cache) {
  const int C = x.c;
  const size_t plane = size_t(x.h) * x.w;
  const size_t m = size_t(x.n) * plane;
  out = Tensor4<S>(x.n, x.c, x.h, x.w);
  if (cache) {
    cache->mean.assign(C, S(0));
    cache->invstd.assign(C, S(0));
    cache->new_run_mean.assign(C, S(0));
    cache->new_run_var.assign(C, S(0));
  }

  for (int ch = 0; ch < C; ++ch) {
    S mean, invstd;
    if (train) {
      S sum = S(0);
      for (int in = 0; in < x.n; ++in) {
        const S* xp = x.plane(in, ch);
        for (size_t i = 0; i < plane; ++i) sum += xp[i];
      }
      mean = sum / S(m);
      S var = S(0);
      for (int in = 0; in < x.n; ++in) {
        const S* xp = x.plane(in, ch);
        for (size_t i = 0; i < plane; ++i) {
          const S d = xp[i] - mean;
          var += d * d;
        }
      }
      var /= S(m);
      invstd = S(1) / std::sqrt(var + S(kBnEps));
      if (cache) {
        cache->mean[ch] = mean;
        cache->invstd[ch] = invstd;
        cache->new_run_mean[ch] =
            S(kBnMomentum) * run_mean[ch] + S(1 - kBnMomentum) * mean;
        cache->new_run_var[ch] =
            S(kBnMomentum) * run_var[ch] + S(1 - kBnMomentum) * var;
      }
    } else {
      mean = run_mean[ch];
      invstd = S(1) / std::sqrt(run_var[ch] + S(kBnEps));
    }
    const S g = gamma[ch], bt = beta[ch];
    for (int in = 0; in < x.n; ++in) {
      const S* __restrict xp = x.plane(in, ch);
      S* __restrict op = out.plane(in, ch);
      for (size_t i = 0; i < plane; ++i)
        op[i] = g * (xp[i] - mean) * invstd + bt;
    }
  }
}

template <typename S>
void batchnorm_backward(const Tensor4<S>& x, const BnCache<S>& cache,
                        const Buf<S>& gamma, const Tensor4<S>& dout, Tensor4<S>& dx,
                        Buf<S>& dgamma, Buf<S>& dbeta) {
  const int C = x.c;
  const size_t plane = size_t(x.h) * x.w;
  const S m = S(size_t(x.n) * plane);
  dx = Tensor4<S>(x.n, x.c, x.h, x.w);
  dgamma.reshape({uint32_t(C)});
  dbeta.reshape({uint32_t(C)});

  for (int ch = 0; ch < C; ++ch) {
    const S mean = cache.mean[ch], invstd = cache.invstd[ch];
    S sum_dy = S(0), sum_dy_xhat = S(0);
    for (int in = 0; in < x.n; ++in) {
      const S* xp = x.plane(in, ch);
      const S* dop = dout.plane(in, ch);
      for (size_t i = 0; i < plane; ++i) {
        sum_dy += dop[i];
        sum_dy_xhat += dop[i] * (xp[i] - mean) * invstd;
      }
    }
    dgamma[ch] += sum_dy_xhat;
    dbeta[ch] += sum_dy;

    const S g = gamma[ch];
    const S k1 = sum_dy / m, k2 = sum_dy_xhat / m;
    for (int in = 0; in < x.n; ++in) {
      const S* __restrict xp = x.plane(in, ch);
      const S* __restrict dop = dout.plane(in, ch);
      S* __restrict dxp = dx.plane(in, ch);
      for (size_t i = 0; i < plane; ++i) {
        const S xhat = (xp[i] - mean) * invstd;
        dxp[i] = g * invstd * (dop[i] - k1 - xhat * k2);
      }
    }
  }
}

// --- ReLU ---

template <typename S>
void relu_forward(Tensor4<S>& x) {
  for (S& v : x.v) v = v > S(0) ? v : S(0);
}

template <typename S>
void relu_backward(const Tensor4<S>& out, const Tensor4<S>& dout, Tensor4<S>& dx) {
  dx = Tensor4<S>(dout.n, dout.c, dout.h, dout.w);
  for (size_t i = 0; i < dx.size(); ++i)
    dx.v[i] = out.v[i] > S(0) ? dout.v[i] : S(0);
}

// --- channel concatenation (skip connections) ---

template <typename S>
void concat_channels(const Tensor4<S>& a, const Tensor4<S>& b, Tensor4<S>& out) {
  out = Tensor4<S>(a.n, a.c + b.c, a.h, a.w);
  const size_t plane = size_t(a.h) * a.w;
  for (int in = 0; in < a.n; ++in) {
    for (int ch = 0; ch < a.c; ++ch)
      std::copy_n(a.plane(in, ch), plane, out.plane(in, ch));
    for (int ch = 0; ch < b.c; ++ch)
      std::copy_n(b.plane(in, ch), plane, out.plane(in, a.c + ch));
  }
}

template <typename S>
void split_channels(const Tensor4<S>& dout, Tensor4<S>& da, Tensor4<S>& db) {
  const size_t plane = size_t(dout.h) * dout.w;
  for (int in = 0; in < dout.n; ++in) {
    for (int ch = 0; ch < da.c; ++ch)
      std::copy_n(dout.plane(in, ch), plane, da.plane(in, ch));
    for (int ch = 0; ch < db.c; ++ch)
      std::copy_n(dout.plane(in, da.c + ch), plane, db.plane(in, ch));
  }
}

// --- per-pixel softmax over channels (2 classes) ---

template <typename S>
void softmax2_forward(const Tensor4<S>& logits, Tensor4<S>& probs) {
  probs = Tensor4<S>(logits.n, logits.c, logits.h, logits.w);
  const size_t plane = size_t(logits.h) * logits.w;
  for (int in = 0; in < logits.n; ++in) {
    const S* z0 = logits.plane(in, 0);
    const S* z1 = logits.plane(in, 1);
    S* p0 = probs.plane(in, 0);
    S* p1 = probs.plane(in, 1);
    for (size_t i = 0; i < plane; ++i) {
      const S mx = std::max(z0[i], z1[i]);
      const S e0 = std::exp(z0[i] - mx), e1 = std::exp(z1[i] - mx);
      const S inv = S(1) / (e0 + e1);
      p0[i] = e0 * inv;
      p1[i] = e1 * inv;
    }
  }
}

// --- mean cross-entropy over the border-cropped interior ---
// target holds {0,1} labels at the cropped size (probs.h - 2*crop).

template <typename S>
S xent_loss(const Tensor4<S>& probs, const Tensor4<uint8_t>& target, int crop) {
  const int ch = probs.h - 2 * crop, cw = probs.w - 2 * crop;
  if (target.n != probs.n || target.h != ch || target.w != cw)
    throw DataError("xent_loss: probability/target shape mismatch");
  const S floor = S(1e-12);
  double total = 0.0;
  for (int in = 0; in < probs.n; ++in) {
    const S* p0 = probs.plane(in, 0);
    const S* p1 = probs.plane(in, 1);
    const uint8_t* t = target.plane(in, 0);
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        const size_t pi = size_t(y + crop) * probs.w + (x + crop);
        const S p = t[size_t(y) * cw + x] ? p1[pi] : p0[pi];
        total -= std::log(double(std::max(p, floor)));
      }
  }
  return S(total / (double(probs.n) * ch * cw));
}

// d(loss)/d(logits) for softmax + mean cross-entropy; zero on the border.
template <typename S>
void xent_grad(const Tensor4<S>& probs, const Tensor4<uint8_t>& target, int crop,
               Tensor4<S>& dlogits) {
  const int ch = probs.h - 2 * crop, cw = probs.w - 2 * crop;
  dlogits = Tensor4<S>(probs.n, probs.c, probs.h, probs.w);
  const S inv_m = S(1) / (S(probs.n) * S(ch) * S(cw));
  for (int in = 0; in < probs.n; ++in) {
    const S* p0 = probs.plane(in, 0);
    const S* p1 = probs.plane(in, 1);
    S* d0 = dlogits.plane(in, 0);
    S* d1 = dlogits.plane(in, 1);
    const uint8_t* t = target.plane(in, 0);
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        const size_t pi = size_t(y + crop) * probs.w + (x + crop);
        const uint8_t lbl = t[size_t(y) * cw + x];
        d0[pi] = (p0[pi] - S(lbl == 0)) * inv_m;
        d1[pi] = (p1[pi] - S(lbl == 1)) * inv_m;
      }
  }
}

}  // namespace lesionpipe::net
