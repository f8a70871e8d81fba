#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lesionpipe/errors.hpp"

namespace lesionpipe {

// Dense NCHW activation tensor.
template <typename S>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<S> v;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * c_ * h_ * w_, S(0)) {}

  size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), S(0)); }

  S* plane(int in, int ic) {
    return v.data() + (size_t(in) * c + ic) * h * w;
  }
  const S* plane(int in, int ic) const {
    return v.data() + (size_t(in) * c + ic) * h * w;
  }
  S& at(int in, int ic, int y, int x) {
    return v[((size_t(in) * c + ic) * h + y) * w + x];
  }
  S at(int in, int ic, int y, int x) const {
    return v[((size_t(in) * c + ic) * h + y) * w + x];
  }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

// Named parameter buffer; dims follow the weight-file layout.
template <typename S>
struct Buf {
  std::vector<S> v;
  std::vector<uint32_t> dims;

  Buf() = default;
  explicit Buf(std::vector<uint32_t> d, S fill = S(0)) { reshape(std::move(d), fill); }

  void reshape(std::vector<uint32_t> d, S fill = S(0)) {
    dims = std::move(d);
    size_t n = 1;
    for (uint32_t x : dims) n *= x;
    v.assign(n, fill);
  }
  size_t size() const { return v.size(); }
  S* data() { return v.data(); }
  const S* data() const { return v.data(); }
  S& operator[](size_t i) { return v[i]; }
  S operator[](size_t i) const { return v[i]; }
};

template <typename S>
void check_finite(const Tensor4<S>& t, const std::string& layer) {
  for (S x : t.v)
    if (!std::isfinite(double(x)))
      throw NumericError("non-finite activation after layer '" + layer + "'");
}

}  // namespace lesionpipe
