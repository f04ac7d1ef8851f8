#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "coopdet/errors.hpp"

namespace coopdet {

// Dense (channels, height, width) tensor. float carries inference and wire
// paths; double is used for gradient checking.
template <class T>
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(c_) * h_ * w_, T(0)) {}

  T& at(int ci, int yi, int xi) {
    return v[(static_cast<std::size_t>(ci) * h + yi) * w + xi];
  }
  const T& at(int ci, int yi, int xi) const {
    return v[(static_cast<std::size_t>(ci) * h + yi) * w + xi];
  }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

template <class U, class T>
Tensor<U> convert_tensor(const Tensor<T>& t) {
  Tensor<U> out(t.c, t.h, t.w);
  for (std::size_t i = 0; i < t.v.size(); ++i) out.v[i] = static_cast<U>(t.v[i]);
  return out;
}

// Feature grid carrying its global fixel anchor when it came from a
// MOD-aligned image.
template <class T>
struct FeatureMap {
  Tensor<T> data;
  bool has_origin = false;
  std::int64_t gx0 = 0, gy0 = 0;
};

}  // namespace coopdet
