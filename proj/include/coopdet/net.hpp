#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "coopdet/errors.hpp"
#include "coopdet/tensor.hpp"

namespace coopdet {

enum class LayerKind : std::uint8_t { conv = 0, maxpool2 = 1 };
enum class RunMode { train, eval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kLeakySlope = 0.1;
inline constexpr double kRunningStatMomentum = 0.9;

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int kernel = 3;          // 1 or 3, same-zero-padded
  int out_channels = 0;
  bool batchnorm = false;
  bool leaky_relu = false;
};

inline LayerSpec conv(int kernel, int out_channels, bool bn = true, bool act = true) {
  return LayerSpec{LayerKind::conv, kernel, out_channels, bn, act};
}
inline LayerSpec maxpool2() { return LayerSpec{LayerKind::maxpool2, 2, 0, false, false}; }

struct NetworkConfig {
  int in_channels = 3;
  std::vector<LayerSpec> layers;

  int downsample_rate() const {
    int k = 1;
    for (const auto& l : layers)
      if (l.kind == LayerKind::maxpool2) k *= 2;
    return k;
  }
  int out_channels() const {
    int ch = in_channels;
    for (const auto& l : layers)
      if (l.kind == LayerKind::conv) ch = l.out_channels;
    return ch;
  }
  // Side length, in input pixels, of one output cell's dependency window.
  int receptive_field() const {
    int r = 1, j = 1;
    for (const auto& l : layers) {
      if (l.kind == LayerKind::conv) {
        r += (l.kernel - 1) * j;
      } else {
        r += j;
        j *= 2;
      }
    }
    return r;
  }
};

// Presets. The full-scale network and a desk-scale variant that keeps the
// same layer grammar with two pools (K=4) and widths {8,16,16}.
NetworkConfig table1_fec();
NetworkConfig tiny_fec();
NetworkConfig encoder(int c_t, int width = 128);
NetworkConfig decoder(int width = 128);
NetworkConfig fscod_last_layer(int c_t, int in_channels = 128);
NetworkConfig detector_head(int out_channels, int in_channels = 128);
NetworkConfig tiny_head(int out_channels, int in_channels = 16);

template <class T>
struct LayerParams {
  std::vector<T> w, b;                       // conv
  std::vector<T> gamma, beta, rmean, rvar;   // batchnorm
};

template <class T>
struct Parameters {
  std::vector<LayerParams<T>> layers;
};

template <class T>
struct LayerActs {
  Tensor<T> z;       // conv output, pre-BN
  Tensor<T> bn_out;  // post-BN pre-activation (only when bn && leaky)
  Tensor<T> out;
  std::vector<T> mean, var;          // train-mode batch stats
  std::vector<std::int32_t> argmax;  // maxpool routing (flat input index)
};

template <class T>
struct Activations {
  RunMode mode = RunMode::eval;
  Tensor<T> input;
  std::vector<LayerActs<T>> layers;
  const Tensor<T>& output() const {
    return layers.empty() ? input : layers.back().out;
  }
};

template <class T>
struct Gradients {
  std::vector<LayerParams<T>> layers;
  Tensor<T> input;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double unit_uniform(std::uint64_t& s) {
  return static_cast<double>(splitmix64(s) >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace detail

template <class T>
Parameters<T> init_parameters(const NetworkConfig& cfg, std::uint64_t seed) {
  Parameters<T> p;
  std::uint64_t s = seed;
  int in_ch = cfg.in_channels;
  for (const auto& l : cfg.layers) {
    LayerParams<T> lp;
    if (l.kind == LayerKind::conv) {
      const int fan_in = in_ch * l.kernel * l.kernel;
      const double limit = std::sqrt(6.0 / fan_in);
      lp.w.resize(static_cast<std::size_t>(l.out_channels) * fan_in);
      for (auto& v : lp.w)
        v = static_cast<T>((2.0 * detail::unit_uniform(s) - 1.0) * limit);
      lp.b.assign(l.out_channels, T(0));
      if (l.batchnorm) {
        lp.gamma.assign(l.out_channels, T(1));
        lp.beta.assign(l.out_channels, T(0));
        lp.rmean.assign(l.out_channels, T(0));
        lp.rvar.assign(l.out_channels, T(1));
      }
      in_ch = l.out_channels;
    }
    p.layers.push_back(std::move(lp));
  }
  return p;
}

template <class T>
Gradients<T> zero_gradients(const NetworkConfig& cfg, const Parameters<T>& params) {
  Gradients<T> g;
  g.layers.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    g.layers[i].w.assign(params.layers[i].w.size(), T(0));
    g.layers[i].b.assign(params.layers[i].b.size(), T(0));
    g.layers[i].gamma.assign(params.layers[i].gamma.size(), T(0));
    g.layers[i].beta.assign(params.layers[i].beta.size(), T(0));
  }
  (void)cfg;
  return g;
}

template <class U, class T>
Parameters<U> convert_parameters(const Parameters<T>& p) {
  Parameters<U> out;
  out.layers.resize(p.layers.size());
  auto conv_vec = [](const std::vector<T>& a, std::vector<U>& b) {
    b.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = static_cast<U>(a[i]);
  };
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    conv_vec(p.layers[i].w, out.layers[i].w);
    conv_vec(p.layers[i].b, out.layers[i].b);
    conv_vec(p.layers[i].gamma, out.layers[i].gamma);
    conv_vec(p.layers[i].beta, out.layers[i].beta);
    conv_vec(p.layers[i].rmean, out.layers[i].rmean);
    conv_vec(p.layers[i].rvar, out.layers[i].rvar);
  }
  return out;
}

namespace detail {

template <class T>
Tensor<T> conv_forward(const Tensor<T>& in, const std::vector<T>& w,
                       const std::vector<T>& b, int out_ch, int kernel) {
  const int pad = kernel / 2;
  Tensor<T> out(out_ch, in.h, in.w);
  for (int oc = 0; oc < out_ch; ++oc) {
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x) {
        T acc = b[oc];
        for (int ic = 0; ic < in.c; ++ic) {
          const T* wbase = &w[(static_cast<std::size_t>(oc) * in.c + ic) *
                             kernel * kernel];
          for (int ky = 0; ky < kernel; ++ky) {
            const int yy = y + ky - pad;
            if (yy < 0 || yy >= in.h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int xx = x + kx - pad;
              if (xx < 0 || xx >= in.w) continue;
              acc += wbase[ky * kernel + kx] * in.at(ic, yy, xx);
            }
          }
        }
        out.at(oc, y, x) = acc;
      }
    }
  }
  return out;
}

template <class T>
void conv_backward(const Tensor<T>& in, const std::vector<T>& w, int out_ch,
                   int kernel, const Tensor<T>& g, std::vector<T>& dw,
                   std::vector<T>& db, Tensor<T>& din) {
  const int pad = kernel / 2;
  din = Tensor<T>(in.c, in.h, in.w);
  for (int oc = 0; oc < out_ch; ++oc) {
    T bias_acc = T(0);
    for (int y = 0; y < in.h; ++y)
      for (int x = 0; x < in.w; ++x) bias_acc += g.at(oc, y, x);
    db[oc] += bias_acc;
    for (int ic = 0; ic < in.c; ++ic) {
      T* dwbase = &dw[(static_cast<std::size_t>(oc) * in.c + ic) * kernel * kernel];
      const T* wbase = &w[(static_cast<std::size_t>(oc) * in.c + ic) * kernel * kernel];
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          T acc = T(0);
          for (int y = 0; y < in.h; ++y) {
            const int yy = y + ky - pad;
            if (yy < 0 || yy >= in.h) continue;
            for (int x = 0; x < in.w; ++x) {
              const int xx = x + kx - pad;
              if (xx < 0 || xx >= in.w) continue;
              acc += g.at(oc, y, x) * in.at(ic, yy, xx);
              din.at(ic, yy, xx) += wbase[ky * kernel + kx] * g.at(oc, y, x);
            }
          }
          dwbase[ky * kernel + kx] += acc;
        }
      }
    }
  }
}

}  // namespace detail

// Forward pass. Running stats are never mutated here; in train mode the batch
// stats are recorded in the activations and applied separately with
// update_running_stats so parallel forwards stay race-free.
template <class T>
Activations<T> forward(const NetworkConfig& cfg, const Parameters<T>& params,
                       const Tensor<T>& in, RunMode mode) {
  if (in.c != cfg.in_channels)
    throw ShapeError("forward: input channel count mismatch");
  if (params.layers.size() != cfg.layers.size())
    throw ShapeError("forward: parameter/config layer count mismatch");
  Activations<T> acts;
  acts.mode = mode;
  acts.input = in;
  const Tensor<T>* cur = &acts.input;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerSpec& l = cfg.layers[i];
    const LayerParams<T>& lp = params.layers[i];
    LayerActs<T> la;
    if (l.kind == LayerKind::maxpool2) {
      if (cur->h % 2 != 0 || cur->w % 2 != 0)
        throw ShapeError("forward: maxpool2 requires even spatial dims");
      Tensor<T> out(cur->c, cur->h / 2, cur->w / 2);
      la.argmax.resize(out.size());
      for (int c = 0; c < cur->c; ++c) {
        for (int y = 0; y < out.h; ++y) {
          for (int x = 0; x < out.w; ++x) {
            int best_y = 2 * y, best_x = 2 * x;
            T best = cur->at(c, best_y, best_x);
            for (int dy = 0; dy < 2; ++dy) {
              for (int dx = 0; dx < 2; ++dx) {
                const T v = cur->at(c, 2 * y + dy, 2 * x + dx);
                if (v > best) {
                  best = v;
                  best_y = 2 * y + dy;
                  best_x = 2 * x + dx;
                }
              }
            }
            out.at(c, y, x) = best;
            la.argmax[(static_cast<std::size_t>(c) * out.h + y) * out.w + x] =
                static_cast<std::int32_t>(
                    (static_cast<std::size_t>(c) * cur->h + best_y) * cur->w + best_x);
          }
        }
      }
      la.out = std::move(out);
    } else {
      la.z = detail::conv_forward(*cur, lp.w, lp.b, l.out_channels, l.kernel);
      Tensor<T>* stage = &la.z;
      if (l.batchnorm) {
        const int n = la.z.h * la.z.w;
        la.mean.resize(l.out_channels);
        la.var.resize(l.out_channels);
        Tensor<T> bn(la.z.c, la.z.h, la.z.w);
        for (int c = 0; c < l.out_channels; ++c) {
          T mean, var;
          if (mode == RunMode::train) {
            T sum = T(0);
            for (int y = 0; y < la.z.h; ++y)
              for (int x = 0; x < la.z.w; ++x) sum += la.z.at(c, y, x);
            mean = sum / T(n);
            T sq = T(0);
            for (int y = 0; y < la.z.h; ++y)
              for (int x = 0; x < la.z.w; ++x) {
                const T d = la.z.at(c, y, x) - mean;
                sq += d * d;
              }
            var = sq / T(n);
          } else {
            mean = lp.rmean[c];
            var = lp.rvar[c];
          }
          la.mean[c] = mean;
          la.var[c] = var;
          const T inv = T(1) / std::sqrt(var + T(kBatchNormEps));
          const T gmul = lp.gamma[c] * inv;
          const T add = lp.beta[c] - mean * gmul;
          for (int y = 0; y < la.z.h; ++y)
            for (int x = 0; x < la.z.w; ++x)
              bn.at(c, y, x) = gmul * la.z.at(c, y, x) + add;
        }
        la.bn_out = std::move(bn);
        stage = &la.bn_out;
      }
      if (l.leaky_relu) {
        Tensor<T> out(stage->c, stage->h, stage->w);
        for (std::size_t j = 0; j < stage->v.size(); ++j) {
          const T v = stage->v[j];
          out.v[j] = v > T(0) ? v : T(kLeakySlope) * v;
        }
        la.out = std::move(out);
      } else {
        la.out = *stage;
      }
    }
    acts.layers.push_back(std::move(la));
    cur = &acts.layers.back().out;
  }
  return acts;
}

// Fold train-mode batch stats into the running stats, in layer order.
template <class T>
void update_running_stats(const NetworkConfig& cfg, Parameters<T>& params,
                          const Activations<T>& acts,
                          T momentum = T(kRunningStatMomentum)) {
  if (acts.mode != RunMode::train) return;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerSpec& l = cfg.layers[i];
    if (l.kind != LayerKind::conv || !l.batchnorm) continue;
    LayerParams<T>& lp = params.layers[i];
    const LayerActs<T>& la = acts.layers[i];
    for (int c = 0; c < l.out_channels; ++c) {
      lp.rmean[c] = momentum * lp.rmean[c] + (T(1) - momentum) * la.mean[c];
      lp.rvar[c] = momentum * lp.rvar[c] + (T(1) - momentum) * la.var[c];
    }
  }
}

// Exact reverse-mode derivatives of the forward composition. Requires the
// activations recorded by forward(); BN backward assumes train-mode stats for
// train activations and affine (running-stat) semantics otherwise.
template <class T>
Gradients<T> backward(const NetworkConfig& cfg, const Parameters<T>& params,
                      const Activations<T>& acts, const Tensor<T>& upstream) {
  if (acts.layers.size() != cfg.layers.size())
    throw ShapeError("backward: stale or mismatched activations");
  if (!upstream.same_shape(acts.output()))
    throw ShapeError("backward: upstream gradient shape mismatch");
  Gradients<T> g = zero_gradients(cfg, params);
  Tensor<T> grad = upstream;
  for (int i = static_cast<int>(cfg.layers.size()) - 1; i >= 0; --i) {
    const LayerSpec& l = cfg.layers[i];
    const LayerParams<T>& lp = params.layers[i];
    const LayerActs<T>& la = acts.layers[i];
    const Tensor<T>& in = i == 0 ? acts.input : acts.layers[i - 1].out;
    if (l.kind == LayerKind::maxpool2) {
      Tensor<T> din(in.c, in.h, in.w);
      for (std::size_t j = 0; j < la.argmax.size(); ++j)
        din.v[la.argmax[j]] += grad.v[j];
      grad = std::move(din);
    } else {
      if (l.leaky_relu) {
        const Tensor<T>& pre = l.batchnorm ? la.bn_out : la.z;
        for (std::size_t j = 0; j < grad.v.size(); ++j)
          if (pre.v[j] <= T(0)) grad.v[j] *= T(kLeakySlope);
      }
      if (l.batchnorm) {
        const int n = la.z.h * la.z.w;
        Tensor<T> dz(la.z.c, la.z.h, la.z.w);
        for (int c = 0; c < l.out_channels; ++c) {
          const T inv = T(1) / std::sqrt(la.var[c] + T(kBatchNormEps));
          T dgamma = T(0), dbeta = T(0);
          for (int y = 0; y < la.z.h; ++y)
            for (int x = 0; x < la.z.w; ++x) {
              const T xhat = (la.z.at(c, y, x) - la.mean[c]) * inv;
              dgamma += grad.at(c, y, x) * xhat;
              dbeta += grad.at(c, y, x);
            }
          g.layers[i].gamma[c] += dgamma;
          g.layers[i].beta[c] += dbeta;
          if (acts.mode == RunMode::train) {
            const T coef = lp.gamma[c] * inv / T(n);
            for (int y = 0; y < la.z.h; ++y)
              for (int x = 0; x < la.z.w; ++x) {
                const T xhat = (la.z.at(c, y, x) - la.mean[c]) * inv;
                dz.at(c, y, x) =
                    coef * (T(n) * grad.at(c, y, x) - dbeta - xhat * dgamma);
              }
          } else {
            const T coef = lp.gamma[c] * inv;
            for (int y = 0; y < la.z.h; ++y)
              for (int x = 0; x < la.z.w; ++x)
                dz.at(c, y, x) = coef * grad.at(c, y, x);
          }
        }
        grad = std::move(dz);
      }
      Tensor<T> din;
      detail::conv_backward(in, lp.w, l.out_channels, l.kernel, grad,
                            g.layers[i].w, g.layers[i].b, din);
      grad = std::move(din);
    }
  }
  g.input = std::move(grad);
  return g;
}

template <class T>
void accumulate(Gradients<T>& into, const Gradients<T>& from) {
  auto add = [](std::vector<T>& a, const std::vector<T>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  for (std::size_t i = 0; i < into.layers.size(); ++i) {
    add(into.layers[i].w, from.layers[i].w);
    add(into.layers[i].b, from.layers[i].b);
    add(into.layers[i].gamma, from.layers[i].gamma);
    add(into.layers[i].beta, from.layers[i].beta);
  }
}

}  // namespace coopdet
