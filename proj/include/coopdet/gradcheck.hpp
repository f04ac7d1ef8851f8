#pragma once

#include <algorithm>
#include <functional>
#include <utility>

#include "coopdet/net.hpp"

namespace coopdet {

// Scalar loss over a network output, returning the loss and dL/d(output).
using OutputLoss =
    std::function<std::pair<double, Tensor<double>>(const Tensor<double>&)>;

inline double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({1e-4, std::abs(a), std::abs(n)});
}

// Central-finite-difference audit of backward() over every parameter entry
// and every input entry. Returns the max relative error. 64-bit only.
inline double grad_check(const NetworkConfig& cfg, const OutputLoss& loss_fn,
                         Parameters<double>& params, const Tensor<double>& input,
                         double eps = 1e-5) {
  const auto eval = [&]() {
    Activations<double> acts = forward(cfg, params, input, RunMode::train);
    return loss_fn(acts.output()).first;
  };
  Activations<double> acts = forward(cfg, params, input, RunMode::train);
  auto [loss0, up] = loss_fn(acts.output());
  (void)loss0;
  Gradients<double> g = backward(cfg, params, acts, up);

  double max_err = 0.0;
  auto probe = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + eps;
    const double lp = eval();
    slot = keep - eps;
    const double lm = eval();
    slot = keep;
    max_err = std::max(max_err, rel_error(analytic, (lp - lm) / (2.0 * eps)));
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    for (std::size_t j = 0; j < params.layers[i].w.size(); ++j)
      probe(params.layers[i].w[j], g.layers[i].w[j]);
    for (std::size_t j = 0; j < params.layers[i].b.size(); ++j)
      probe(params.layers[i].b[j], g.layers[i].b[j]);
    for (std::size_t j = 0; j < params.layers[i].gamma.size(); ++j)
      probe(params.layers[i].gamma[j], g.layers[i].gamma[j]);
    for (std::size_t j = 0; j < params.layers[i].beta.size(); ++j)
      probe(params.layers[i].beta[j], g.layers[i].beta[j]);
  }
  Tensor<double> in_copy = input;
  for (std::size_t j = 0; j < in_copy.v.size(); ++j) {
    const double keep = in_copy.v[j];
    in_copy.v[j] = keep + eps;
    Activations<double> ap = forward(cfg, params, in_copy, RunMode::train);
    const double lp = loss_fn(ap.output()).first;
    in_copy.v[j] = keep - eps;
    Activations<double> am = forward(cfg, params, in_copy, RunMode::train);
    const double lm = loss_fn(am.output()).first;
    in_copy.v[j] = keep;
    max_err = std::max(max_err,
                       rel_error(g.input.v[j], (lp - lm) / (2.0 * eps)));
  }
  return max_err;
}

}  // namespace coopdet
