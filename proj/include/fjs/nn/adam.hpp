#pragma once

#include <cmath>
#include <cstdint>

#include "fjs/nn/params.hpp"

namespace fjs::nn {

struct AdamConfig {
  double lr = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  NamedParams<Scalar> first;
  NamedParams<Scalar> second;

  AdamState() = default;
  AdamState(const NamedParams<Scalar>& params, AdamConfig cfg)
      : config(cfg), first(params.zeros_like()), second(params.zeros_like()) {}
};

/// Bias-corrected Adam update of `params` in place.
template <typename Scalar>
void adam_step(NamedParams<Scalar>& params, const NamedParams<Scalar>& grads, AdamState<Scalar>& state) {
  if (grads.size() != params.size() || state.first.size() != params.size())
    throw ShapeError("adam_step: gradient/state layout does not match parameters");
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<Scalar>(c.beta1);
  const auto b2 = static_cast<Scalar>(c.beta2);
  const auto step_size = static_cast<Scalar>(c.lr / bc1);
  const auto inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
  const auto eps = static_cast<Scalar>(c.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.value(i);
    const auto& g = grads.value(i);
    if (g.rows() != p.rows() || g.cols() != p.cols() || grads.name(i) != params.name(i))
      throw ShapeError("adam_step: gradient for '" + params.name(i) + "' does not match");
    auto& m = state.first.value(i);
    auto& v = state.second.value(i);
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.array() -= step_size * m.array() / ((v.array().sqrt() * inv_sqrt_bc2) + eps);
  }
}

}  // namespace fjs::nn
