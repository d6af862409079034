#pragma once

#include <cstdint>
#include <vector>

#include "flamegan/nn/tensor.hpp"

namespace flamegan::nn {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

/// First/second moments per parameter tensor, in the order the owning
/// network enumerates its parameters. Moments are allocated on first use.
template <typename Real>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor<Real>> m;
  std::vector<Tensor<Real>> v;
};

/// One bias-corrected Adam update of `params` in place.
template <typename Real>
void adam_step(const std::vector<Tensor<Real>*>& params,
               const std::vector<const Tensor<Real>*>& grads, AdamState<Real>& state);

}  // namespace flamegan::nn
