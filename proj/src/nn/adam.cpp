#include "flamegan/nn/adam.hpp"

#include <cmath>

namespace flamegan::nn {

template <typename Real>
void adam_step(const std::vector<Tensor<Real>*>& params,
               const std::vector<const Tensor<Real>*>& grads, AdamState<Real>& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (const Tensor<Real>* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: state/parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape() || params[i]->shape() != state.m[i].shape()) {
      throw DimensionError("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
  }

  ++state.step;
  const AdamConfig& c = state.config;
  const double t = double(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Real* p = params[i]->raw();
    const Real* g = grads[i]->raw();
    Real* m = state.m[i].raw();
    Real* v = state.v[i].raw();
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(params[i]->size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const double gj = g[j];
      const double mj = c.beta1 * m[j] + (1.0 - c.beta1) * gj;
      const double vj = c.beta2 * v[j] + (1.0 - c.beta2) * gj * gj;
      m[j] = Real(mj);
      v[j] = Real(vj);
      p[j] = Real(p[j] - c.learning_rate * (mj / correct1) / (std::sqrt(vj / correct2) + c.epsilon));
    }
  }
}

template void adam_step(const std::vector<Tensor<float>*>&, const std::vector<const Tensor<float>*>&,
                        AdamState<float>&);
template void adam_step(const std::vector<Tensor<double>*>&,
                        const std::vector<const Tensor<double>*>&, AdamState<double>&);

}  // namespace flamegan::nn
