#pragma once

// Differentiable building blocks. Every forward op is a pure function of its
// arguments (plus an explicit Rng for the stochastic ones); every backward op
// takes the forward inputs and the upstream gradient and returns exact
// analytic gradients.

#include <cstddef>
#include <vector>

#include "flamegan/nn/rng.hpp"
#include "flamegan/nn/tensor.hpp"

namespace flamegan::nn {

enum class Mode { train, infer };

struct ConvConfig {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// conv2d weights are [k][k][in][out]; conv2d_transpose weights are
/// [k][k][out][in], so a conv2d and a conv2d_transpose sharing one weight
/// tensor are adjoint maps.
template <typename Real>
struct ConvParams {
  Tensor<Real> weight;
  Tensor<Real> bias;
};

/// weight is [in][out]; out_j = sum_i W[i][j] x_i + b_j.
template <typename Real>
struct DenseParams {
  Tensor<Real> weight;
  Tensor<Real> bias;
};

template <typename Real>
struct ParamGrads {
  Tensor<Real> input;
  Tensor<Real> weight;
  Tensor<Real> bias;
};

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding);
std::size_t conv_transpose_output_extent(std::size_t in, std::size_t kernel,
                                         std::size_t stride, std::size_t padding);

template <typename Real>
Tensor<Real> conv2d(const Tensor<Real>& input, const ConvParams<Real>& params, ConvConfig cfg);

/// When `want_params` is false only the input gradient is computed.
template <typename Real>
ParamGrads<Real> conv2d_backward(const Tensor<Real>& input, const ConvParams<Real>& params,
                                 ConvConfig cfg, const Tensor<Real>& grad_output,
                                 bool want_params = true);

template <typename Real>
Tensor<Real> conv2d_transpose(const Tensor<Real>& input, const ConvParams<Real>& params,
                              ConvConfig cfg);

template <typename Real>
ParamGrads<Real> conv2d_transpose_backward(const Tensor<Real>& input,
                                           const ConvParams<Real>& params, ConvConfig cfg,
                                           const Tensor<Real>& grad_output,
                                           bool want_params = true);

/// Input is [N][...]; everything after the batch axis is flattened.
template <typename Real>
Tensor<Real> dense(const Tensor<Real>& input, const DenseParams<Real>& params);

template <typename Real>
ParamGrads<Real> dense_backward(const Tensor<Real>& input, const DenseParams<Real>& params,
                                const Tensor<Real>& grad_output, bool want_params = true);

// ---------------------------------------------------------------------------
// Batch normalization over every axis but the last (channels).

template <typename Real>
struct BatchNormParams {
  Tensor<Real> gamma;
  Tensor<Real> beta;
  Tensor<Real> running_mean;
  Tensor<Real> running_var;
};

template <typename Real>
BatchNormParams<Real> make_batch_norm(std::size_t channels);

struct BatchNormConfig {
  double momentum = 0.99;
  double epsilon = 1e-5;
};

template <typename Real>
struct BatchNormResult {
  Tensor<Real> output;
  Tensor<Real> normalized;       // x_hat, kept for backward (train mode)
  std::vector<Real> mean;        // batch statistics (train mode)
  std::vector<Real> variance;
  std::vector<Real> inv_std;
};

/// Train mode standardizes with batch statistics and needs at least two rows
/// per channel; infer mode applies the running statistics.
template <typename Real>
BatchNormResult<Real> batch_norm(const Tensor<Real>& input, const BatchNormParams<Real>& params,
                                 Mode mode, BatchNormConfig cfg = {});

/// Exponential moving average of the batch statistics.
template <typename Real>
void update_running_stats(BatchNormParams<Real>& params, const BatchNormResult<Real>& result,
                          double momentum);

template <typename Real>
struct BatchNormGrads {
  Tensor<Real> input;
  Tensor<Real> gamma;
  Tensor<Real> beta;
};

template <typename Real>
BatchNormGrads<Real> batch_norm_backward(const BatchNormResult<Real>& forward,
                                         const BatchNormParams<Real>& params,
                                         const Tensor<Real>& grad_output);

// ---------------------------------------------------------------------------
// Stochastic regularizers. Both are the identity in infer mode.

template <typename Real>
struct DropoutResult {
  Tensor<Real> output;
  Tensor<Real> mask;  // 0 or 1/(1-rate); empty when the op was the identity
};

/// Inverted dropout.
template <typename Real>
DropoutResult<Real> dropout(const Tensor<Real>& input, double rate, Rng& rng, Mode mode);

template <typename Real>
Tensor<Real> dropout_backward(const DropoutResult<Real>& forward, const Tensor<Real>& grad_output);

template <typename Real>
Tensor<Real> gaussian_noise(const Tensor<Real>& input, double stddev, Rng& rng, Mode mode);

// ---------------------------------------------------------------------------

struct Activation {
  enum class Kind { identity, relu, leaky_relu, sigmoid, tanh };
  Kind kind = Kind::identity;
  double slope = 0.2;  // leaky_relu only

  static Activation relu() { return {Kind::relu, 0.0}; }
  static Activation leaky_relu(double slope) { return {Kind::leaky_relu, slope}; }
  static Activation sigmoid() { return {Kind::sigmoid, 0.0}; }
  static Activation tanh() { return {Kind::tanh, 0.0}; }
};

template <typename Real>
Tensor<Real> activate(const Tensor<Real>& input, Activation act);

/// Uses both the pre-activation input and the activation output.
template <typename Real>
Tensor<Real> activate_backward(const Tensor<Real>& input, const Tensor<Real>& output,
                               Activation act, const Tensor<Real>& grad_output);

// ---------------------------------------------------------------------------

/// fan_in is the product of every axis but the last: k*k*in for conv
/// weights, in for dense weights.
std::size_t fan_in_of(const Shape& weight_shape);

/// Zero-mean Gaussian with variance 2 / fan_in.
template <typename Real>
Tensor<Real> msra_init(const Shape& shape, Rng& rng);

template <typename Real>
Tensor<Real> gaussian_init(const Shape& shape, double stddev, Rng& rng);

// ---------------------------------------------------------------------------

inline constexpr double kProbabilityClamp = 1e-7;

template <typename Real>
struct LossResult {
  double loss = 0.0;
  Tensor<Real> grad;  // d loss / d input
};

/// -mean(t log p + (1-t) log(1-p)) with p clamped to [eps, 1-eps]. The
/// gradient is taken w.r.t. the (clamped) probabilities.
template <typename Real>
LossResult<Real> bce_loss(const Tensor<Real>& probabilities, const std::vector<Real>& targets);

/// Same objective evaluated from logits; the gradient is w.r.t. the logits
/// and equals (sigmoid(l) - t) / n.
template <typename Real>
LossResult<Real> bce_with_logits(const Tensor<Real>& logits, const std::vector<Real>& targets);

}  // namespace flamegan::nn
