#include "flamegan/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flamegan/nn/kernels.hpp"

namespace flamegan::nn {

namespace {

using Index = std::ptrdiff_t;

template <typename Real>
void require_rank(const Tensor<Real>& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_string(t.shape()));
  }
}

template <typename Real>
void check_conv_params(const Tensor<Real>& input, const ConvParams<Real>& params,
                       std::size_t in_axis, const char* what) {
  require_rank(input, 4, what);
  const Shape& w = params.weight.shape();
  if (w.size() != 4 || w[0] != w[1]) {
    throw DimensionError(std::string(what) + ": weight must be [k][k][a][b], got " +
                         shape_string(w));
  }
  if (w[in_axis] != input.dim(3)) {
    throw DimensionError(std::string(what) + ": input has " + std::to_string(input.dim(3)) +
                         " channels, weight expects " + std::to_string(w[in_axis]));
  }
  const std::size_t out_channels = w[in_axis == 2 ? 3 : 2];
  if (params.bias.shape() != Shape{out_channels}) {
    throw DimensionError(std::string(what) + ": bias shape " +
                         shape_string(params.bias.shape()));
  }
}

template <typename Real>
void add_bias(Real* data, std::size_t rows, const Tensor<Real>& bias) {
  const std::size_t c = bias.size();
  const Real* b = bias.raw();
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    Real* row = data + r * c;
#pragma omp simd
    for (std::size_t j = 0; j < c; ++j) row[j] += b[j];
  }
}

template <typename Real>
void accumulate_bias_grad(const Real* grad, std::size_t rows, std::size_t channels,
                          Real* out) {
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < static_cast<Index>(channels); ++j) {
    Real sum = 0;
    for (std::size_t r = 0; r < rows; ++r) sum += grad[r * channels + j];
    out[j] += sum;
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0) throw DimensionError("stride must be >= 1");
  if (in + 2 * padding < kernel) throw DimensionError("kernel larger than padded input");
  return (in + 2 * padding - kernel) / stride + 1;
}

std::size_t conv_transpose_output_extent(std::size_t in, std::size_t kernel,
                                         std::size_t stride, std::size_t padding) {
  if (stride == 0) throw DimensionError("stride must be >= 1");
  const std::size_t grown = (in - 1) * stride + kernel;
  if (grown <= 2 * padding) throw DimensionError("padding consumes the whole output");
  return grown - 2 * padding;
}

// ---------------------------------------------------------------------------
// conv2d

template <typename Real>
Tensor<Real> conv2d(const Tensor<Real>& input, const ConvParams<Real>& params, ConvConfig cfg) {
  check_conv_params(input, params, 2, "conv2d");
  const std::size_t n = input.dim(0);
  const std::size_t k = params.weight.dim(0);
  const std::size_t out_c = params.weight.dim(3);
  const auto g =
      kernels::make_geometry(input.dim(1), input.dim(2), input.dim(3), k, cfg.stride, cfg.padding);

  Tensor<Real> out({n, g.out_h, g.out_w, out_c});
  std::vector<Real> col(g.positions() * g.patch_size());
  for (std::size_t s = 0; s < n; ++s) {
    kernels::im2col(input.raw() + s * input.stride0(), g, col.data());
    kernels::gemm_nn(g.positions(), out_c, g.patch_size(), col.data(), params.weight.raw(),
                     out.raw() + s * out.stride0(), false);
  }
  add_bias(out.raw(), n * g.positions(), params.bias);
  return out;
}

template <typename Real>
ParamGrads<Real> conv2d_backward(const Tensor<Real>& input, const ConvParams<Real>& params,
                                 ConvConfig cfg, const Tensor<Real>& grad_output,
                                 bool want_params) {
  check_conv_params(input, params, 2, "conv2d_backward");
  const std::size_t n = input.dim(0);
  const std::size_t k = params.weight.dim(0);
  const std::size_t out_c = params.weight.dim(3);
  const auto g =
      kernels::make_geometry(input.dim(1), input.dim(2), input.dim(3), k, cfg.stride, cfg.padding);
  require_shape(grad_output, {n, g.out_h, g.out_w, out_c}, "conv2d_backward grad");

  ParamGrads<Real> grads;
  grads.input = Tensor<Real>(input.shape());
  if (want_params) {
    grads.weight = Tensor<Real>(params.weight.shape());
    grads.bias = Tensor<Real>(params.bias.shape());
  }
  std::vector<Real> col(g.positions() * g.patch_size());
  for (std::size_t s = 0; s < n; ++s) {
    const Real* dy = grad_output.raw() + s * grad_output.stride0();
    if (want_params) {
      kernels::im2col(input.raw() + s * input.stride0(), g, col.data());
      kernels::gemm_tn(g.patch_size(), out_c, g.positions(), col.data(), dy,
                       grads.weight.raw(), true);
    }
    kernels::gemm_nt(g.positions(), g.patch_size(), out_c, dy, params.weight.raw(), col.data(),
                     false);
    kernels::col2im(col.data(), g, grads.input.raw() + s * input.stride0());
  }
  if (want_params) {
    accumulate_bias_grad(grad_output.raw(), n * g.positions(), out_c, grads.bias.raw());
  }
  return grads;
}

// ---------------------------------------------------------------------------
// conv2d_transpose: the forward map is the adjoint of conv2d's forward map
// for the output geometry.

template <typename Real>
Tensor<Real> conv2d_transpose(const Tensor<Real>& input, const ConvParams<Real>& params,
                              ConvConfig cfg) {
  check_conv_params(input, params, 3, "conv2d_transpose");
  const std::size_t n = input.dim(0);
  const std::size_t k = params.weight.dim(0);
  const std::size_t in_c = input.dim(3);
  const std::size_t out_c = params.weight.dim(2);
  const std::size_t out_h = conv_transpose_output_extent(input.dim(1), k, cfg.stride, cfg.padding);
  const std::size_t out_w = conv_transpose_output_extent(input.dim(2), k, cfg.stride, cfg.padding);
  const auto g = kernels::make_geometry(out_h, out_w, out_c, k, cfg.stride, cfg.padding);

  Tensor<Real> out({n, out_h, out_w, out_c});
  std::vector<Real> col(g.positions() * g.patch_size());
  for (std::size_t s = 0; s < n; ++s) {
    kernels::gemm_nt(g.positions(), g.patch_size(), in_c, input.raw() + s * input.stride0(),
                     params.weight.raw(), col.data(), false);
    kernels::col2im(col.data(), g, out.raw() + s * out.stride0());
  }
  add_bias(out.raw(), n * out_h * out_w, params.bias);
  return out;
}

template <typename Real>
ParamGrads<Real> conv2d_transpose_backward(const Tensor<Real>& input,
                                           const ConvParams<Real>& params, ConvConfig cfg,
                                           const Tensor<Real>& grad_output, bool want_params) {
  check_conv_params(input, params, 3, "conv2d_transpose_backward");
  const std::size_t n = input.dim(0);
  const std::size_t k = params.weight.dim(0);
  const std::size_t in_c = input.dim(3);
  const std::size_t out_c = params.weight.dim(2);
  const std::size_t out_h = conv_transpose_output_extent(input.dim(1), k, cfg.stride, cfg.padding);
  const std::size_t out_w = conv_transpose_output_extent(input.dim(2), k, cfg.stride, cfg.padding);
  require_shape(grad_output, {n, out_h, out_w, out_c}, "conv2d_transpose_backward grad");
  const auto g = kernels::make_geometry(out_h, out_w, out_c, k, cfg.stride, cfg.padding);

  ParamGrads<Real> grads;
  grads.input = Tensor<Real>(input.shape());
  if (want_params) {
    grads.weight = Tensor<Real>(params.weight.shape());
    grads.bias = Tensor<Real>(params.bias.shape());
  }
  std::vector<Real> col(g.positions() * g.patch_size());
  for (std::size_t s = 0; s < n; ++s) {
    kernels::im2col(grad_output.raw() + s * grad_output.stride0(), g, col.data());
    kernels::gemm_nn(g.positions(), in_c, g.patch_size(), col.data(), params.weight.raw(),
                     grads.input.raw() + s * input.stride0(), false);
    if (want_params) {
      kernels::gemm_tn(g.patch_size(), in_c, g.positions(), col.data(),
                       input.raw() + s * input.stride0(), grads.weight.raw(), true);
    }
  }
  if (want_params) {
    accumulate_bias_grad(grad_output.raw(), n * out_h * out_w, out_c, grads.bias.raw());
  }
  return grads;
}

// ---------------------------------------------------------------------------
// dense

template <typename Real>
Tensor<Real> dense(const Tensor<Real>& input, const DenseParams<Real>& params) {
  if (input.rank() < 1) throw DimensionError("dense: scalar input");
  const std::size_t n = input.dim(0);
  const std::size_t features = input.stride0();
  const Shape& w = params.weight.shape();
  if (w.size() != 2 || w[0] != features) {
    throw DimensionError("dense: input length " + std::to_string(features) +
                         " does not match weight " + shape_string(w));
  }
  if (params.bias.shape() != Shape{w[1]}) throw DimensionError("dense: bias shape mismatch");
  Tensor<Real> out({n, w[1]});
  kernels::gemm_nn(n, w[1], features, input.raw(), params.weight.raw(), out.raw(), false);
  add_bias(out.raw(), n, params.bias);
  return out;
}

template <typename Real>
ParamGrads<Real> dense_backward(const Tensor<Real>& input, const DenseParams<Real>& params,
                                const Tensor<Real>& grad_output, bool want_params) {
  const std::size_t n = input.dim(0);
  const std::size_t features = input.stride0();
  const std::size_t outputs = params.weight.dim(1);
  require_shape(grad_output, {n, outputs}, "dense_backward grad");
  ParamGrads<Real> grads;
  grads.input = Tensor<Real>(input.shape());
  kernels::gemm_nt(n, features, outputs, grad_output.raw(), params.weight.raw(),
                   grads.input.raw(), false);
  if (want_params) {
    grads.weight = Tensor<Real>(params.weight.shape());
    grads.bias = Tensor<Real>(params.bias.shape());
    kernels::gemm_tn(features, outputs, n, input.raw(), grad_output.raw(), grads.weight.raw(),
                     false);
    accumulate_bias_grad(grad_output.raw(), n, outputs, grads.bias.raw());
  }
  return grads;
}

// ---------------------------------------------------------------------------
// batch norm

template <typename Real>
BatchNormParams<Real> make_batch_norm(std::size_t channels) {
  return {Tensor<Real>({channels}, Real(1)), Tensor<Real>({channels}, Real(0)),
          Tensor<Real>({channels}, Real(0)), Tensor<Real>({channels}, Real(1))};
}

template <typename Real>
BatchNormResult<Real> batch_norm(const Tensor<Real>& input, const BatchNormParams<Real>& params,
                                 Mode mode, BatchNormConfig cfg) {
  if (input.rank() < 2) throw DimensionError("batch_norm: need a batch axis and channels");
  const std::size_t channels = input.shape().back();
  if (params.gamma.size() != channels || params.beta.size() != channels ||
      params.running_mean.size() != channels || params.running_var.size() != channels) {
    throw DimensionError("batch_norm: parameter channels do not match input");
  }
  const std::size_t rows = input.size() / channels;
  const Real* x = input.raw();

  BatchNormResult<Real> result;
  result.output = Tensor<Real>(input.shape());
  Real* y = result.output.raw();

  if (mode == Mode::infer) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double inv = 1.0 / std::sqrt(double(params.running_var[c]) + cfg.epsilon);
      const Real scale = Real(params.gamma[c] * inv);
      const Real shift = Real(params.beta[c] - params.running_mean[c] * params.gamma[c] * inv);
      for (std::size_t r = 0; r < rows; ++r) y[r * channels + c] = x[r * channels + c] * scale + shift;
    }
    return result;
  }

  if (input.dim(0) < 2) throw BatchError("batch_norm in train mode needs a batch of at least 2");
  result.normalized = Tensor<Real>(input.shape());
  result.mean.assign(channels, Real(0));
  result.variance.assign(channels, Real(0));
  result.inv_std.assign(channels, Real(0));
  Real* xhat = result.normalized.raw();

#pragma omp parallel for schedule(static)
  for (Index c = 0; c < static_cast<Index>(channels); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows; ++r) sum += x[r * channels + c];
    const double mean = sum / double(rows);
    double sq = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = x[r * channels + c] - mean;
      sq += d * d;
    }
    const double var = sq / double(rows);
    const double inv = 1.0 / std::sqrt(var + cfg.epsilon);
    result.mean[c] = Real(mean);
    result.variance[c] = Real(var);
    result.inv_std[c] = Real(inv);
    const Real g = params.gamma[c];
    const Real b = params.beta[c];
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * channels + c;
      xhat[i] = Real((x[i] - mean) * inv);
      y[i] = g * xhat[i] + b;
    }
  }
  return result;
}

template <typename Real>
void update_running_stats(BatchNormParams<Real>& params, const BatchNormResult<Real>& result,
                          double momentum) {
  if (result.mean.size() != params.running_mean.size()) {
    throw StateError("update_running_stats needs a train-mode batch_norm result");
  }
  for (std::size_t c = 0; c < result.mean.size(); ++c) {
    params.running_mean[c] =
        Real(momentum * params.running_mean[c] + (1.0 - momentum) * result.mean[c]);
    params.running_var[c] =
        Real(momentum * params.running_var[c] + (1.0 - momentum) * result.variance[c]);
  }
}

template <typename Real>
BatchNormGrads<Real> batch_norm_backward(const BatchNormResult<Real>& forward,
                                         const BatchNormParams<Real>& params,
                                         const Tensor<Real>& grad_output) {
  if (forward.normalized.empty()) throw StateError("batch_norm_backward needs a train-mode forward");
  require_shape(grad_output, forward.normalized.shape(), "batch_norm_backward grad");
  const std::size_t channels = params.gamma.size();
  const std::size_t rows = grad_output.size() / channels;
  BatchNormGrads<Real> grads{Tensor<Real>(grad_output.shape()), Tensor<Real>({channels}),
                             Tensor<Real>({channels})};
  const Real* dy = grad_output.raw();
  const Real* xhat = forward.normalized.raw();
  Real* dx = grads.input.raw();

#pragma omp parallel for schedule(static)
  for (Index c = 0; c < static_cast<Index>(channels); ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * channels + c;
      sum_dy += dy[i];
      sum_dy_xhat += double(dy[i]) * xhat[i];
    }
    grads.beta[c] = Real(sum_dy);
    grads.gamma[c] = Real(sum_dy_xhat);
    const double scale = double(params.gamma[c]) * forward.inv_std[c] / double(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * channels + c;
      dx[i] = Real(scale * (double(rows) * dy[i] - sum_dy - xhat[i] * sum_dy_xhat));
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// dropout / noise

template <typename Real>
DropoutResult<Real> dropout(const Tensor<Real>& input, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParamError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::infer || rate == 0.0) return {input, {}};
  DropoutResult<Real> result{Tensor<Real>(input.shape()), Tensor<Real>(input.shape())};
  const Real keep_scale = Real(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < input.size(); ++i) {
    const Real m = rng.uniform() < rate ? Real(0) : keep_scale;
    result.mask[i] = m;
    result.output[i] = input[i] * m;
  }
  return result;
}

template <typename Real>
Tensor<Real> dropout_backward(const DropoutResult<Real>& forward, const Tensor<Real>& grad_output) {
  if (forward.mask.empty()) return grad_output;
  require_shape(grad_output, forward.mask.shape(), "dropout_backward grad");
  Tensor<Real> out(grad_output.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = grad_output[i] * forward.mask[i];
  return out;
}

template <typename Real>
Tensor<Real> gaussian_noise(const Tensor<Real>& input, double stddev, Rng& rng, Mode mode) {
  if (stddev < 0.0) throw ParamError("noise stddev must be >= 0");
  if (mode == Mode::infer || stddev == 0.0) return input;
  Tensor<Real> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] + Real(stddev * rng.normal());
  return out;
}

// ---------------------------------------------------------------------------
// activations

template <typename Real>
Tensor<Real> activate(const Tensor<Real>& input, Activation act) {
  Tensor<Real> out(input.shape());
  const Real* x = input.raw();
  Real* y = out.raw();
  const Index n = static_cast<Index>(input.size());
  switch (act.kind) {
    case Activation::Kind::identity:
      return input;
    case Activation::Kind::relu:
#pragma omp parallel for simd schedule(static)
      for (Index i = 0; i < n; ++i) y[i] = x[i] > Real(0) ? x[i] : Real(0);
      break;
    case Activation::Kind::leaky_relu: {
      const Real slope = Real(act.slope);
#pragma omp parallel for simd schedule(static)
      for (Index i = 0; i < n; ++i) y[i] = x[i] > Real(0) ? x[i] : slope * x[i];
      break;
    }
    case Activation::Kind::sigmoid:
#pragma omp parallel for schedule(static)
      for (Index i = 0; i < n; ++i) {
        // Split on sign so exp never overflows.
        if (x[i] >= Real(0)) {
          y[i] = Real(1) / (Real(1) + std::exp(-x[i]));
        } else {
          const Real e = std::exp(x[i]);
          y[i] = e / (Real(1) + e);
        }
      }
      break;
    case Activation::Kind::tanh:
#pragma omp parallel for schedule(static)
      for (Index i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
      break;
  }
  return out;
}

template <typename Real>
Tensor<Real> activate_backward(const Tensor<Real>& input, const Tensor<Real>& output,
                               Activation act, const Tensor<Real>& grad_output) {
  require_shape(grad_output, input.shape(), "activate_backward grad");
  Tensor<Real> dx(input.shape());
  const Real* x = input.raw();
  const Real* y = output.raw();
  const Real* dy = grad_output.raw();
  Real* d = dx.raw();
  const Index n = static_cast<Index>(input.size());
  switch (act.kind) {
    case Activation::Kind::identity:
      return grad_output;
    case Activation::Kind::relu:
#pragma omp parallel for simd schedule(static)
      for (Index i = 0; i < n; ++i) d[i] = x[i] > Real(0) ? dy[i] : Real(0);
      break;
    case Activation::Kind::leaky_relu: {
      const Real slope = Real(act.slope);
#pragma omp parallel for simd schedule(static)
      for (Index i = 0; i < n; ++i) d[i] = x[i] > Real(0) ? dy[i] : slope * dy[i];
      break;
    }
    case Activation::Kind::sigmoid:
#pragma omp parallel for simd schedule(static)
      for (Index i = 0; i < n; ++i) d[i] = dy[i] * y[i] * (Real(1) - y[i]);
      break;
    case Activation::Kind::tanh:
#pragma omp parallel for simd schedule(static)
      for (Index i = 0; i < n; ++i) d[i] = dy[i] * (Real(1) - y[i] * y[i]);
      break;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// init

std::size_t fan_in_of(const Shape& weight_shape) {
  if (weight_shape.empty()) throw DimensionError("fan_in of a scalar");
  if (weight_shape.size() == 1) return weight_shape[0];
  return shape_size(weight_shape) / weight_shape.back();
}

template <typename Real>
Tensor<Real> gaussian_init(const Shape& shape, double stddev, Rng& rng) {
  Tensor<Real> out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Real(stddev * rng.normal());
  return out;
}

template <typename Real>
Tensor<Real> msra_init(const Shape& shape, Rng& rng) {
  return gaussian_init<Real>(shape, std::sqrt(2.0 / double(fan_in_of(shape))), rng);
}

// ---------------------------------------------------------------------------
// losses

template <typename Real>
LossResult<Real> bce_loss(const Tensor<Real>& probabilities, const std::vector<Real>& targets) {
  if (probabilities.size() != targets.size() || targets.empty()) {
    throw DimensionError("bce_loss: prediction/target length mismatch");
  }
  const double n = double(targets.size());
  LossResult<Real> result{0.0, Tensor<Real>(probabilities.shape())};
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double p = std::clamp(double(probabilities[i]), kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double t = targets[i];
    total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    result.grad[i] = Real((-t / p + (1.0 - t) / (1.0 - p)) / n);
  }
  result.loss = total / n;
  return result;
}

template <typename Real>
LossResult<Real> bce_with_logits(const Tensor<Real>& logits, const std::vector<Real>& targets) {
  if (logits.size() != targets.size() || targets.empty()) {
    throw DimensionError("bce_with_logits: logit/target length mismatch");
  }
  const double n = double(targets.size());
  LossResult<Real> result{0.0, Tensor<Real>(logits.shape())};
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double l = logits[i];
    const double t = targets[i];
    total += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
    const double p = l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
    result.grad[i] = Real((p - t) / n);
  }
  result.loss = total / n;
  return result;
}

// ---------------------------------------------------------------------------

#define FLAMEGAN_INSTANTIATE(R)                                                                \
  template Tensor<R> conv2d(const Tensor<R>&, const ConvParams<R>&, ConvConfig);               \
  template ParamGrads<R> conv2d_backward(const Tensor<R>&, const ConvParams<R>&, ConvConfig,   \
                                         const Tensor<R>&, bool);                              \
  template Tensor<R> conv2d_transpose(const Tensor<R>&, const ConvParams<R>&, ConvConfig);     \
  template ParamGrads<R> conv2d_transpose_backward(const Tensor<R>&, const ConvParams<R>&,     \
                                                   ConvConfig, const Tensor<R>&, bool);        \
  template Tensor<R> dense(const Tensor<R>&, const DenseParams<R>&);                           \
  template ParamGrads<R> dense_backward(const Tensor<R>&, const DenseParams<R>&,               \
                                        const Tensor<R>&, bool);                               \
  template BatchNormParams<R> make_batch_norm<R>(std::size_t);                                 \
  template BatchNormResult<R> batch_norm(const Tensor<R>&, const BatchNormParams<R>&, Mode,    \
                                         BatchNormConfig);                                     \
  template void update_running_stats(BatchNormParams<R>&, const BatchNormResult<R>&, double);  \
  template BatchNormGrads<R> batch_norm_backward(const BatchNormResult<R>&,                    \
                                                 const BatchNormParams<R>&, const Tensor<R>&); \
  template DropoutResult<R> dropout(const Tensor<R>&, double, Rng&, Mode);                     \
  template Tensor<R> dropout_backward(const DropoutResult<R>&, const Tensor<R>&);              \
  template Tensor<R> gaussian_noise(const Tensor<R>&, double, Rng&, Mode);                     \
  template Tensor<R> activate(const Tensor<R>&, Activation);                                   \
  template Tensor<R> activate_backward(const Tensor<R>&, const Tensor<R>&, Activation,         \
                                       const Tensor<R>&);                                      \
  template Tensor<R> msra_init<R>(const Shape&, Rng&);                                         \
  template Tensor<R> gaussian_init<R>(const Shape&, double, Rng&);                             \
  template LossResult<R> bce_loss(const Tensor<R>&, const std::vector<R>&);                    \
  template LossResult<R> bce_with_logits(const Tensor<R>&, const std::vector<R>&);

FLAMEGAN_INSTANTIATE(float)
FLAMEGAN_INSTANTIATE(double)

#undef FLAMEGAN_INSTANTIATE

}  // namespace flamegan::nn
