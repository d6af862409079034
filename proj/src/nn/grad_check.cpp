#include "flamegan/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flamegan/nn/layers.hpp"
#include "flamegan/nn/rng.hpp"

namespace flamegan::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<double()>& loss, std::span<const GradProbe> probes,
                           double eps, std::size_t max_per_tensor, std::uint64_t seed) {
  GradCheckResult result;
  Rng rng(seed);
  for (const GradProbe& probe : probes) {
    std::vector<std::size_t> coords(probe.values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_per_tensor != 0 && coords.size() > max_per_tensor) {
      for (std::size_t i = 0; i < max_per_tensor; ++i) {
        std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
      }
      coords.resize(max_per_tensor);
    }
    for (std::size_t idx : coords) {
      const double saved = probe.values[idx];
      probe.values[idx] = saved + eps;
      const double plus = loss();
      probe.values[idx] = saved - eps;
      const double minus = loss();
      probe.values[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double err = relative_error(probe.analytic[idx], numeric);
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.name = probe.name + "[" + std::to_string(idx) + "]";
      }
      ++result.probes;
    }
  }
  return result;
}

namespace {

using T = Tensor<double>;

T random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  return gaussian_init<double>(shape, scale, rng);
}

double project(const T& out, const T& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

GradCheckResult named(GradCheckResult r, std::string name) {
  r.name = std::move(name) + (r.name.empty() ? "" : ": worst at " + r.name);
  return r;
}

}  // namespace

std::vector<GradCheckResult> check_layers(double eps, std::uint64_t seed) {
  std::vector<GradCheckResult> results;
  Rng rng(seed);

  {  // conv2d: 5x6 image, 2 -> 3 channels
    T x = random_tensor({2, 5, 6, 2}, rng);
    ConvParams<double> p{random_tensor({3, 3, 2, 3}, rng, 0.5), random_tensor({3}, rng, 0.1)};
    const ConvConfig cfg{2, 1};
    const T w = random_tensor(conv2d(x, p, cfg).shape(), rng);
    const auto g = conv2d_backward(x, p, cfg, w);
    const GradProbe probes[] = {{"input", x.values(), g.input.values()},
                                {"weight", p.weight.values(), g.weight.values()},
                                {"bias", p.bias.values(), g.bias.values()}};
    results.push_back(named(grad_check([&] { return project(conv2d(x, p, cfg), w); }, probes, eps),
                            "conv2d"));
  }
  {  // conv2d_transpose, exact doubling geometry
    T x = random_tensor({2, 3, 4, 3}, rng);
    ConvParams<double> p{random_tensor({4, 4, 2, 3}, rng, 0.5), random_tensor({2}, rng, 0.1)};
    const ConvConfig cfg{2, 1};
    const T w = random_tensor(conv2d_transpose(x, p, cfg).shape(), rng);
    const auto g = conv2d_transpose_backward(x, p, cfg, w);
    const GradProbe probes[] = {{"input", x.values(), g.input.values()},
                                {"weight", p.weight.values(), g.weight.values()},
                                {"bias", p.bias.values(), g.bias.values()}};
    results.push_back(named(
        grad_check([&] { return project(conv2d_transpose(x, p, cfg), w); }, probes, eps),
        "conv2d_transpose"));
  }
  {
    T x = random_tensor({3, 7}, rng);
    DenseParams<double> p{random_tensor({7, 4}, rng, 0.5), random_tensor({4}, rng, 0.1)};
    const T w = random_tensor({3, 4}, rng);
    const auto g = dense_backward(x, p, w);
    const GradProbe probes[] = {{"input", x.values(), g.input.values()},
                                {"weight", p.weight.values(), g.weight.values()},
                                {"bias", p.bias.values(), g.bias.values()}};
    results.push_back(
        named(grad_check([&] { return project(dense(x, p), w); }, probes, eps), "dense"));
  }
  {
    T x = random_tensor({4, 2, 3, 3}, rng);
    auto p = make_batch_norm<double>(3);
    p.gamma = random_tensor({3}, rng);
    p.beta = random_tensor({3}, rng);
    const T w = random_tensor(x.shape(), rng);
    const auto fwd = batch_norm(x, p, Mode::train);
    const auto g = batch_norm_backward(fwd, p, w);
    const GradProbe probes[] = {{"input", x.values(), g.input.values()},
                                {"gamma", p.gamma.values(), g.gamma.values()},
                                {"beta", p.beta.values(), g.beta.values()}};
    results.push_back(named(
        grad_check([&] { return project(batch_norm(x, p, Mode::train).output, w); }, probes, eps),
        "batch_norm"));
  }
  const std::pair<const char*, Activation> acts[] = {{"relu", Activation::relu()},
                                                     {"leaky_relu", Activation::leaky_relu(0.2)},
                                                     {"sigmoid", Activation::sigmoid()},
                                                     {"tanh", Activation::tanh()}};
  for (const auto& [name, act] : acts) {
    T x = random_tensor({2, 9}, rng);
    // Keep samples away from the kink at zero.
    for (double& v : x.values()) v += v >= 0 ? 0.05 : -0.05;
    const T w = random_tensor(x.shape(), rng);
    const T y = activate(x, act);
    const T g = activate_backward(x, y, act, w);
    const GradProbe probes[] = {{"input", x.values(), g.values()}};
    results.push_back(
        named(grad_check([&] { return project(activate(x, act), w); }, probes, eps), name));
  }
  {
    T p = random_tensor({2, 3}, rng);
    for (double& v : p.values()) v = 0.05 + 0.9 / (1.0 + std::exp(-v));
    const std::vector<double> t{1, 0, 1, 0, 0, 1};
    const auto r = bce_loss(p, t);
    const GradProbe probes[] = {{"pred", p.values(), r.grad.values()}};
    results.push_back(named(grad_check([&] { return bce_loss(p, t).loss; }, probes, eps), "bce_loss"));
  }
  return results;
}

}  // namespace flamegan::nn
