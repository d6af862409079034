#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace flamegan::nn {

/// One tensor to perturb: its live values (read by `loss`) and the analytic
/// gradient of `loss` with respect to them.
struct GradProbe {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckResult {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t probes = 0;
};

/// |a - n| / max(|a|, |n|, 1e-8).
double relative_error(double analytic, double numeric);

/// Central differences (f(x+eps) - f(x-eps)) / 2eps against the analytic
/// gradient. At most `max_per_tensor` coordinates per probe are perturbed,
/// chosen by `seed`; 0 checks every coordinate.
GradCheckResult grad_check(const std::function<double()>& loss, std::span<const GradProbe> probes,
                           double eps, std::size_t max_per_tensor = 0, std::uint64_t seed = 0);

/// Finite-difference checks of every layer type at small random geometry.
/// Returns one result per layer.
std::vector<GradCheckResult> check_layers(double eps = 1e-6, std::uint64_t seed = 17);

}  // namespace flamegan::nn
