#include "flamegan/error.hpp"
#include "flamegan/gan.hpp"

namespace flamegan {

namespace {

using DTensor = nn::Tensor<double>;

DTensor uniform_tensor(const nn::Shape& shape, nn::Rng& rng) {
  DTensor t(shape);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

ForwardOptions exact_options() {
  ForwardOptions o;
  o.mode = nn::Mode::train;
  o.stochastic = false;
  return o;
}

template <typename Net>
std::vector<nn::GradCheckResult> run_checks(Net& net, DTensor& input, const DTensor& input_grad,
                                            const std::vector<DTensor>& grads,
                                            const std::function<double()>& loss, double eps,
                                            std::uint64_t seed, std::size_t max_per_tensor) {
  std::vector<nn::GradCheckResult> out;
  const nn::GradProbe in_probe{"input", input.values(), input_grad.values()};
  auto r = nn::grad_check(loss, std::span(&in_probe, 1), eps, max_per_tensor, seed);
  r.name = "input";
  out.push_back(r);

  const auto params = net.parameters();
  const auto names = net.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const nn::GradProbe probe{names[i], params[i]->values(), grads[i].values()};
    auto res = nn::grad_check(loss, std::span(&probe, 1), eps, max_per_tensor, seed + i + 1);
    res.name = names[i];
    out.push_back(res);
  }
  return out;
}

}  // namespace

std::vector<nn::GradCheckResult> check_discriminator(const NetSpec& spec, double eps,
                                                     std::uint64_t seed,
                                                     std::size_t max_per_tensor) {
  spec.validate();
  nn::Rng rng(seed);
  BasicDiscriminator<double> disc(spec, rng);
  DTensor x = uniform_tensor({2, spec.input.height, spec.input.width, spec.input.channels}, rng);
  const std::vector<double> targets{1.0, 0.0};
  const ForwardOptions opts = exact_options();

  const auto loss = [&] {
    return nn::bce_with_logits(disc.forward(x, opts, nullptr), targets).loss;
  };
  BasicDiscriminator<double>::Pass pass;
  const DTensor logits = disc.forward(x, opts, nullptr, &pass);
  std::vector<DTensor> grads;
  const DTensor dx = disc.backward(pass, nn::bce_with_logits(logits, targets).grad, &grads);
  return run_checks(disc, x, dx, grads, loss, eps, seed, max_per_tensor);
}

std::vector<nn::GradCheckResult> check_generator(const NetSpec& spec, double eps,
                                                 std::uint64_t seed, std::size_t max_per_tensor) {
  spec.validate();
  nn::Rng rng(seed);
  BasicGenerator<double> gen(spec, rng);
  DTensor z = uniform_tensor({3, spec.z_dim}, rng);
  const ForwardOptions opts = exact_options();
  const DTensor probe = uniform_tensor(gen.forward(z, opts, nullptr).shape(), rng);

  const auto loss = [&] {
    const DTensor out = gen.forward(z, opts, nullptr);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
    return s;
  };
  BasicGenerator<double>::Pass pass;
  gen.forward(z, opts, nullptr, &pass);
  std::vector<DTensor> grads;
  const DTensor dz = gen.backward(pass, probe, &grads);
  return run_checks(gen, z, dz, grads, loss, eps, seed, max_per_tensor);
}

}  // namespace flamegan
