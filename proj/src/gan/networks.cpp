#include <cmath>
#include <utility>

#include "flamegan/error.hpp"
#include "flamegan/gan.hpp"

namespace flamegan {

namespace {

// DCGAN-style small init for the dense head keeps fresh outputs near 0.5.
constexpr double kHeadInitStd = 0.02;

template <typename Real>
void check_batch(const nn::Tensor<Real>& t, const GridShape& g, const char* what) {
  if (t.rank() != 4 || t.dim(1) != g.height || t.dim(2) != g.width || t.dim(3) != g.channels) {
    throw DimensionError(std::string(what) + ": expected [N," + std::to_string(g.height) + "," +
                         std::to_string(g.width) + "," + std::to_string(g.channels) + "], got " +
                         nn::shape_string(t.shape()));
  }
}

nn::ConvConfig conv_config(const LayerSpec& l) { return {l.stride, l.padding}; }

template <typename Real>
nn::DropoutResult<Real> maybe_dropout(const nn::Tensor<Real>& x, bool stochastic, double rate,
                                      nn::Rng* rng) {
  if (!stochastic || rate == 0.0) return {x, {}};
  if (rng == nullptr) throw StateError("stochastic forward pass needs an rng");
  return nn::dropout(x, rate, *rng, nn::Mode::train);
}

template <typename To, typename From>
nn::Tensor<To> convert(const nn::Tensor<From>& t) {
  if (t.empty()) return {};
  return t.template cast<To>();
}

}  // namespace

// ---------------------------------------------------------------------------
// discriminator

template <typename Real>
BasicDiscriminator<Real>::BasicDiscriminator(NetSpec spec, nn::Rng& rng) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t in_c = spec_.input.channels;
  for (const LayerSpec& l : spec_.disc_layers) {
    convs_.push_back({nn::msra_init<Real>({l.kernel, l.kernel, in_c, l.channels}, rng),
                      Tensor({l.channels})});
    in_c = l.channels;
  }
  const GridShape last = spec_.discriminator_shapes().back();
  head_.weight = nn::gaussian_init<Real>({last.height * last.width * last.channels, 1},
                                         kHeadInitStd, rng);
  head_.bias = Tensor({1});
}

template <typename Real>
typename BasicDiscriminator<Real>::Tensor BasicDiscriminator<Real>::forward(
    const Tensor& input, const ForwardOptions& opts, nn::Rng* rng, Pass* pass) const {
  check_batch(input, spec_.input, "discriminator");
  const bool stochastic = opts.mode == nn::Mode::train && opts.stochastic;
  if (stochastic && rng == nullptr) throw StateError("stochastic forward pass needs an rng");
  const auto act = nn::Activation::leaky_relu(spec_.leaky_slope);
  if (pass) pass->convs.clear();

  Tensor x = input;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    ConvStage st;
    st.input = stochastic ? nn::gaussian_noise(x, opts.noise_std, *rng, nn::Mode::train)
                          : std::move(x);
    st.pre = nn::conv2d(st.input, convs_[i], conv_config(spec_.disc_layers[i]));
    st.post = nn::activate(st.pre, act);
    st.drop = maybe_dropout(st.post, stochastic, opts.dropout, rng);
    x = st.drop.output;
    if (pass) pass->convs.push_back(std::move(st));
  }
  Tensor logits = nn::dense(x, head_);
  if (pass) {
    pass->head_input = std::move(x);
    pass->logits = logits;
  }
  return logits;
}

template <typename Real>
typename BasicDiscriminator<Real>::Tensor BasicDiscriminator<Real>::backward(
    const Pass& pass, const Tensor& grad_logits, std::vector<Tensor>* grads) const {
  const bool want = grads != nullptr;
  const std::size_t n = convs_.size();
  if (pass.convs.size() != n) throw StateError("discriminator pass does not match the network");
  if (want) grads->assign(2 * n + 2, Tensor{});
  const auto act = nn::Activation::leaky_relu(spec_.leaky_slope);

  auto head = nn::dense_backward(pass.head_input, head_, grad_logits, want);
  if (want) {
    (*grads)[2 * n] = std::move(head.weight);
    (*grads)[2 * n + 1] = std::move(head.bias);
  }
  Tensor g = std::move(head.input);
  for (std::size_t i = n; i-- > 0;) {
    const ConvStage& st = pass.convs[i];
    g = nn::dropout_backward(st.drop, g);
    g = nn::activate_backward(st.pre, st.post, act, g);
    auto cg = nn::conv2d_backward(st.input, convs_[i], conv_config(spec_.disc_layers[i]), g, want);
    if (want) {
      (*grads)[2 * i] = std::move(cg.weight);
      (*grads)[2 * i + 1] = std::move(cg.bias);
    }
    g = std::move(cg.input);
  }
  return g;
}

template <typename Real>
std::vector<double> BasicDiscriminator<Real>::probabilities(const Tensor& input) const {
  const Tensor logits = forward(input, ForwardOptions{}, nullptr);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double l = logits[i];
    out[i] = l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
  }
  return out;
}

template <typename Real>
std::vector<typename BasicDiscriminator<Real>::Tensor*> BasicDiscriminator<Real>::parameters() {
  std::vector<Tensor*> out;
  for (auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

template <typename Real>
std::vector<const typename BasicDiscriminator<Real>::Tensor*> BasicDiscriminator<Real>::parameters()
    const {
  auto mutable_params = const_cast<BasicDiscriminator*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

template <typename Real>
std::vector<std::string> BasicDiscriminator<Real>::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    out.push_back("disc.conv" + std::to_string(i) + ".weight");
    out.push_back("disc.conv" + std::to_string(i) + ".bias");
  }
  out.push_back("disc.dense.weight");
  out.push_back("disc.dense.bias");
  return out;
}

template <typename Real>
template <typename Other>
BasicDiscriminator<Other> BasicDiscriminator<Real>::cast() const {
  BasicDiscriminator<Other> out;
  out.spec_ = spec_;
  for (const auto& c : convs_) out.convs_.push_back({convert<Other>(c.weight), convert<Other>(c.bias)});
  out.head_ = {convert<Other>(head_.weight), convert<Other>(head_.bias)};
  return out;
}

// ---------------------------------------------------------------------------
// generator

namespace {

// Parameter slots: seed weight/bias, norm0 gamma/beta, then per transposed
// conv its weight followed by gamma/beta of its norm. A bias ahead of a
// batch norm is cancelled by the mean subtraction, so only the last
// transposed conv trains one (slot after its weight).
std::size_t deconv_slot(std::size_t layer) { return 4 + 3 * layer; }

}  // namespace

template <typename Real>
BasicGenerator<Real>::BasicGenerator(NetSpec spec, nn::Rng& rng) : spec_(std::move(spec)) {
  spec_.validate();
  const GridShape seed = spec_.generator_seed();
  const std::size_t seed_len = seed.height * seed.width * seed.channels;
  seed_.weight = nn::msra_init<Real>({spec_.z_dim, seed_len}, rng);
  seed_.bias = Tensor({seed_len});
  norms_.push_back(nn::make_batch_norm<Real>(seed.channels));
  std::size_t in_c = seed.channels;
  for (std::size_t i = 0; i < spec_.gen_layers.size(); ++i) {
    const LayerSpec& l = spec_.gen_layers[i];
    deconvs_.push_back({nn::msra_init<Real>({l.kernel, l.kernel, l.channels, in_c}, rng),
                        Tensor({l.channels})});
    if (i + 1 < spec_.gen_layers.size()) norms_.push_back(nn::make_batch_norm<Real>(l.channels));
    in_c = l.channels;
  }
}

template <typename Real>
typename BasicGenerator<Real>::Tensor BasicGenerator<Real>::forward(const Tensor& z,
                                                                    const ForwardOptions& opts,
                                                                    nn::Rng* rng,
                                                                    Pass* pass) const {
  if (z.rank() != 2 || z.dim(1) != spec_.z_dim) {
    throw DimensionError("generator expects [N," + std::to_string(spec_.z_dim) + "] noise, got " +
                         nn::shape_string(z.shape()));
  }
  const bool stochastic = opts.mode == nn::Mode::train && opts.stochastic;
  const nn::BatchNormConfig bn_cfg{0.0, opts.bn_epsilon};
  const GridShape seed = spec_.generator_seed();
  const std::size_t n = z.dim(0);
  if (pass) pass->stages.clear();

  Stage s0;
  s0.input = z;
  s0.pre = nn::dense(z, seed_).reshaped({n, seed.height, seed.width, seed.channels});
  s0.bn = nn::batch_norm(s0.pre, norms_[0], opts.mode, bn_cfg);
  s0.post = nn::activate(s0.bn.output, nn::Activation::relu());
  s0.drop = maybe_dropout(s0.post, stochastic, opts.dropout, rng);
  Tensor x = s0.drop.output;
  if (pass) pass->stages.push_back(std::move(s0));

  const std::size_t layers = deconvs_.size();
  for (std::size_t i = 0; i < layers; ++i) {
    Stage st;
    st.input = std::move(x);
    st.pre = nn::conv2d_transpose(st.input, deconvs_[i], conv_config(spec_.gen_layers[i]));
    if (i + 1 < layers) {
      st.bn = nn::batch_norm(st.pre, norms_[i + 1], opts.mode, bn_cfg);
      st.post = nn::activate(st.bn.output, nn::Activation::relu());
      st.drop = maybe_dropout(st.post, stochastic, opts.dropout, rng);
    } else {
      st.post = nn::activate(st.pre, nn::Activation::tanh());
      st.drop = {st.post, {}};
    }
    x = st.drop.output;
    if (pass) pass->stages.push_back(std::move(st));
  }
  if (pass) pass->output = x;
  return x;
}

template <typename Real>
typename BasicGenerator<Real>::Tensor BasicGenerator<Real>::backward(
    const Pass& pass, const Tensor& grad_output, std::vector<Tensor>* grads) const {
  const std::size_t layers = deconvs_.size();
  if (pass.stages.size() != layers + 1) throw StateError("generator pass does not match the network");
  const bool want = grads != nullptr;
  if (want) grads->assign(deconv_slot(layers - 1) + 2, Tensor{});

  Tensor g = grad_output;
  for (std::size_t i = layers; i-- > 0;) {
    const Stage& st = pass.stages[i + 1];
    g = nn::dropout_backward(st.drop, g);
    if (i + 1 < layers) {
      g = nn::activate_backward(st.bn.output, st.post, nn::Activation::relu(), g);
      auto bg = nn::batch_norm_backward(st.bn, norms_[i + 1], g);
      if (want) {
        (*grads)[deconv_slot(i) + 1] = std::move(bg.gamma);
        (*grads)[deconv_slot(i) + 2] = std::move(bg.beta);
      }
      g = std::move(bg.input);
    } else {
      g = nn::activate_backward(st.pre, st.post, nn::Activation::tanh(), g);
    }
    auto dg = nn::conv2d_transpose_backward(st.input, deconvs_[i], conv_config(spec_.gen_layers[i]),
                                            g, want);
    if (want) {
      (*grads)[deconv_slot(i)] = std::move(dg.weight);
      if (i + 1 == layers) (*grads)[deconv_slot(i) + 1] = std::move(dg.bias);
    }
    g = std::move(dg.input);
  }

  const Stage& s0 = pass.stages[0];
  g = nn::dropout_backward(s0.drop, g);
  g = nn::activate_backward(s0.bn.output, s0.post, nn::Activation::relu(), g);
  auto bg = nn::batch_norm_backward(s0.bn, norms_[0], g);
  g = bg.input.reshaped({g.dim(0), g.stride0()});
  auto sg = nn::dense_backward(s0.input, seed_, g, want);
  if (want) {
    (*grads)[0] = std::move(sg.weight);
    (*grads)[1] = std::move(sg.bias);
    (*grads)[2] = std::move(bg.gamma);
    (*grads)[3] = std::move(bg.beta);
  }
  return sg.input;
}

template <typename Real>
void BasicGenerator<Real>::update_running_stats(const Pass& pass, double momentum) {
  if (pass.stages.size() != deconvs_.size() + 1) throw StateError("generator pass does not match");
  nn::update_running_stats(norms_[0], pass.stages[0].bn, momentum);
  for (std::size_t i = 0; i + 1 < deconvs_.size(); ++i) {
    nn::update_running_stats(norms_[i + 1], pass.stages[i + 1].bn, momentum);
  }
}

template <typename Real>
std::vector<typename BasicGenerator<Real>::Tensor*> BasicGenerator<Real>::parameters() {
  std::vector<Tensor*> out{&seed_.weight, &seed_.bias, &norms_[0].gamma, &norms_[0].beta};
  for (std::size_t i = 0; i < deconvs_.size(); ++i) {
    out.push_back(&deconvs_[i].weight);
    if (i + 1 < deconvs_.size()) {
      out.push_back(&norms_[i + 1].gamma);
      out.push_back(&norms_[i + 1].beta);
    } else {
      out.push_back(&deconvs_[i].bias);
    }
  }
  return out;
}

template <typename Real>
std::vector<const typename BasicGenerator<Real>::Tensor*> BasicGenerator<Real>::parameters() const {
  auto mutable_params = const_cast<BasicGenerator*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

template <typename Real>
std::vector<std::string> BasicGenerator<Real>::parameter_names() const {
  std::vector<std::string> out{"gen.dense.weight", "gen.dense.bias", "gen.bn0.gamma", "gen.bn0.beta"};
  for (std::size_t i = 0; i < deconvs_.size(); ++i) {
    out.push_back("gen.deconv" + std::to_string(i) + ".weight");
    if (i + 1 < deconvs_.size()) {
      out.push_back("gen.bn" + std::to_string(i + 1) + ".gamma");
      out.push_back("gen.bn" + std::to_string(i + 1) + ".beta");
    } else {
      out.push_back("gen.deconv" + std::to_string(i) + ".bias");
    }
  }
  return out;
}

template <typename Real>
std::vector<typename BasicGenerator<Real>::Tensor*> BasicGenerator<Real>::buffers() {
  std::vector<Tensor*> out;
  for (auto& n : norms_) {
    out.push_back(&n.running_mean);
    out.push_back(&n.running_var);
  }
  return out;
}

template <typename Real>
std::vector<std::string> BasicGenerator<Real>::buffer_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < norms_.size(); ++i) {
    out.push_back("gen.bn" + std::to_string(i) + ".running_mean");
    out.push_back("gen.bn" + std::to_string(i) + ".running_var");
  }
  return out;
}

template class BasicDiscriminator<float>;
template class BasicDiscriminator<double>;
template class BasicGenerator<float>;
template class BasicGenerator<double>;
template BasicDiscriminator<double> BasicDiscriminator<float>::cast<double>() const;
template BasicDiscriminator<float> BasicDiscriminator<double>::cast<float>() const;

}  // namespace flamegan
