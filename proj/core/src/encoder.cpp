#include "unrn/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "unrn/rng.hpp"

namespace unrn {

namespace {
constexpr double kEmbeddingNormFloor = 1e-8;

void check_dims(const EncoderDims& dims) {
  if (dims.input <= 0 || dims.hidden <= 0 || dims.output <= 0) {
    throw std::invalid_argument("encoder dims must be positive");
  }
}
}  // namespace

EncoderParams::EncoderParams(EncoderDims dims) : dims_(dims) {
  check_dims(dims);
  off_b1_ = dims.input * dims.hidden;
  off_w2_ = off_b1_ + dims.hidden;
  off_b2_ = off_w2_ + dims.hidden * dims.output;
  data_.assign(dims.param_count(), 0.0);
}

EncoderParams EncoderParams::scaled_uniform_init(std::uint64_t seed, EncoderDims dims) {
  EncoderParams p(dims);
  Xoshiro256 rng(mix_seed(seed, 0x1717));
  const double a1 = std::sqrt(6.0 / (dims.input + dims.hidden));
  for (int h = 0; h < dims.hidden; ++h) {
    for (int i = 0; i < dims.input; ++i) p.w1(h, i) = rng.uniform(-a1, a1);
  }
  const double a2 = std::sqrt(6.0 / (dims.hidden + dims.output));
  for (int o = 0; o < dims.output; ++o) {
    for (int h = 0; h < dims.hidden; ++h) p.w2(o, h) = rng.uniform(-a2, a2);
  }
  return p;
}

EncoderActivations encoder_forward_detailed(const EncoderParams& params, const Vec& x) {
  const EncoderDims& d = params.dims();
  if (static_cast<int>(x.size()) != d.input) {
    throw std::invalid_argument("dimension mismatch");
  }
  EncoderActivations acts;
  acts.hidden.resize(d.hidden);
  for (int h = 0; h < d.hidden; ++h) {
    double z = params.b1(h);
    for (int i = 0; i < d.input; ++i) z += params.w1(h, i) * x[i];
    acts.hidden[h] = std::tanh(z);
  }
  acts.raw.resize(d.output);
  for (int o = 0; o < d.output; ++o) {
    double z = params.b2(o);
    for (int h = 0; h < d.hidden; ++h) z += params.w2(o, h) * acts.hidden[h];
    acts.raw[o] = z;
  }
  acts.raw_norm = l2_norm(acts.raw);
  if (!(acts.raw_norm > kEmbeddingNormFloor)) {
    throw std::runtime_error("degenerate embedding");
  }
  acts.feature.resize(d.output);
  for (int o = 0; o < d.output; ++o) acts.feature[o] = acts.raw[o] / acts.raw_norm;
  return acts;
}

Vec encoder_forward(const EncoderParams& params, const Vec& x) {
  return encoder_forward_detailed(params, x).feature;
}

std::vector<double> encoder_backward(const EncoderParams& params, const Vec& x,
                                     const EncoderActivations& acts,
                                     const Vec& grad_feature) {
  const EncoderDims& d = params.dims();
  if (static_cast<int>(grad_feature.size()) != d.output) {
    throw std::invalid_argument("dimension mismatch");
  }
  EncoderParams grads(d);

  // Normalization Jacobian: d(raw/|raw|) pulls back g to (g - f (f.g)) / |raw|.
  const double f_dot_g = dot(acts.feature, grad_feature);
  Vec g_raw(d.output);
  for (int o = 0; o < d.output; ++o) {
    g_raw[o] = (grad_feature[o] - acts.feature[o] * f_dot_g) / acts.raw_norm;
  }

  Vec g_hidden(d.hidden, 0.0);
  for (int o = 0; o < d.output; ++o) {
    grads.b2(o) = g_raw[o];
    for (int h = 0; h < d.hidden; ++h) {
      grads.w2(o, h) = g_raw[o] * acts.hidden[h];
      g_hidden[h] += params.w2(o, h) * g_raw[o];
    }
  }
  for (int h = 0; h < d.hidden; ++h) {
    const double g_pre = g_hidden[h] * (1.0 - acts.hidden[h] * acts.hidden[h]);
    grads.b1(h) = g_pre;
    for (int i = 0; i < d.input; ++i) grads.w1(h, i) = g_pre * x[i];
  }
  return std::move(grads.flat());
}

std::vector<double> encoder_backward(const EncoderParams& params, const Vec& x,
                                     const Vec& grad_feature) {
  return encoder_backward(params, x, encoder_forward_detailed(params, x), grad_feature);
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size()) throw std::invalid_argument("dimension mismatch");
  if (state.step == 0 && state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("dimension mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

}  // namespace unrn
