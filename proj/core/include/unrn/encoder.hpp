#pragma once

#include <cstdint>
#include <vector>

#include "unrn/numerics.hpp"

namespace unrn {

struct EncoderDims {
  int input = 0;
  int hidden = 0;
  int output = 0;

  // W1 (hidden x input) + b1 + W2 (output x hidden) + b2.
  int param_count() const {
    return input * hidden + hidden + hidden * output + output;
  }
  bool operator==(const EncoderDims&) const = default;
};

// Two-layer embedding network: affine, tanh, affine, L2 normalization.
// Parameters live in one flat vector laid out as [W1 | b1 | W2 | b2] with
// row-major weight blocks, so the optimizer and the EMA teacher can treat
// the whole model as a single array.
class EncoderParams {
 public:
  EncoderParams() = default;
  explicit EncoderParams(EncoderDims dims);

  // Weights uniform on [-sqrt(6 / (fan_in + fan_out)), +...] per layer,
  // biases zero. Draws come from Xoshiro256(seed) row by row, so the init is
  // identical on every platform.
  static EncoderParams scaled_uniform_init(std::uint64_t seed, EncoderDims dims);

  const EncoderDims& dims() const { return dims_; }
  std::vector<double>& flat() { return data_; }
  const std::vector<double>& flat() const { return data_; }

  double w1(int h, int i) const { return data_[h * dims_.input + i]; }
  double& w1(int h, int i) { return data_[h * dims_.input + i]; }
  double b1(int h) const { return data_[off_b1_ + h]; }
  double& b1(int h) { return data_[off_b1_ + h]; }
  double w2(int o, int h) const { return data_[off_w2_ + o * dims_.hidden + h]; }
  double& w2(int o, int h) { return data_[off_w2_ + o * dims_.hidden + h]; }
  double b2(int o) const { return data_[off_b2_ + o]; }
  double& b2(int o) { return data_[off_b2_ + o]; }

 private:
  EncoderDims dims_;
  int off_b1_ = 0;
  int off_w2_ = 0;
  int off_b2_ = 0;
  std::vector<double> data_;
};

// Unit-norm feature for one input. Throws std::runtime_error("degenerate
// embedding") when the pre-normalization output norm is at or below 1e-8.
Vec encoder_forward(const EncoderParams& params, const Vec& x);

// Pre-activation pieces of a forward pass, kept so a backward pass does not
// recompute them.
struct EncoderActivations {
  Vec hidden;    // tanh outputs
  Vec raw;       // second affine output before normalization
  double raw_norm = 0.0;
  Vec feature;   // raw / raw_norm
};

EncoderActivations encoder_forward_detailed(const EncoderParams& params, const Vec& x);

// Gradient of sum(feature * grad_feature) with respect to every parameter,
// flat layout matching EncoderParams. Includes the normalization Jacobian.
std::vector<double> encoder_backward(const EncoderParams& params, const Vec& x,
                                     const EncoderActivations& acts,
                                     const Vec& grad_feature);
std::vector<double> encoder_backward(const EncoderParams& params, const Vec& x,
                                     const Vec& grad_feature);

struct AdamConfig {
  double lr = 3.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

// One bias-corrected ADAM update on a flat parameter vector. The state is
// sized on first use; afterwards a size mismatch throws.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& config);

}  // namespace unrn
