#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "diact/random.hpp"
#include "diact/tensor.hpp"

namespace diact::nn {

enum class Activation { Linear, Relu, Sigmoid, Softmax };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

// Row-wise activation of a [batch x units] tensor.
Tensor activate(const Tensor& pre, Activation activation);
// Gradient w.r.t. the pre-activation given the activated output.
Tensor activation_backward(const Tensor& output, const Tensor& doutput, Activation activation);

// input [batch x in], weights [in x out], bias [out].
Tensor dense_affine(const Tensor& input, const Parameter& weights, const Parameter& bias);
Tensor dense_forward(const Tensor& input, const Parameter& weights, const Parameter& bias, Activation activation);
// Accumulates into weights/bias gradients; returns d input.
Tensor dense_backward(const Tensor& input, Parameter& weights, Parameter& bias, const Tensor& dpre);

// Valid temporal convolution followed by ReLU.
// sequence [len x dim], filters [window x dim x f], bias [f] -> [(len - window + 1) x f].
Tensor conv1d_temporal(const Tensor& sequence, const Parameter& filters, const Parameter& bias);
// `output` is the post-ReLU forward result. Returns d sequence.
Tensor conv1d_backward(const Tensor& sequence, Parameter& filters, Parameter& bias, const Tensor& output,
                       const Tensor& doutput);

struct MaxPool {
  Tensor values;                    // [f]
  std::vector<std::size_t> argmax;  // earliest maximal row per channel
  std::size_t length = 0;
};

MaxPool max_over_time(const Tensor& sequence);
Tensor max_over_time_backward(const MaxPool& pool, const Tensor& dvalues);

// Gate blocks are laid out [update | reset | candidate] along the 3h axis.
struct GruParams {
  Parameter input_weights;      // [in x 3h]
  Parameter recurrent_weights;  // [h x 3h]
  Parameter bias;               // [3h]

  std::size_t input_size() const { return input_weights.value.shape().at(0); }
  std::size_t hidden_size() const { return recurrent_weights.value.shape().at(0); }
};

GruParams make_gru(std::string_view name, std::size_t input_size, std::size_t hidden_size);

struct GruTrace {
  Tensor input;         // [len x in]
  Tensor hidden;        // [(len + 1) x h]; row 0 is the zero initial state
  Tensor update;        // [len x h]
  Tensor reset;         // [len x h]
  Tensor candidate;     // [len x h]
  Tensor reset_hidden;  // [len x h], reset ⊙ previous hidden

  Tensor outputs() const;  // hidden rows 1..len
  std::size_t length() const { return input.rows(); }
};

// z = σ(x Wz + h Uz + bz), r = σ(x Wr + h Ur + br),
// c = tanh(x Wc + (r ⊙ h) Uc + bc), h' = z ⊙ h + (1 - z) ⊙ c.
GruTrace gru_forward(const Tensor& sequence, const GruParams& params);
// doutputs [len x h] is the loss gradient w.r.t. every output row.
Tensor gru_backward(const GruTrace& trace, GruParams& params, const Tensor& doutputs);

struct GruOutput {
  Tensor outputs;  // [len x h]
  Tensor last;     // [h]
};
GruOutput gru_sequence(const Tensor& sequence, const GruParams& params);

// Inverted dropout. `mask`, when given, receives the per-element scale
// (0 or 1 / (1 - rate)) for the backward pass.
Tensor dropout(const Tensor& input, double rate, bool training, RandomSource& rng, Tensor* mask = nullptr);
Tensor dropout_backward(const Tensor& mask, const Tensor& doutput);

// Glorot-uniform fill.
void glorot_uniform(Tensor& weights, std::size_t fan_in, std::size_t fan_out, RandomSource& rng);

}  // namespace diact::nn
