#include "diact/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "diact/error.hpp"
#include "eigen_maps.hpp"

namespace diact::nn {
namespace {

using detail::as_matrix;
using detail::as_row;
using detail::ConstMatrixMap;
using detail::RowMatrix;

using StridedConstMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Rows of `sequence` starting at t, each w*dim long and overlapping by dim.
StridedConstMap window_rows(const Tensor& sequence, std::size_t window) {
  const std::size_t dim = sequence.cols();
  const std::size_t positions = sequence.rows() - window + 1;
  return StridedConstMap(sequence.data(), static_cast<Eigen::Index>(positions),
                         static_cast<Eigen::Index>(window * dim), Eigen::OuterStride<>(static_cast<Eigen::Index>(dim)));
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

Activation parse_activation(std::string_view text) {
  if (text == "linear") return Activation::Linear;
  if (text == "relu") return Activation::Relu;
  if (text == "sigmoid") return Activation::Sigmoid;
  if (text == "softmax") return Activation::Softmax;
  throw DataError("unknown activation '" + std::string(text) + "'");
}

Tensor activate(const Tensor& pre, Activation activation) {
  Tensor out = pre;
  switch (activation) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Sigmoid:
      for (double& v : out.values()) v = sigmoid(v);
      break;
    case Activation::Softmax:
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const double peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& v : row) total += (v = std::exp(v - peak));
        for (double& v : row) v /= total;
      }
      break;
  }
  return out;
}

Tensor activation_backward(const Tensor& output, const Tensor& doutput, Activation activation) {
  Tensor dpre = doutput;
  switch (activation) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] = output[i] > 0.0 ? doutput[i] : 0.0;
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] = doutput[i] * output[i] * (1.0 - output[i]);
      break;
    case Activation::Softmax:
      for (std::size_t r = 0; r < dpre.rows(); ++r) {
        const auto y = output.row(r);
        const auto dy = doutput.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < y.size(); ++c) dot += y[c] * dy[c];
        auto dx = dpre.row(r);
        for (std::size_t c = 0; c < y.size(); ++c) dx[c] = y[c] * (dy[c] - dot);
      }
      break;
  }
  return dpre;
}

Tensor dense_affine(const Tensor& input, const Parameter& weights, const Parameter& bias) {
  const auto& ws = weights.value.shape();
  require(ws.size() == 2 && input.cols() == ws[0] && bias.value.size() == ws[1],
          "dense: shape mismatch between input " + shape_string(input.shape()) + ", weights " + shape_string(ws) +
              " and bias " + shape_string(bias.value.shape()));
  Tensor out = Tensor::matrix(input.rows(), ws[1]);
  auto y = as_matrix(out);
  y.noalias() = as_matrix(input) * as_matrix(weights.value);
  y.rowwise() += as_row(bias.value);
  return out;
}

Tensor dense_forward(const Tensor& input, const Parameter& weights, const Parameter& bias, Activation activation) {
  return activate(dense_affine(input, weights, bias), activation);
}

Tensor dense_backward(const Tensor& input, Parameter& weights, Parameter& bias, const Tensor& dpre) {
  const auto dy = as_matrix(dpre);
  as_matrix(weights.gradient).noalias() += as_matrix(input).transpose() * dy;
  as_row(bias.gradient) += dy.colwise().sum();
  Tensor dinput = Tensor::matrix(input.rows(), input.cols());
  as_matrix(dinput).noalias() = dy * as_matrix(weights.value).transpose();
  return dinput;
}

Tensor conv1d_temporal(const Tensor& sequence, const Parameter& filters, const Parameter& bias) {
  const auto& fs = filters.value.shape();
  require(fs.size() == 3 && fs[1] == sequence.cols() && bias.value.size() == fs[2],
          "conv1d: shape mismatch between sequence " + shape_string(sequence.shape()) + " and filters " +
              shape_string(fs));
  const std::size_t window = fs[0];
  if (window < 1 || sequence.rows() < window) {
    throw std::invalid_argument("conv1d: sequence length " + std::to_string(sequence.rows()) +
                                " is shorter than window " + std::to_string(window));
  }
  const std::size_t positions = sequence.rows() - window + 1;
  Tensor out = Tensor::matrix(positions, fs[2]);
  auto y = as_matrix(out);
  y.noalias() = window_rows(sequence, window) * as_matrix(filters.value, window * fs[1], fs[2]);
  y.rowwise() += as_row(bias.value);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor conv1d_backward(const Tensor& sequence, Parameter& filters, Parameter& bias, const Tensor& output,
                       const Tensor& doutput) {
  const auto& fs = filters.value.shape();
  const std::size_t window = fs[0];
  const std::size_t dim = fs[1];
  Tensor dpre = activation_backward(output, doutput, Activation::Relu);
  const auto dy = as_matrix(dpre);
  const auto cols = window_rows(sequence, window);
  as_matrix(filters.gradient, window * dim, fs[2]).noalias() += cols.transpose() * dy;
  as_row(bias.gradient) += dy.colwise().sum();
  RowMatrix dcols = dy * as_matrix(filters.value, window * dim, fs[2]).transpose();
  Tensor dsequence = Tensor::matrix(sequence.rows(), dim);
  for (Eigen::Index t = 0; t < dcols.rows(); ++t) {
    double* target = dsequence.data() + static_cast<std::size_t>(t) * dim;
    const double* source = dcols.data() + t * dcols.cols();
    for (Eigen::Index j = 0; j < dcols.cols(); ++j) target[j] += source[j];
  }
  return dsequence;
}

MaxPool max_over_time(const Tensor& sequence) {
  if (sequence.rows() == 0) throw std::invalid_argument("max_over_time: empty sequence");
  MaxPool pool;
  pool.length = sequence.rows();
  pool.values = Tensor::vector(sequence.cols());
  pool.argmax.assign(sequence.cols(), 0);
  for (std::size_t c = 0; c < sequence.cols(); ++c) {
    double best = sequence(0, c);
    for (std::size_t t = 1; t < sequence.rows(); ++t) {
      if (sequence(t, c) > best) {
        best = sequence(t, c);
        pool.argmax[c] = t;
      }
    }
    pool.values[c] = best;
  }
  return pool;
}

Tensor max_over_time_backward(const MaxPool& pool, const Tensor& dvalues) {
  Tensor dsequence = Tensor::matrix(pool.length, pool.argmax.size());
  for (std::size_t c = 0; c < pool.argmax.size(); ++c) dsequence(pool.argmax[c], c) = dvalues[c];
  return dsequence;
}

GruParams make_gru(std::string_view name, std::size_t input_size, std::size_t hidden_size) {
  const std::string prefix(name);
  return GruParams{
      Parameter(prefix + ".input_weights", Tensor::matrix(input_size, 3 * hidden_size)),
      Parameter(prefix + ".recurrent_weights", Tensor::matrix(hidden_size, 3 * hidden_size)),
      Parameter(prefix + ".bias", Tensor::vector(3 * hidden_size)),
  };
}

Tensor GruTrace::outputs() const {
  const std::size_t h = hidden.cols();
  Tensor out = Tensor::matrix(length(), h);
  std::copy(hidden.data() + h, hidden.data() + hidden.size(), out.data());
  return out;
}

GruTrace gru_forward(const Tensor& sequence, const GruParams& params) {
  const std::size_t h = params.hidden_size();
  require(params.recurrent_weights.value.cols() == 3 * h && params.input_weights.value.cols() == 3 * h &&
              params.bias.value.size() == 3 * h,
          "gru: inconsistent gate parameter shapes");
  require(sequence.cols() == params.input_size(),
          "gru: input width " + std::to_string(sequence.cols()) + " does not match " +
              std::to_string(params.input_size()));
  if (sequence.rows() == 0) throw std::invalid_argument("gru: empty sequence");
  const std::size_t len = sequence.rows();

  GruTrace trace;
  trace.input = sequence;
  trace.hidden = Tensor::matrix(len + 1, h);
  trace.update = Tensor::matrix(len, h);
  trace.reset = Tensor::matrix(len, h);
  trace.candidate = Tensor::matrix(len, h);
  trace.reset_hidden = Tensor::matrix(len, h);

  RowMatrix projected = as_matrix(sequence) * as_matrix(params.input_weights.value);
  projected.rowwise() += as_row(params.bias.value);
  const auto u = as_matrix(params.recurrent_weights.value);
  const auto h_eig = static_cast<Eigen::Index>(h);
  Eigen::RowVectorXd gates(2 * h_eig);
  Eigen::RowVectorXd candidate_pre(h_eig);

  for (std::size_t t = 0; t < len; ++t) {
    const Eigen::Map<const Eigen::RowVectorXd> prev(trace.hidden.data() + t * h, h_eig);
    gates.noalias() = prev * u.leftCols(2 * h_eig);
    const auto ti = static_cast<Eigen::Index>(t);
    for (std::size_t j = 0; j < h; ++j) {
      const auto je = static_cast<Eigen::Index>(j);
      trace.update(t, j) = sigmoid(projected(ti, je) + gates(je));
      trace.reset(t, j) = sigmoid(projected(ti, h_eig + je) + gates(h_eig + je));
      trace.reset_hidden(t, j) = trace.reset(t, j) * prev(je);
    }
    const Eigen::Map<const Eigen::RowVectorXd> reset_hidden(trace.reset_hidden.data() + t * h, h_eig);
    candidate_pre.noalias() = reset_hidden * u.rightCols(h_eig);
    for (std::size_t j = 0; j < h; ++j) {
      const auto je = static_cast<Eigen::Index>(j);
      const double c = std::tanh(projected(ti, 2 * h_eig + je) + candidate_pre(je));
      trace.candidate(t, j) = c;
      const double z = trace.update(t, j);
      trace.hidden(t + 1, j) = z * prev(je) + (1.0 - z) * c;
    }
  }
  return trace;
}

Tensor gru_backward(const GruTrace& trace, GruParams& params, const Tensor& doutputs) {
  const std::size_t h = params.hidden_size();
  const std::size_t len = trace.length();
  require(doutputs.rows() == len && doutputs.cols() == h, "gru backward: output gradient shape mismatch");
  const auto h_eig = static_cast<Eigen::Index>(h);
  const auto u = as_matrix(params.recurrent_weights.value);
  auto du = as_matrix(params.recurrent_weights.gradient);

  RowMatrix dprojected(static_cast<Eigen::Index>(len), 3 * h_eig);
  Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(h_eig);
  Eigen::RowVectorXd dh(h_eig), da_candidate(h_eig), dreset_hidden(h_eig), da_gates(2 * h_eig), dh_prev(h_eig);

  for (std::size_t step = len; step-- > 0;) {
    const Eigen::Map<const Eigen::RowVectorXd> prev(trace.hidden.data() + step * h, h_eig);
    const Eigen::Map<const Eigen::RowVectorXd> reset_hidden(trace.reset_hidden.data() + step * h, h_eig);
    for (std::size_t j = 0; j < h; ++j) {
      const auto je = static_cast<Eigen::Index>(j);
      dh(je) = doutputs(step, j) + dh_next(je);
      const double c = trace.candidate(step, j);
      const double z = trace.update(step, j);
      da_candidate(je) = dh(je) * (1.0 - z) * (1.0 - c * c);
      da_gates(je) = dh(je) * (prev(je) - c) * z * (1.0 - z);
      dh_prev(je) = dh(je) * z;
    }
    du.rightCols(h_eig).noalias() += reset_hidden.transpose() * da_candidate;
    dreset_hidden.noalias() = da_candidate * u.rightCols(h_eig).transpose();
    for (std::size_t j = 0; j < h; ++j) {
      const auto je = static_cast<Eigen::Index>(j);
      const double r = trace.reset(step, j);
      da_gates(h_eig + je) = dreset_hidden(je) * prev(je) * r * (1.0 - r);
      dh_prev(je) += dreset_hidden(je) * r;
    }
    du.leftCols(2 * h_eig).noalias() += prev.transpose() * da_gates;
    dh_prev.noalias() += da_gates * u.leftCols(2 * h_eig).transpose();
    const auto row = static_cast<Eigen::Index>(step);
    dprojected.row(row).head(2 * h_eig) = da_gates;
    dprojected.row(row).tail(h_eig) = da_candidate;
    dh_next = dh_prev;
  }
  as_matrix(params.input_weights.gradient).noalias() += as_matrix(trace.input).transpose() * dprojected;
  as_row(params.bias.gradient) += dprojected.colwise().sum();
  Tensor dinput = Tensor::matrix(len, trace.input.cols());
  as_matrix(dinput).noalias() = dprojected * as_matrix(params.input_weights.value).transpose();
  return dinput;
}

GruOutput gru_sequence(const Tensor& sequence, const GruParams& params) {
  const auto trace = gru_forward(sequence, params);
  GruOutput out{trace.outputs(), Tensor::vector(params.hidden_size())};
  const auto last = trace.hidden.row(trace.length());
  std::copy(last.begin(), last.end(), out.last.data());
  return out;
}

Tensor dropout(const Tensor& input, double rate, bool training, RandomSource& rng, Tensor* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) {
    if (mask) *mask = Tensor(input.shape(), 1.0);
    return input;
  }
  Tensor scale(input.shape());
  const double keep = 1.0 / (1.0 - rate);
  for (double& s : scale.values()) s = rng.bernoulli(rate) ? 0.0 : keep;
  Tensor out = input;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= scale[i];
  if (mask) *mask = std::move(scale);
  return out;
}

Tensor dropout_backward(const Tensor& mask, const Tensor& doutput) {
  Tensor dinput = doutput;
  for (std::size_t i = 0; i < dinput.size(); ++i) dinput[i] *= mask[i];
  return dinput;
}

void glorot_uniform(Tensor& weights, std::size_t fan_in, std::size_t fan_out, RandomSource& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : weights.values()) w = rng.uniform(-limit, limit);
}

}  // namespace diact::nn
