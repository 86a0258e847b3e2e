#include "diact/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "diact/error.hpp"
#include "diact/random.hpp"

namespace diact::nn {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b) || a.shape().size() != 2) {
    throw std::invalid_argument(std::string(what) + ": probabilities " + shape_string(a.shape()) +
                                " and targets " + shape_string(b.shape()) + " must be matching matrices");
  }
}

double floored_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

}  // namespace

double categorical_cross_entropy(const Tensor& probabilities, const Tensor& one_hot_targets) {
  require_same_shape(probabilities, one_hot_targets, "categorical_cross_entropy");
  double total = 0.0;
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    const auto y = one_hot_targets.row(r);
    std::size_t hot = y.size();
    for (std::size_t c = 0; c < y.size(); ++c) {
      if (y[c] == 1.0 && hot == y.size()) hot = c;
      else if (y[c] != 0.0) hot = y.size() + 1;
    }
    if (hot >= y.size()) throw std::invalid_argument("categorical_cross_entropy: target row " + std::to_string(r) + " is not one-hot");
    total -= floored_log(probabilities(r, hot));
  }
  return total / static_cast<double>(probabilities.rows());
}

double binary_cross_entropy(const Tensor& probabilities, const Tensor& multi_hot_targets) {
  require_same_shape(probabilities, multi_hot_targets, "binary_cross_entropy");
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    const double y = multi_hot_targets[i];
    total -= y * floored_log(p) + (1.0 - y) * floored_log(1.0 - p);
  }
  return total / static_cast<double>(probabilities.size());
}

Tensor softmax_cross_entropy_logit_gradient(const Tensor& probabilities, const Tensor& targets) {
  require_same_shape(probabilities, targets, "softmax_cross_entropy_logit_gradient");
  Tensor grad = probabilities;
  const double scale = 1.0 / static_cast<double>(probabilities.rows());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (probabilities[i] - targets[i]) * scale;
  return grad;
}

Tensor sigmoid_binary_cross_entropy_logit_gradient(const Tensor& probabilities, const Tensor& targets) {
  require_same_shape(probabilities, targets, "sigmoid_binary_cross_entropy_logit_gradient");
  Tensor grad = probabilities;
  const double scale = 1.0 / static_cast<double>(probabilities.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (probabilities[i] - targets[i]) * scale;
  return grad;
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  for (const Parameter* p : params) {
    for (double g : p->gradient.values()) {
      if (std::isnan(g)) throw NumericError("NaN gradient in parameter " + p->name);
    }
  }
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter list changed between steps");
  }
  ++state.step_count;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (!m.same_shape(p.value)) throw std::invalid_argument("adam_step: moment shape mismatch for " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.gradient[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    p.zero_grad();
  }
}

GradientCheckResult gradient_check(const std::function<double()>& loss, std::span<Parameter* const> params,
                                   double epsilon, std::size_t samples, std::uint64_t seed) {
  std::size_t total = 0;
  for (const Parameter* p : params) total += p->value.size();
  RandomSource rng(seed);
  GradientCheckResult result;

  const auto evaluate = [&] {
    const double value = loss();
    if (!std::isfinite(value)) throw NumericError("gradient check: non-finite loss");
    return value;
  };

  for (Parameter* p : params) {
    const std::size_t size = p->value.size();
    if (size == 0) continue;
    std::vector<std::size_t> coordinates(size);
    std::iota(coordinates.begin(), coordinates.end(), std::size_t{0});
    std::size_t quota = size;
    if (total > samples) {
      const auto share = static_cast<std::size_t>(std::ceil(static_cast<double>(samples) * static_cast<double>(size) /
                                                            static_cast<double>(total)));
      quota = std::min(size, std::max<std::size_t>(share, 8));
      rng.shuffle(std::span<std::size_t>(coordinates));
      coordinates.resize(quota);
    }
    for (std::size_t index : coordinates) {
      const double original = p->value[index];
      p->value[index] = original + epsilon;
      const double plus = evaluate();
      p->value[index] = original - epsilon;
      const double minus = evaluate();
      p->value[index] = original;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double analytic = p->gradient[index];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double error = std::abs(analytic - numeric) / denom;
      ++result.coordinates;
      if (error > result.max_relative_error || result.coordinates == 1) {
        result.max_relative_error = std::max(result.max_relative_error, error);
        if (error >= result.max_relative_error) {
          result.worst_parameter = p->name;
          result.worst_index = index;
          result.worst_analytic = analytic;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace diact::nn
