#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "diact/tensor.hpp"

namespace diact::nn {

inline constexpr double kProbabilityFloor = 1e-12;

// Mean over the batch of -log p(target); targets must be one-hot rows.
double categorical_cross_entropy(const Tensor& probabilities, const Tensor& one_hot_targets);
// Mean over batch and classes of -[y log p + (1 - y) log(1 - p)].
double binary_cross_entropy(const Tensor& probabilities, const Tensor& multi_hot_targets);

// Loss gradients w.r.t. the logits feeding softmax / sigmoid outputs, for the
// batch-mean losses above: (p - y) / batch and (p - y) / (batch * classes).
Tensor softmax_cross_entropy_logit_gradient(const Tensor& probabilities, const Tensor& targets);
Tensor sigmoid_binary_cross_entropy_logit_gradient(const Tensor& probabilities, const Tensor& targets);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// Bias-corrected Adam update; increments the step count and zeroes the
// gradients. Moments are created lazily on the first call and must keep the
// same parameter order afterwards.
void adam_step(std::span<Parameter* const> params, AdamState& state);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares the analytic gradients already stored in `params` against central
// finite differences of `loss` on a seeded coordinate subsample (every
// coordinate when the total is at most `samples`; every parameter contributes
// at least a few). Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradientCheckResult gradient_check(const std::function<double()>& loss, std::span<Parameter* const> params,
                                   double epsilon = 1e-5, std::size_t samples = 200, std::uint64_t seed = 0);

}  // namespace diact::nn
