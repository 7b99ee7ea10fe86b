#pragma once

#include <cstdint>
#include <vector>

#include "metashift/nn/parameters.hpp"

namespace metashift::nn {

enum class OptimizerKind { sgd, adam };

/// Learning rate plus Adam moments. Moments are sized lazily on the first
/// Adam step so a default-constructed state fits any parameter set.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  float learning_rate = 5e-4f;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<float> first_moment;
  std::vector<float> second_moment;
};

/// params -= lr * grads. Throws NumericalError on non-finite gradients.
template <class T>
void sgd_step(BasicParameters<T>& params, const BasicParameters<T>& grads, T lr);

/// Bias-corrected Adam update; increments state.step.
void adam_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state, float lr);

/// Uses state.learning_rate and dispatches on state.kind.
void apply_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state);

}  // namespace metashift::nn
