#include "metashift/nn/optimizer.hpp"

#include <cmath>

#include "metashift/common/error.hpp"

namespace metashift::nn {

namespace {

template <class T>
void require_compatible(const BasicParameters<T>& params, const BasicParameters<T>& grads,
                        const char* who) {
  if (!params.same_shape(grads)) throw ValidationError(std::string(who) + ": gradient shape mismatch");
  if (!grads.all_finite()) throw NumericalError(std::string(who) + ": non-finite gradient (training diverged)");
}

}  // namespace

template <class T>
void sgd_step(BasicParameters<T>& params, const BasicParameters<T>& grads, T lr) {
  require_compatible(params, grads, "sgd_step");
  auto p = params.flat();
  auto g = grads.flat();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
}

template void sgd_step<float>(BasicParameters<float>&, const BasicParameters<float>&, float);
template void sgd_step<double>(BasicParameters<double>&, const BasicParameters<double>&, double);

void adam_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state, float lr) {
  require_compatible(params, grads, "adam_step");
  if (!std::isfinite(lr)) throw NumericalError("adam_step: non-finite learning rate");
  const std::size_t n = params.size();
  if (state.first_moment.empty()) {
    state.first_moment.assign(n, 0.0f);
    state.second_moment.assign(n, 0.0f);
  }
  if (state.first_moment.size() != n || state.second_moment.size() != n)
    throw ValidationError("adam_step: optimizer state does not match parameter shape");

  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto p = params.flat();
  auto g = grads.flat();
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    const double mi = b1 * m[i] + (1.0 - b1) * gi;
    const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + state.epsilon);
    p[i] = static_cast<float>(p[i] - update);
  }
}

void apply_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state) {
  if (state.kind == OptimizerKind::sgd)
    sgd_step(params, grads, state.learning_rate);
  else
    adam_step(params, grads, state, state.learning_rate);
}

}  // namespace metashift::nn
