#include "metashift/meta/inner.hpp"

#include "metashift/common/error.hpp"
#include "metashift/common/parallel.hpp"
#include "metashift/nn/optimizer.hpp"

namespace metashift::meta {

nn::LossAndGrads<float> batch_gradient(const nn::ParameterSet& params, const data::LabeledBatch& b) {
  const auto fwd = nn::forward(params, b.x);
  return nn::loss_and_grads(params, fwd.cache, b.y);
}

nn::ParameterSet inner_adapt(const nn::ParameterSet& phi, const data::LabeledBatch& data, int steps, float alpha) {
  if (steps < 1) throw ValidationError("inner_adapt: need at least one step");
  const int n = data.size();
  if (n < steps)
    throw ValidationError("inner_adapt: " + std::to_string(n) + " examples cannot fill " + std::to_string(steps) +
                          " mini-batches");
  nn::ParameterSet theta = phi;
  int begin = 0;
  for (int g = 0; g < steps; ++g) {
    const int len = n / steps + (g < n % steps ? 1 : 0);
    const auto slice = data::slice(data, begin, begin + len);
    begin += len;
    nn::sgd_step(theta, batch_gradient(theta, slice).grads, alpha);
  }
  return theta;
}

namespace {

// Mean of parameter sets, accumulated in double in the given order.
std::vector<double> mean_flat(const std::vector<nn::ParameterSet>& sets) {
  std::vector<double> acc(sets.front().size(), 0.0);
  for (const auto& s : sets) {
    const auto f = s.flat();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += f[i];
  }
  for (auto& v : acc) v /= static_cast<double>(sets.size());
  return acc;
}

}  // namespace

nn::ParameterSet reptile_direction(const nn::ParameterSet& phi, std::span<const data::LabeledBatch> task_data,
                                   int steps, float alpha, std::size_t jobs) {
  if (task_data.empty()) throw ValidationError("reptile_direction: no tasks");
  std::vector<nn::ParameterSet> thetas(task_data.size());
  parallel_for(task_data.size(), jobs, [&](std::size_t t) { thetas[t] = inner_adapt(phi, task_data[t], steps, alpha); });
  const auto mean = mean_flat(thetas);
  nn::ParameterSet dir = phi;
  auto out = dir.flat();
  const auto p = phi.flat();
  for (std::size_t i = 0; i < mean.size(); ++i) out[i] = static_cast<float>(static_cast<double>(p[i]) - mean[i]);
  return dir;
}

nn::ParameterSet fomaml_gradient(const nn::ParameterSet& phi, std::span<const SupportQuery> tasks, float alpha,
                                 std::size_t jobs) {
  if (tasks.empty()) throw ValidationError("fomaml_gradient: no tasks");
  std::vector<nn::ParameterSet> grads(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    nn::ParameterSet theta = phi;
    nn::sgd_step(theta, batch_gradient(phi, tasks[t].support).grads, alpha);
    grads[t] = batch_gradient(theta, tasks[t].query).grads;
  });
  const auto mean = mean_flat(grads);
  nn::ParameterSet g = phi;
  auto out = g.flat();
  for (std::size_t i = 0; i < mean.size(); ++i) out[i] = static_cast<float>(mean[i]);
  return g;
}

}  // namespace metashift::meta
