#include "metashift/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "metashift/common/rng.hpp"

namespace metashift::nn {

namespace {

std::vector<std::size_t> pick(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (cap == 0 || n <= cap) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  for (std::size_t i = 0; i < cap; ++i) idx.push_back(i * (n - 1) / (cap - 1));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

struct Probe {
  double loss;
  std::uint64_t pattern;  // hash of every ReLU mask bit and pool choice
};

Probe evaluate(const BasicParameters<double>& params, const BasicBatch<double>& batch,
               std::span<const std::uint8_t> labels) {
  auto fwd = forward(params, batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) loss += bce_from_logit(fwd.cache.logits[b], labels[b]);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) { h = (h ^ v) * 0x100000001b3ULL; };
  for (const auto& pre : fwd.cache.conv_pre)
    for (double v : pre) mix(v > 0.0);
  for (const auto& arg : fwd.cache.pool_argmax)
    for (auto a : arg) mix(a);
  for (std::size_t j = 0; j + 1 < fwd.cache.dense_pre.size(); ++j)
    for (double v : fwd.cache.dense_pre[j]) mix(v > 0.0);
  return {loss / static_cast<double>(labels.size()), h};
}

}  // namespace

GradientCheckReport gradient_check_report(const BasicParameters<double>& params,
                                          const BasicBatch<double>& batch,
                                          std::span<const std::uint8_t> labels,
                                          const GradientCheckOptions& options) {
  auto fwd = forward(params, batch);
  const auto analytic = loss_and_grads(params, fwd.cache, labels).grads;
  const std::uint64_t base_pattern = evaluate(params, batch, labels).pattern;
  BasicParameters<double> probe = params;
  const auto& spec = params.spec();

  GradientCheckReport report;
  auto check_array = [&](std::span<double> values, std::span<const double> grad) {
    for (std::size_t i : pick(values.size(), options.max_entries_per_array)) {
      const double saved = values[i];
      double step = options.step;
      bool stable = false;
      double numeric = 0.0;
      for (int attempt = 0; attempt <= options.max_step_shrinks; ++attempt, step /= 10.0) {
        values[i] = saved + step;
        const auto up = evaluate(probe, batch, labels);
        values[i] = saved - step;
        const auto down = evaluate(probe, batch, labels);
        values[i] = saved;
        if (up.pattern == base_pattern && down.pattern == base_pattern) {
          numeric = (up.loss - down.loss) / (2.0 * step);
          stable = true;
          if (attempt > 0) ++report.shrunk;
          break;
        }
      }
      if (!stable) {
        ++report.skipped;
        continue;
      }
      ++report.checked;
      const double diff = std::abs(numeric - grad[i]);
      if (diff <= options.absolute_floor) continue;
      const double scale = std::max(std::abs(numeric), std::abs(grad[i]));
      report.max_relative_error = std::max(report.max_relative_error, diff / scale);
    }
  };
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    check_array(probe.weights(l), analytic.weights(l));
    check_array(probe.bias(l), analytic.bias(l));
  }
  return report;
}

double gradient_check(const BasicParameters<double>& params, const BasicBatch<double>& batch,
                      std::span<const std::uint8_t> labels, const GradientCheckOptions& options) {
  return gradient_check_report(params, batch, labels, options).max_relative_error;
}

double gradient_check(const ArchitectureSpec& spec, std::uint64_t seed,
                      const BasicBatch<double>& batch, std::span<const std::uint8_t> labels,
                      const GradientCheckOptions& options) {
  // Zero biases put every unit of an all-zero input exactly on a ReLU kink,
  // where central differences see the average of the one-sided slopes.
  auto params = init_params(spec, seed).cast<double>();
  Rng rng(derive_seed(seed, {0x9c}));
  for (std::size_t l = 0; l < spec.num_layers(); ++l)
    for (auto& b : params.bias(l)) b = rng.uniform(-0.1, 0.1);
  return gradient_check(params, batch, labels, options);
}

}  // namespace metashift::nn
