#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "metashift/nn/network.hpp"

namespace metashift::nn {

struct GradientCheckOptions {
  double step = 1e-3;
  /// 0 checks every parameter; otherwise at most this many evenly spaced
  /// entries from each weight and bias array.
  std::size_t max_entries_per_array = 0;
  /// Differences below this are treated as agreement (both sides ~0).
  double absolute_floor = 1e-9;
  /// When a ±step probe changes the ReLU/max-pool pattern the loss is not
  /// differentiable over the probe interval; the step is divided by 10 up to
  /// this many times before the entry is skipped.
  int max_step_shrinks = 4;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t shrunk = 0;   // entries that needed a smaller step
  std::size_t skipped = 0;  // entries with no kink-free step
};

/// Analytic gradient vs central finite differences, in 64-bit arithmetic.
GradientCheckReport gradient_check_report(const BasicParameters<double>& params,
                                          const BasicBatch<double>& batch,
                                          std::span<const std::uint8_t> labels,
                                          const GradientCheckOptions& options = {});

/// Worst relative error for parameters initialized from `seed`, with biases
/// jittered off zero so no unit sits exactly on a ReLU kink.
double gradient_check(const ArchitectureSpec& spec, std::uint64_t seed,
                      const BasicBatch<double>& batch, std::span<const std::uint8_t> labels,
                      const GradientCheckOptions& options = {});

/// Worst relative error for explicit parameters.
double gradient_check(const BasicParameters<double>& params, const BasicBatch<double>& batch,
                      std::span<const std::uint8_t> labels, const GradientCheckOptions& options = {});

}  // namespace metashift::nn
