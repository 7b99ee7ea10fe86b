#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace metashift::taskgen {

inline constexpr double kSampleRate = 100.0;  // Hz
inline constexpr double kDt = 1.0 / kSampleRate;
inline constexpr int kDefaultSamples = 500;   // 5 s

/// Two-component trace in double precision (vertical, horizontal).
using Trace2 = std::array<std::vector<double>, 2>;

/// Model-ready example: float32 [2][samples] stored channel-major, plus label.
struct LabeledWaveform {
  int samples = 0;
  std::uint8_t label = 0;
  std::vector<float> data;

  std::span<const float> component(int c) const {
    return std::span<const float>(data).subspan(static_cast<std::size_t>(c) * samples, samples);
  }
  bool operator==(const LabeledWaveform&) const = default;
};

/// Mean square of one component.
double power(std::span<const double> x);
/// Larger of the two component powers.
double max_component_power(const Trace2& x);

}  // namespace metashift::taskgen
