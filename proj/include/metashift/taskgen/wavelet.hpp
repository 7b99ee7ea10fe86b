#pragma once

#include <vector>

#include "metashift/taskgen/factors.hpp"

namespace metashift::taskgen {

/// Spike pulse: Gaussian with this standard deviation (s), independent of f.
inline constexpr double kSpikeWidth = 0.05;
/// Spike onset offset is kSpikeOffset / f seconds after the wavelet origin.
inline constexpr double kSpikeOffset = 0.3;

/// Source wavelet sampled at t_i = (i - (n-1)/2) * dt, scaled to peak |value| 1.
///   Ricker: (1 - 2 pi^2 f^2 t^2) exp(-pi^2 f^2 t^2)
///   Gabor:  cos(2 pi f t) exp(-t^2 / (2 sigma^2)), sigma = 1/(2f)
///   Spike:  exp(-(t - c/f)^2 / (2 w^2)), fixed width w
/// Throws ValidationError for f <= 0, dt <= 0 or n < 1.
std::vector<double> wavelet(Source kind, double f, double dt, int n);

/// Causal damped sinusoid sin(2 pi f t) exp(-t / decay), t >= 0, peak 1.
/// Used for the out-of-distribution set; shares no parameters with the
/// factorial sources.
std::vector<double> damped_sine_wavelet(double f, double decay, double dt, int n);

/// Ricker zero crossings sit at +-1/(pi f sqrt 2).
double ricker_zero_crossing(double f);

}  // namespace metashift::taskgen
