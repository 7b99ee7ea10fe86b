#pragma once

#include <cstdint>
#include <span>

#include "metashift/common/rng.hpp"
#include "metashift/taskgen/factors.hpp"
#include "metashift/taskgen/waveform.hpp"

namespace metashift::taskgen {

/// Noise-free two-component signal and its arrival bookkeeping.
struct PureSignal {
  Trace2 trace;
  int first_arrival = 0;  // sample index of the direct arrival
  int arrivals = 0;       // nonzero entries of the vertical reflectivity
};

/// Sample index at which surrogate_propagate renders the direct arrival.
inline constexpr int kReferenceArrival = 100;
inline constexpr int kWaveletLength = 201;  // +-1 s at 100 Hz
/// Allowed first-arrival window, inclusive, in samples (0.5 s .. 4.5 s).
inline constexpr int kOnsetMin = 50;
inline constexpr int kOnsetMax = 450;

/// Stand-in for elastic wave propagation: the wavelet convolved with a
/// sparse reflectivity series. The direct arrival has unit amplitude; each
/// layer adds a two-way reflection at depth/velocity, each circle a weaker
/// diffraction. The horizontal component is an attenuated copy lagged by
/// the shear-wave delay over a fixed notional path. Slower media spread the
/// arrivals further apart.
PureSignal surrogate_propagate(std::span<const double> wavelet, const FactorLevels& factors,
                               Rng& rng, int samples = kDefaultSamples);

/// Moves the direct arrival to a uniformly drawn index in
/// [kOnsetMin, kOnsetMax] (clamped to the trace), zero-filling and
/// truncating; content is not wrapped around.
PureSignal place_onset(const PureSignal& pure, Rng& rng);

/// Colored Gaussian noise: per-component white noise through a first-order
/// IIR filter y[n] = x[n] + p y[n-1], with one pole p ~ U[0, 0.9] per waveform.
Trace2 synth_noise(Rng& rng, int samples = kDefaultSamples);

struct EmbedResult {
  LabeledWaveform waveform;     // label 1, max |value| = 1
  double pre_normalization_snr; // max-component power ratio, pure : noise
};

/// Scales the pure signal so its larger component power is 1, the noise so
/// its larger component power is 1/snr, sums, and renormalizes to max
/// |value| = 1. Throws NumericalError for an all-zero pure or noise trace.
EmbedResult embed_signal(const Trace2& pure, const Trace2& noise, double snr = 0.2);

/// Noise-only example: label 0, scaled to max |value| = 1.
LabeledWaveform normalize_noise(const Trace2& noise);

/// Complete signal-waveform pipeline for one factorial draw: velocity and
/// frequency from their level ranges, wavelet, propagation, onset, noise
/// (drawn from `noise_seed`), embedding at SNR 1/5.
EmbedResult render_signal(const FactorLevels& factors, std::uint64_t signal_seed,
                          std::uint64_t noise_seed, int samples = kDefaultSamples);

}  // namespace metashift::taskgen
