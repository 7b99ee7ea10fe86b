#include "metashift/taskgen/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "metashift/common/error.hpp"
#include "metashift/taskgen/wavelet.hpp"

namespace metashift::taskgen {

namespace {

constexpr double kShearPath = 1.0;  // km, notional source-receiver path for the S-P lag

void add_arrival(std::vector<double>& refl, int origin, double delay_s, double amplitude) {
  const long idx = origin + std::lround(delay_s * kSampleRate);
  if (idx >= 0 && idx < static_cast<long>(refl.size())) refl[idx] += amplitude;
}

double signed_amplitude(Rng& rng, double lo, double hi) {
  const double a = rng.uniform(lo, hi);
  return rng.uniform() < 0.5 ? -a : a;
}

std::vector<double> convolve_centred(const std::vector<double>& refl, std::span<const double> w) {
  const int n = static_cast<int>(w.size());
  const int half = (n - 1) / 2;
  const int len = static_cast<int>(refl.size());
  std::vector<double> out(len, 0.0);
  for (int k = 0; k < len; ++k) {
    if (refl[k] == 0.0) continue;
    const int t0 = std::max(0, k - half);
    const int t1 = std::min(len, k - half + n);
    for (int t = t0; t < t1; ++t) out[t] += refl[k] * w[t - k + half];
  }
  return out;
}

}  // namespace

PureSignal surrogate_propagate(std::span<const double> wavelet, const FactorLevels& factors,
                               Rng& rng, int samples) {
  validate(factors);
  if (samples < 2) throw ValidationError("surrogate_propagate: need at least 2 samples");
  const int origin = std::min(kReferenceArrival, samples / 2);
  const Range vr = velocity_range(factors.velocity);
  const double velocity = rng.uniform(vr.lo, vr.hi);

  std::vector<double> vertical(samples, 0.0);
  vertical[origin] = 1.0;  // direct wave
  for (int l = 0; l < factors.layers; ++l) {
    const double depth = rng.uniform(0.2, 2.0);
    add_arrival(vertical, origin, 2.0 * depth / velocity, signed_amplitude(rng, 0.3, 0.7));
  }
  for (int c = 0; c < factors.circles; ++c) {
    const double distance = rng.uniform(0.3, 3.0);
    add_arrival(vertical, origin, distance / velocity, signed_amplitude(rng, 0.15, 0.45));
  }

  const long lag = std::lround(kSampleRate * kShearPath * (std::sqrt(3.0) - 1.0) / velocity);
  const double attenuation = rng.uniform(0.4, 0.8);
  std::vector<double> horizontal(samples, 0.0);
  for (long i = 0; i + lag < samples; ++i) horizontal[i + lag] = attenuation * vertical[i];

  PureSignal out;
  out.first_arrival = origin;
  out.arrivals = static_cast<int>(std::count_if(vertical.begin(), vertical.end(),
                                                [](double r) { return r != 0.0; }));
  out.trace[0] = convolve_centred(vertical, wavelet);
  out.trace[1] = convolve_centred(horizontal, wavelet);
  return out;
}

PureSignal place_onset(const PureSignal& pure, Rng& rng) {
  const int samples = static_cast<int>(pure.trace[0].size());
  const int hi = std::min(kOnsetMax, samples - 1);
  const int lo = std::min(kOnsetMin, hi);
  const int onset = static_cast<int>(rng.integer(lo, hi));
  const int shift = onset - pure.first_arrival;

  PureSignal out;
  out.first_arrival = onset;
  out.arrivals = pure.arrivals;
  for (int c = 0; c < 2; ++c) {
    out.trace[c].assign(samples, 0.0);
    for (int t = 0; t < samples; ++t) {
      const int src = t - shift;
      if (src >= 0 && src < samples) out.trace[c][t] = pure.trace[c][src];
    }
  }
  return out;
}

Trace2 synth_noise(Rng& rng, int samples) {
  if (samples <= 0) throw ValidationError("synth_noise: samples must be > 0");
  const double pole = rng.uniform(0.0, 0.9);
  Trace2 out;
  for (auto& comp : out) {
    comp.resize(samples);
    // start from the stationary distribution of the AR(1) filter
    double y = rng.normal() / std::sqrt(1.0 - pole * pole);
    comp[0] = y;
    for (int t = 1; t < samples; ++t) {
      y = rng.normal() + pole * y;
      comp[t] = y;
    }
  }
  return out;
}

EmbedResult embed_signal(const Trace2& pure, const Trace2& noise, double snr) {
  if (!(snr > 0.0)) throw ValidationError("embed_signal: snr must be > 0");
  if (pure[0].size() != noise[0].size() || pure[1].size() != noise[1].size() ||
      pure[0].size() != pure[1].size())
    throw ValidationError("embed_signal: pure and noise lengths differ");
  const double pure_power = max_component_power(pure);
  const double noise_power = max_component_power(noise);
  if (!(pure_power > 0.0)) throw NumericalError("embed_signal: pure signal is identically zero");
  if (!(noise_power > 0.0)) throw NumericalError("embed_signal: noise is identically zero");

  const double pure_scale = 1.0 / std::sqrt(pure_power);
  const double noise_scale = std::sqrt((1.0 / snr) / noise_power);
  Trace2 scaled_pure, scaled_noise, mixed;
  for (int c = 0; c < 2; ++c) {
    const auto n = pure[c].size();
    scaled_pure[c].resize(n);
    scaled_noise[c].resize(n);
    mixed[c].resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      scaled_pure[c][t] = pure[c][t] * pure_scale;
      scaled_noise[c][t] = noise[c][t] * noise_scale;
      mixed[c][t] = scaled_pure[c][t] + scaled_noise[c][t];
    }
  }

  EmbedResult out;
  out.pre_normalization_snr = max_component_power(scaled_pure) / max_component_power(scaled_noise);
  double peak = 0.0;
  for (const auto& comp : mixed)
    for (double v : comp) peak = std::max(peak, std::abs(v));
  const int samples = static_cast<int>(mixed[0].size());
  out.waveform.samples = samples;
  out.waveform.label = 1;
  out.waveform.data.resize(2 * static_cast<std::size_t>(samples));
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < samples; ++t)
      out.waveform.data[static_cast<std::size_t>(c) * samples + t] = static_cast<float>(mixed[c][t] / peak);
  return out;
}

LabeledWaveform normalize_noise(const Trace2& noise) {
  double peak = 0.0;
  for (const auto& comp : noise)
    for (double v : comp) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) throw NumericalError("normalize_noise: noise is identically zero");
  LabeledWaveform out;
  out.samples = static_cast<int>(noise[0].size());
  out.label = 0;
  out.data.resize(2 * static_cast<std::size_t>(out.samples));
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < out.samples; ++t)
      out.data[static_cast<std::size_t>(c) * out.samples + t] = static_cast<float>(noise[c][t] / peak);
  return out;
}

EmbedResult render_signal(const FactorLevels& factors, std::uint64_t signal_seed,
                          std::uint64_t noise_seed, int samples) {
  Rng rng(signal_seed);
  const Range fr = frequency_range(factors.frequency);
  const double f = rng.uniform(fr.lo, fr.hi);
  const auto w = wavelet(factors.source, f, kDt, kWaveletLength);
  const auto placed = place_onset(surrogate_propagate(w, factors, rng, samples), rng);
  Rng noise_rng(noise_seed);
  return embed_signal(placed.trace, synth_noise(noise_rng, samples), 0.2);
}

}  // namespace metashift::taskgen
