#include "metashift/taskgen/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "metashift/common/error.hpp"
#include "metashift/taskgen/waveform.hpp"

namespace metashift::taskgen {

namespace {

void normalize_peak(std::vector<double>& w) {
  double peak = 0.0;
  for (double v : w) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : w) v /= peak;
}

}  // namespace

std::vector<double> wavelet(Source kind, double f, double dt, int n) {
  if (!(f > 0.0)) throw ValidationError("wavelet: frequency must be > 0");
  if (!(dt > 0.0) || n < 1) throw ValidationError("wavelet: need dt > 0 and n >= 1");
  constexpr double pi = std::numbers::pi;
  std::vector<double> w(n);
  const double centre = 0.5 * (n - 1);
  for (int i = 0; i < n; ++i) {
    const double t = (i - centre) * dt;
    switch (kind) {
      case Source::Ricker: {
        const double a = pi * pi * f * f * t * t;
        w[i] = (1.0 - 2.0 * a) * std::exp(-a);
        break;
      }
      case Source::Gabor: {
        const double sigma = 1.0 / (2.0 * f);
        w[i] = std::cos(2.0 * pi * f * t) * std::exp(-t * t / (2.0 * sigma * sigma));
        break;
      }
      case Source::Spike: {
        const double u = t - kSpikeOffset / f;
        w[i] = std::exp(-u * u / (2.0 * kSpikeWidth * kSpikeWidth));
        break;
      }
    }
  }
  normalize_peak(w);
  return w;
}

std::vector<double> damped_sine_wavelet(double f, double decay, double dt, int n) {
  if (!(f > 0.0) || !(decay > 0.0)) throw ValidationError("damped_sine_wavelet: f and decay must be > 0");
  std::vector<double> w(n, 0.0);
  const double centre = 0.5 * (n - 1);
  for (int i = 0; i < n; ++i) {
    const double t = (i - centre) * dt;
    if (t >= 0.0) w[i] = std::sin(2.0 * std::numbers::pi * f * t) * std::exp(-t / decay);
  }
  normalize_peak(w);
  return w;
}

double ricker_zero_crossing(double f) { return 1.0 / (std::numbers::pi * f * std::sqrt(2.0)); }

double power(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double max_component_power(const Trace2& x) { return std::max(power(x[0]), power(x[1])); }

}  // namespace metashift::taskgen
