#include "metashift/nn/parameters.hpp"

#include <cmath>

#include "metashift/common/rng.hpp"

namespace metashift::nn {

template <class T>
BasicParameters<T>::BasicParameters(ArchitectureSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  offsets_.reserve(2 * spec_.num_layers() + 1);
  std::size_t at = 0;
  offsets_.push_back(at);
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    at += spec_.weight_count(l);
    offsets_.push_back(at);
    at += spec_.bias_count(l);
    offsets_.push_back(at);
  }
  data_.assign(at, T{0});
}

template <class T>
bool BasicParameters<T>::all_finite() const {
  for (T v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

template class BasicParameters<float>;
template class BasicParameters<double>;

ParameterSet init_params(const ArchitectureSpec& spec, std::uint64_t seed) {
  ParameterSet params(spec);
  Rng rng(derive_seed(seed, {0x1a17}));
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const double fan_in = spec.is_conv(l)
                              ? static_cast<double>(spec.conv[l].in_channels) * spec.conv[l].kernel
                              : static_cast<double>(spec.mlp[l - spec.conv.size()].in_dim);
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& w : params.weights(l)) w = static_cast<float>(rng.uniform(-bound, bound));
  }
  return params;
}

}  // namespace metashift::nn
