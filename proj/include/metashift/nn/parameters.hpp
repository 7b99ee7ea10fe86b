#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metashift/nn/architecture.hpp"

namespace metashift::nn {

/// Weights and biases of one network, stored contiguously in layer order
/// (weights of layer 0, bias of layer 0, weights of layer 1, ...). Conv
/// weights are [out][in][kernel]; dense weights are [out][in].
template <class T>
class BasicParameters {
 public:
  BasicParameters() = default;
  explicit BasicParameters(ArchitectureSpec spec);

  const ArchitectureSpec& spec() const { return spec_; }

  std::span<T> weights(std::size_t layer) { return slice(layer, 0); }
  std::span<const T> weights(std::size_t layer) const { return slice(layer, 0); }
  std::span<T> bias(std::size_t layer) { return slice(layer, 1); }
  std::span<const T> bias(std::size_t layer) const { return slice(layer, 1); }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  std::size_t size() const { return data_.size(); }

  bool same_shape(const BasicParameters& other) const { return spec_ == other.spec_; }
  bool all_finite() const;

  template <class U>
  BasicParameters<U> cast() const {
    BasicParameters<U> out(spec_);
    auto dst = out.flat();
    for (std::size_t i = 0; i < data_.size(); ++i) dst[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const BasicParameters&) const = default;

 private:
  std::span<T> slice(std::size_t layer, int which) {
    return std::span<T>(data_).subspan(offsets_[2 * layer + which],
                                       offsets_[2 * layer + which + 1] - offsets_[2 * layer + which]);
  }
  std::span<const T> slice(std::size_t layer, int which) const {
    return std::span<const T>(data_).subspan(offsets_[2 * layer + which],
                                             offsets_[2 * layer + which + 1] - offsets_[2 * layer + which]);
  }

  ArchitectureSpec spec_;
  std::vector<std::size_t> offsets_;  // 2 * num_layers + 1 boundaries
  std::vector<T> data_;
};

using ParameterSet = BasicParameters<float>;

/// He-style uniform init: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero
/// biases. Deterministic in (spec, seed).
ParameterSet init_params(const ArchitectureSpec& spec, std::uint64_t seed);

extern template class BasicParameters<float>;
extern template class BasicParameters<double>;

}  // namespace metashift::nn
