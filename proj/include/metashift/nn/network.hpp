#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metashift/nn/parameters.hpp"

namespace metashift::nn {

/// A batch of multichannel sequences, layout [sample][channel][time].
template <class T>
struct BasicBatch {
  int size = 0;
  int channels = 0;
  int samples = 0;
  std::vector<T> data;

  BasicBatch() = default;
  BasicBatch(int n, int c, int s)
      : size(n), channels(c), samples(s), data(static_cast<std::size_t>(n) * c * s) {}

  std::span<T> item(int i) {
    const std::size_t len = static_cast<std::size_t>(channels) * samples;
    return std::span<T>(data).subspan(static_cast<std::size_t>(i) * len, len);
  }
  std::span<const T> item(int i) const {
    const std::size_t len = static_cast<std::size_t>(channels) * samples;
    return std::span<const T>(data).subspan(static_cast<std::size_t>(i) * len, len);
  }

  template <class U>
  BasicBatch<U> cast() const {
    BasicBatch<U> out(size, channels, samples);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Batch = BasicBatch<float>;

/// Everything the backward pass needs from one forward pass.
template <class T>
struct ForwardCache {
  int batch = 0;
  std::vector<int> conv_lengths;               // input length of each conv layer
  std::vector<std::vector<T>> conv_inputs;     // [B][Cin][L]
  std::vector<std::vector<T>> conv_pre;        // pre-activation [B][Cout][L]
  std::vector<std::vector<std::uint32_t>> pool_argmax;  // per pooled layer, index into conv_pre
  int gap_length = 0;
  std::vector<T> gap_out;                      // [B][C], post-GAP features
  std::vector<std::vector<T>> dense_inputs;    // [B][in]
  std::vector<std::vector<T>> dense_pre;       // [B][out]
  std::vector<T> logits;                       // [B]
};

template <class T>
struct ForwardResult {
  std::vector<T> probs;
  ForwardCache<T> cache;
};

template <class T>
struct LossAndGrads {
  T loss;
  BasicParameters<T> grads;
};

/// conv/ReLU(/max-pool) stack -> global average pool -> MLP with ReLU
/// between layers -> logit -> sigmoid. Throws ValidationError naming the
/// offending layer when the batch does not fit the architecture.
template <class T>
ForwardResult<T> forward(const BasicParameters<T>& params, const BasicBatch<T>& batch);

/// Mean binary cross-entropy in the stable logit form and its exact
/// gradient. Labels must be 0 or 1.
template <class T>
LossAndGrads<T> loss_and_grads(const BasicParameters<T>& params, const ForwardCache<T>& cache,
                               std::span<const std::uint8_t> labels);

/// Loss without gradients.
template <class T>
T loss_only(const BasicParameters<T>& params, const BasicBatch<T>& batch,
            std::span<const std::uint8_t> labels);

/// softplus(z) - y*z, i.e. -[y log s(z) + (1-y) log(1-s(z))], stable for any z.
template <class T>
T bce_from_logit(T logit, std::uint8_t label);

template <class T>
T sigmoid(T z);

}  // namespace metashift::nn
