#include "metashift/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metashift/common/error.hpp"

namespace metashift::nn {

template <class T>
T sigmoid(T z) {
  if (z >= T{0}) return T{1} / (T{1} + std::exp(-z));
  const T e = std::exp(z);
  return e / (T{1} + e);
}

template <class T>
T bce_from_logit(T logit, std::uint8_t label) {
  const T y = static_cast<T>(label);
  return std::max(logit, T{0}) - y * logit + std::log1p(std::exp(-std::abs(logit)));
}

namespace {

// pre[b][o][t] = bias[o] + sum_c sum_k w[o][c][k] * x[b][c][t + k - pad]
template <class T>
void conv_forward(const std::vector<T>& x, std::span<const T> w, std::span<const T> bias,
                  std::vector<T>& pre, int batch, int cin, int cout, int kernel, int len) {
  const int pad = kernel / 2;
  pre.assign(static_cast<std::size_t>(batch) * cout * len, T{0});
  for (int b = 0; b < batch; ++b) {
    for (int o = 0; o < cout; ++o) {
      T* out = pre.data() + (static_cast<std::size_t>(b) * cout + o) * len;
      std::fill(out, out + len, bias[o]);
      for (int c = 0; c < cin; ++c) {
        const T* in = x.data() + (static_cast<std::size_t>(b) * cin + c) * len;
        const T* wk = w.data() + (static_cast<std::size_t>(o) * cin + c) * kernel;
        for (int k = 0; k < kernel; ++k) {
          const int off = k - pad;
          const int lo = std::max(0, -off);
          const int hi = std::min(len, len - off);
          const T wv = wk[k];
          for (int t = lo; t < hi; ++t) out[t] += wv * in[t + off];
        }
      }
    }
  }
}

template <class T>
void conv_backward(const std::vector<T>& x, std::span<const T> w, const std::vector<T>& dpre,
                   std::span<T> dw, std::span<T> db, std::vector<T>* dx, int batch, int cin,
                   int cout, int kernel, int len) {
  const int pad = kernel / 2;
  if (dx) dx->assign(static_cast<std::size_t>(batch) * cin * len, T{0});
  for (int b = 0; b < batch; ++b) {
    for (int o = 0; o < cout; ++o) {
      const T* g = dpre.data() + (static_cast<std::size_t>(b) * cout + o) * len;
      T gsum{0};
      for (int t = 0; t < len; ++t) gsum += g[t];
      db[o] += gsum;
      for (int c = 0; c < cin; ++c) {
        const std::size_t in_at = (static_cast<std::size_t>(b) * cin + c) * len;
        const T* in = x.data() + in_at;
        const std::size_t w_at = (static_cast<std::size_t>(o) * cin + c) * kernel;
        for (int k = 0; k < kernel; ++k) {
          const int off = k - pad;
          const int lo = std::max(0, -off);
          const int hi = std::min(len, len - off);
          T acc{0};
          for (int t = lo; t < hi; ++t) acc += g[t] * in[t + off];
          dw[w_at + k] += acc;
          if (dx) {
            const T wv = w[w_at + k];
            T* d = dx->data() + in_at;
            for (int t = lo; t < hi; ++t) d[t + off] += wv * g[t];
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
ForwardResult<T> forward(const BasicParameters<T>& params, const BasicBatch<T>& batch) {
  const auto& spec = params.spec();
  if (batch.size <= 0) throw ValidationError("forward: empty batch");
  if (batch.channels != spec.input_channels())
    throw ValidationError("conv layer 0: expected " + std::to_string(spec.input_channels()) +
                          " input channels, got " + std::to_string(batch.channels));
  if (batch.data.size() != static_cast<std::size_t>(batch.size) * batch.channels * batch.samples)
    throw ValidationError("forward: batch buffer does not match its declared shape");

  ForwardResult<T> result;
  auto& cache = result.cache;
  const int nb = batch.size;
  cache.batch = nb;

  std::vector<T> x = batch.data;
  int len = batch.samples;
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const auto& cs = spec.conv[i];
    if (len < 1 || (spec.pools_after(i) && len < 2))
      throw ValidationError("conv layer " + std::to_string(i) + ": sequence length " +
                            std::to_string(len) + " too short");
    cache.conv_lengths.push_back(len);
    std::vector<T> pre;
    conv_forward(x, params.weights(i), params.bias(i), pre, nb, cs.in_channels, cs.out_channels,
                 cs.kernel, len);
    cache.conv_inputs.push_back(std::move(x));
    if (spec.pools_after(i)) {
      const int out_len = len / 2;
      std::vector<T> pooled(static_cast<std::size_t>(nb) * cs.out_channels * out_len);
      std::vector<std::uint32_t> arg(pooled.size());
      for (int row = 0; row < nb * cs.out_channels; ++row) {
        const std::size_t base = static_cast<std::size_t>(row) * len;
        for (int t = 0; t < out_len; ++t) {
          const std::size_t i0 = base + 2 * static_cast<std::size_t>(t);
          const T a0 = std::max(pre[i0], T{0});
          const T a1 = std::max(pre[i0 + 1], T{0});
          const std::size_t at = static_cast<std::size_t>(row) * out_len + t;
          // ties go to the earlier index
          if (a1 > a0) {
            pooled[at] = a1;
            arg[at] = static_cast<std::uint32_t>(i0 + 1);
          } else {
            pooled[at] = a0;
            arg[at] = static_cast<std::uint32_t>(i0);
          }
        }
      }
      cache.pool_argmax.push_back(std::move(arg));
      x = std::move(pooled);
      len = out_len;
    } else {
      cache.pool_argmax.emplace_back();
      x.resize(pre.size());
      for (std::size_t j = 0; j < pre.size(); ++j) x[j] = std::max(pre[j], T{0});
    }
    cache.conv_pre.push_back(std::move(pre));
  }

  const int channels = spec.gap_dim();
  cache.gap_length = len;
  cache.gap_out.assign(static_cast<std::size_t>(nb) * channels, T{0});
  for (int row = 0; row < nb * channels; ++row) {
    T acc{0};
    const T* p = x.data() + static_cast<std::size_t>(row) * len;
    for (int t = 0; t < len; ++t) acc += p[t];
    cache.gap_out[row] = acc / static_cast<T>(len);
  }

  std::vector<T> h = cache.gap_out;
  for (std::size_t j = 0; j < spec.mlp.size(); ++j) {
    const auto& ds = spec.mlp[j];
    const std::size_t layer = spec.conv.size() + j;
    auto w = params.weights(layer);
    auto bias = params.bias(layer);
    std::vector<T> pre(static_cast<std::size_t>(nb) * ds.out_dim);
    for (int b = 0; b < nb; ++b) {
      const T* in = h.data() + static_cast<std::size_t>(b) * ds.in_dim;
      for (int o = 0; o < ds.out_dim; ++o) {
        T acc = bias[o];
        const T* wr = w.data() + static_cast<std::size_t>(o) * ds.in_dim;
        for (int k = 0; k < ds.in_dim; ++k) acc += wr[k] * in[k];
        pre[static_cast<std::size_t>(b) * ds.out_dim + o] = acc;
      }
    }
    cache.dense_inputs.push_back(std::move(h));
    if (j + 1 < spec.mlp.size()) {
      h.resize(pre.size());
      for (std::size_t k = 0; k < pre.size(); ++k) h[k] = std::max(pre[k], T{0});
    } else {
      cache.logits = pre;
    }
    cache.dense_pre.push_back(std::move(pre));
  }

  result.probs.resize(nb);
  for (int b = 0; b < nb; ++b) result.probs[b] = sigmoid(cache.logits[b]);
  return result;
}

template <class T>
LossAndGrads<T> loss_and_grads(const BasicParameters<T>& params, const ForwardCache<T>& cache,
                               std::span<const std::uint8_t> labels) {
  const auto& spec = params.spec();
  const int nb = cache.batch;
  if (labels.size() != static_cast<std::size_t>(nb))
    throw ValidationError("loss_and_grads: " + std::to_string(labels.size()) + " labels for a batch of " +
                          std::to_string(nb));
  for (auto y : labels)
    if (y > 1) throw ValidationError("loss_and_grads: label " + std::to_string(y) + " is not 0 or 1");

  LossAndGrads<T> out{T{0}, BasicParameters<T>(spec)};
  auto& grads = out.grads;

  double loss = 0.0;
  std::vector<T> d(nb);
  for (int b = 0; b < nb; ++b) {
    const T z = cache.logits[b];
    loss += static_cast<double>(bce_from_logit(z, labels[b]));
    d[b] = (sigmoid(z) - static_cast<T>(labels[b])) / static_cast<T>(nb);
  }
  out.loss = static_cast<T>(loss / nb);

  // Dense stack, last to first. `d` holds dL/d(pre-activation) of layer j.
  std::vector<T> din;
  for (std::size_t jj = spec.mlp.size(); jj-- > 0;) {
    const auto& ds = spec.mlp[jj];
    const std::size_t layer = spec.conv.size() + jj;
    auto w = params.weights(layer);
    auto dw = grads.weights(layer);
    auto db = grads.bias(layer);
    const auto& in = cache.dense_inputs[jj];
    din.assign(static_cast<std::size_t>(nb) * ds.in_dim, T{0});
    for (int b = 0; b < nb; ++b) {
      const T* x = in.data() + static_cast<std::size_t>(b) * ds.in_dim;
      T* dx = din.data() + static_cast<std::size_t>(b) * ds.in_dim;
      for (int o = 0; o < ds.out_dim; ++o) {
        const T g = d[static_cast<std::size_t>(b) * ds.out_dim + o];
        if (g == T{0}) continue;
        db[o] += g;
        T* dwr = dw.data() + static_cast<std::size_t>(o) * ds.in_dim;
        const T* wr = w.data() + static_cast<std::size_t>(o) * ds.in_dim;
        for (int k = 0; k < ds.in_dim; ++k) {
          dwr[k] += g * x[k];
          dx[k] += g * wr[k];
        }
      }
    }
    if (jj > 0) {
      const auto& prev_pre = cache.dense_pre[jj - 1];
      d.resize(din.size());
      for (std::size_t k = 0; k < din.size(); ++k) d[k] = prev_pre[k] > T{0} ? din[k] : T{0};
    }
  }

  // Global average pool spreads dL/dgap uniformly over the pooled length.
  const int len_out = cache.gap_length;
  std::vector<T> dout(din.size() * len_out);
  for (std::size_t row = 0; row < din.size(); ++row) {
    const T g = din[row] / static_cast<T>(len_out);
    std::fill(dout.begin() + row * len_out, dout.begin() + (row + 1) * len_out, g);
  }

  std::vector<T> dx;
  for (std::size_t i = spec.conv.size(); i-- > 0;) {
    const auto& cs = spec.conv[i];
    const auto& pre = cache.conv_pre[i];
    std::vector<T> dpre(pre.size(), T{0});
    if (spec.pools_after(i)) {
      const auto& arg = cache.pool_argmax[i];
      for (std::size_t p = 0; p < arg.size(); ++p) dpre[arg[p]] += dout[p];
    } else {
      dpre = dout;
    }
    for (std::size_t k = 0; k < dpre.size(); ++k)
      if (!(pre[k] > T{0})) dpre[k] = T{0};
    conv_backward(cache.conv_inputs[i], params.weights(i), dpre, grads.weights(i), grads.bias(i),
                  i > 0 ? &dx : nullptr, nb, cs.in_channels, cs.out_channels, cs.kernel,
                  cache.conv_lengths[i]);
    if (i > 0) dout.swap(dx);
  }
  return out;
}

template <class T>
T loss_only(const BasicParameters<T>& params, const BasicBatch<T>& batch,
            std::span<const std::uint8_t> labels) {
  auto fwd = forward(params, batch);
  if (labels.size() != fwd.cache.logits.size())
    throw ValidationError("loss_only: label count does not match batch size");
  double loss = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] > 1) throw ValidationError("loss_only: label is not 0 or 1");
    loss += static_cast<double>(bce_from_logit(fwd.cache.logits[b], labels[b]));
  }
  return static_cast<T>(loss / static_cast<double>(labels.size()));
}

#define METASHIFT_INSTANTIATE(T)                                                                \
  template T sigmoid<T>(T);                                                                     \
  template T bce_from_logit<T>(T, std::uint8_t);                                                \
  template ForwardResult<T> forward<T>(const BasicParameters<T>&, const BasicBatch<T>&);        \
  template LossAndGrads<T> loss_and_grads<T>(const BasicParameters<T>&, const ForwardCache<T>&, \
                                             std::span<const std::uint8_t>);                    \
  template T loss_only<T>(const BasicParameters<T>&, const BasicBatch<T>&,                      \
                          std::span<const std::uint8_t>);

METASHIFT_INSTANTIATE(float)
METASHIFT_INSTANTIATE(double)
#undef METASHIFT_INSTANTIATE

}  // namespace metashift::nn
