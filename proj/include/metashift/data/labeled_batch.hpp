#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metashift/common/error.hpp"
#include "metashift/nn/network.hpp"
#include "metashift/taskgen/taskset.hpp"

namespace metashift::data {

/// Model-ready examples with their labels.
struct LabeledBatch {
  nn::Batch x;
  std::vector<std::uint8_t> y;

  int size() const { return x.size; }
};

/// Gathers task.waveforms[indices] in the given order.
inline LabeledBatch gather(const taskgen::Task& task, std::span<const std::uint32_t> indices) {
  if (task.waveforms.empty()) throw ValidationError("task " + std::to_string(task.id) + " has no waveforms");
  const int samples = task.waveforms.front().samples;
  LabeledBatch b;
  b.x = nn::Batch(static_cast<int>(indices.size()), 2, samples);
  b.y.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= task.waveforms.size())
      throw ValidationError("task " + std::to_string(task.id) + ": waveform index " +
                            std::to_string(indices[k]) + " out of range");
    const auto& w = task.waveforms[indices[k]];
    if (w.samples != samples) throw ValidationError("task " + std::to_string(task.id) + ": mixed waveform lengths");
    std::copy(w.data.begin(), w.data.end(), b.x.item(static_cast<int>(k)).begin());
    b.y.push_back(w.label);
  }
  return b;
}

/// Every waveform of the task.
inline LabeledBatch gather_all(const taskgen::Task& task) {
  std::vector<std::uint32_t> idx(task.waveforms.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return gather(task, idx);
}

/// Rows [begin, end) of a batch.
inline LabeledBatch slice(const LabeledBatch& b, int begin, int end) {
  LabeledBatch out;
  out.x = nn::Batch(end - begin, b.x.channels, b.x.samples);
  const std::size_t len = static_cast<std::size_t>(b.x.channels) * b.x.samples;
  std::copy(b.x.data.begin() + begin * len, b.x.data.begin() + end * len, out.x.data.begin());
  out.y.assign(b.y.begin() + begin, b.y.begin() + end);
  return out;
}

/// Rows picked by index, in the given order.
inline LabeledBatch select(const LabeledBatch& b, std::span<const std::uint32_t> rows) {
  LabeledBatch out;
  out.x = nn::Batch(static_cast<int>(rows.size()), b.x.channels, b.x.samples);
  out.y.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = b.x.item(static_cast<int>(rows[k]));
    std::copy(src.begin(), src.end(), out.x.item(static_cast<int>(k)).begin());
    out.y.push_back(b.y.at(rows[k]));
  }
  return out;
}

/// Row-wise concatenation; shapes must agree.
inline LabeledBatch concat(const LabeledBatch& a, const LabeledBatch& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.x.channels != b.x.channels || a.x.samples != b.x.samples)
    throw ValidationError("concat: batch shapes differ");
  LabeledBatch out;
  out.x = nn::Batch(a.size() + b.size(), a.x.channels, a.x.samples);
  std::copy(a.x.data.begin(), a.x.data.end(), out.x.data.begin());
  std::copy(b.x.data.begin(), b.x.data.end(), out.x.data.begin() + a.x.data.size());
  out.y = a.y;
  out.y.insert(out.y.end(), b.y.begin(), b.y.end());
  return out;
}

/// Fraction of examples classified correctly; p >= 0.5 predicts signal.
inline double accuracy(const nn::ParameterSet& params, const LabeledBatch& b) {
  if (b.size() == 0) throw ValidationError("accuracy: empty batch");
  const auto probs = nn::forward(params, b.x).probs;
  int correct = 0;
  for (int i = 0; i < b.size(); ++i) correct += (probs[i] >= 0.5f ? 1 : 0) == b.y[i];
  return static_cast<double>(correct) / b.size();
}

}  // namespace metashift::data
