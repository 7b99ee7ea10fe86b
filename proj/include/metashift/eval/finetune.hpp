#pragma once

#include <cstdint>
#include <vector>

#include "metashift/data/labeled_batch.hpp"
#include "metashift/meta/config.hpp"
#include "metashift/taskgen/taskset.hpp"

namespace metashift::eval {

inline constexpr int kFinetuneEpochs = 20;

/// Fine-tuning examples and the fixed evaluation pool of one task.
struct EvalData {
  int task_id = 0;
  int k = 0;
  data::LabeledBatch kshot;       // K pairs per class, signal/noise alternating
  data::LabeledBatch evaluation;  // independent of K
};

/// K pairs per class drawn from the partition's kshot list with a stream
/// keyed by (seed, task, K), so every algorithm sees the same examples.
/// Evaluation pool: every non-kshot waveform for factorial tasks, the
/// holdout for OOD tasks. Throws ValidationError when K exceeds the kshot
/// partition.
EvalData make_eval_data(const taskgen::Task& task, taskgen::TaskSetKind kind, const taskgen::Partition& partition,
                        int k, std::uint64_t seed);

struct FinetuneSpec {
  meta::Algorithm algorithm = meta::Algorithm::reptile;
  float inner_lr = 1e-2f;
  int inner_steps = 5;
  int epochs = kFinetuneEpochs;
};

/// Inner steps per fine-tuning epoch for Reptile: min(G, K).
int reptile_finetune_steps(int inner_steps, int k);
/// Mini-batch size for TDL fine-tuning: ceil(2K / 5).
int tdl_finetune_batch(int k);

struct FinetuneResult {
  int task_id = 0;
  int ensemble = 0;
  int k = 0;
  std::vector<double> accuracy;  // index = fine-tuning epoch, 0 = before fine-tuning

  bool operator==(const FinetuneResult&) const = default;
};

/// Accuracy of a copy of phi on data.evaluation before and after each
/// fine-tuning epoch. One epoch is: Reptile, min(G, K) SGD steps over the
/// kshot set split into contiguous batches; FOMAML, one full-batch SGD step;
/// TDL, 5 SGD steps of batch ceil(2K/5) cycling through the kshot set;
/// D&C, no update (the curve is flat).
FinetuneResult finetune_and_eval(const nn::ParameterSet& phi, const FinetuneSpec& spec, const EvalData& data,
                                 int ensemble = 0);

struct BestAccuracy {
  double accuracy = 0.0;
  int epoch = 0;
};

/// Maximum over epochs; the earliest epoch wins ties.
BestAccuracy best_accuracy(const FinetuneResult& r);
/// Mean epoch of best accuracy. Throws ValidationError on empty input.
double finetune_speed(const std::vector<FinetuneResult>& results);

}  // namespace metashift::eval
