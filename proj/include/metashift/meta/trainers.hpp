#pragma once

#include <functional>
#include <vector>

#include "metashift/meta/config.hpp"
#include "metashift/meta/inner.hpp"
#include "metashift/meta/train_log.hpp"
#include "metashift/shift/cluster.hpp"
#include "metashift/taskgen/taskset.hpp"

namespace metashift::meta {

/// Task ids for meta-training and for validation.
struct TaskSplit {
  std::vector<int> train;
  std::vector<int> validation;
};

/// Snapshot handed to TrainOptions::on_meta_step before each meta-update.
struct MetaStep {
  int epoch = 0;
  long step = 0;
  const nn::ParameterSet* phi = nullptr;          // parameters before the update
  const std::vector<int>* task_ids = nullptr;
  const std::vector<SupportQuery>* draws = nullptr;  // Reptile: data in .support only
  const nn::ParameterSet* direction = nullptr;    // gradient passed to Adam
};

struct TrainOptions {
  std::size_t jobs = 1;          // threads for per-task inner loops
  bool record_time = false;      // fill EpochRecord::seconds
  std::function<void(const MetaStep&)> on_meta_step;
};

struct TrainResult {
  nn::ParameterSet params;  // best-validation checkpoint
  TrainLog log;
};

/// Initial parameters of ensemble member e.
nn::ParameterSet initial_params(const MetaConfig& c, int ensemble);

/// Reptile (config.algorithm == reptile) or FOMAML (== fomaml). `weights`
/// covers split.train; tasks must carry partitions built with N = config.n_per_class.
TrainResult meta_train(const MetaConfig& config, const taskgen::TaskSet& set, const TaskSplit& split,
                       const shift::SamplingWeights& weights, int ensemble, const TrainOptions& opts = {});

/// Task-agnostic training on support and query data pooled over `pool`
/// (every meta-training and validation task), split 80/20 per task and class.
TrainResult tdl_train(const MetaConfig& config, const taskgen::TaskSet& set, const std::vector<int>& pool,
                      int ensemble, const TrainOptions& opts = {});

/// One model from scratch on a single task's support, query and kshot data.
TrainResult dnc_train(const MetaConfig& config, const taskgen::Task& task, int ensemble,
                      const TrainOptions& opts = {});

/// Per-class 80/20 split of the given examples (interleaved signal/noise
/// index lists); returns train and validation batches.
struct SupervisedData {
  data::LabeledBatch train;
  data::LabeledBatch validation;
};
SupervisedData supervised_split(const taskgen::Task& task, const std::vector<std::uint32_t>& indices,
                                double val_fraction, Rng& rng);

/// Trains config.ensembles members of the configured algorithm, members in
/// parallel over `jobs` threads. D&C needs a single task id in `split.train`.
std::vector<TrainResult> run_ensemble(const MetaConfig& config, const taskgen::TaskSet& set, const TaskSplit& split,
                                      const shift::SamplingWeights& weights, std::size_t jobs = 1,
                                      const TrainOptions& opts = {});

}  // namespace metashift::meta
