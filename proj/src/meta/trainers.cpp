#include "metashift/meta/trainers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "metashift/common/error.hpp"
#include "metashift/common/parallel.hpp"
#include "metashift/common/rng.hpp"
#include "metashift/nn/optimizer.hpp"

namespace metashift::meta {

namespace {

enum StreamTag : std::uint64_t { kInit = 11, kTrain = 12, kSplit = 13 };

class Clock {
 public:
  explicit Clock(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

const taskgen::Partition& partition_for(const taskgen::Task& task, int n) {
  if (!task.partition)
    throw ValidationError("task " + std::to_string(task.id) + " has no partition; partition the archive with N=" +
                          std::to_string(n));
  if (task.partition->n_per_class != n)
    throw ValidationError("task " + std::to_string(task.id) + " is partitioned with N=" +
                          std::to_string(task.partition->n_per_class) + " but training uses N=" + std::to_string(n));
  return *task.partition;
}

// Signal and noise indices of the given partition lists.
std::array<std::vector<std::uint32_t>, 2> by_class(const taskgen::Task& task,
                                                   std::initializer_list<const std::vector<std::uint32_t>*> lists) {
  std::array<std::vector<std::uint32_t>, 2> out;
  for (const auto* l : lists)
    for (auto i : *l) out[task.waveforms.at(i).label].push_back(i);
  return out;
}

// Signal/noise alternating list from rows [begin, begin+n) of each class.
std::vector<std::uint32_t> interleave(const std::array<std::vector<std::uint32_t>, 2>& cls, std::size_t begin,
                                      std::size_t n) {
  std::vector<std::uint32_t> out;
  for (std::size_t k = begin; k < begin + n; ++k) {
    out.push_back(cls[1].at(k));
    out.push_back(cls[0].at(k));
  }
  return out;
}

std::vector<std::uint32_t> concat_lists(std::initializer_list<const std::vector<std::uint32_t>*> lists) {
  std::vector<std::uint32_t> out;
  for (const auto* l : lists) out.insert(out.end(), l->begin(), l->end());
  return out;
}

struct Tracker {
  EarlyStopState stop;
  TrainLog log;
  nn::ParameterSet best;
  Clock clock;

  Tracker(int patience, bool timing) : stop(patience), clock(timing) {}

  // Returns true when training should halt.
  bool record(int epoch, double val_loss, long steps, const nn::ParameterSet& params) {
    log.epochs.push_back({epoch, val_loss, steps, clock.seconds()});
    if (stop.update(epoch, val_loss)) {
      best = params;
      log.best_epoch = epoch;
      log.best_val_loss = val_loss;
    }
    if (stop.should_stop()) {
      log.stopped_early = true;
      return true;
    }
    return false;
  }
};

}  // namespace

nn::ParameterSet initial_params(const MetaConfig& c, int ensemble) {
  return nn::init_params(nn::build_architecture(c.architecture),
                         derive_seed(c.seed, {kInit, static_cast<std::uint64_t>(ensemble)}));
}

TrainResult meta_train(const MetaConfig& config, const taskgen::TaskSet& set, const TaskSplit& split,
                       const shift::SamplingWeights& weights, int ensemble, const TrainOptions& opts) {
  validate(config);
  const bool reptile = config.algorithm == Algorithm::reptile;
  if (!reptile && config.algorithm != Algorithm::fomaml)
    throw ValidationError("meta_train: algorithm must be reptile or fomaml");
  if (split.train.empty()) throw ValidationError("meta_train: empty training split");
  if (split.validation.empty()) throw ValidationError("meta_train: empty validation split");
  if (std::set<int>(weights.ids.begin(), weights.ids.end()) != std::set<int>(split.train.begin(), split.train.end()))
    throw ValidationError("meta_train: sampling weights must cover exactly the training tasks");
  const int n = config.n_per_class;

  // per training task: signal and noise indices of support + query
  std::map<int, std::array<std::vector<std::uint32_t>, 2>> pools;
  for (int id : split.train) {
    const auto& t = set.task(id);
    const auto& p = partition_for(t, n);
    pools[id] = by_class(t, {&p.support, &p.query});
  }
  struct ValTask {
    data::LabeledBatch support, query;
  };
  std::vector<ValTask> val;
  for (int id : split.validation) {
    const auto& t = set.task(id);
    const auto& p = partition_for(t, n);
    val.push_back({data::gather(t, p.support), data::gather(t, p.query)});
  }
  const int val_steps = reptile ? config.inner_steps : 1;
  auto validation_loss = [&](const nn::ParameterSet& phi) {
    std::vector<double> losses(val.size());
    parallel_for(val.size(), opts.jobs, [&](std::size_t v) {
      const auto theta = inner_adapt(phi, val[v].support, val_steps, config.inner_lr);
      losses[v] = nn::loss_only(theta, val[v].query.x, val[v].query.y) / (2.0 * n);
    });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(losses.size());
  };

  nn::ParameterSet phi = initial_params(config, ensemble);
  nn::OptimizerState adam;
  adam.learning_rate = config.outer_lr;
  Rng rng(derive_seed(config.seed, {kTrain, static_cast<std::uint64_t>(config.algorithm),
                                    static_cast<std::uint64_t>(ensemble)}));
  Tracker tracker(config.patience, opts.record_time);
  const int t_train = static_cast<int>(split.train.size());
  const int batch = std::min(config.task_batch, t_train);
  const int pseudo = (t_train + config.task_batch - 1) / config.task_batch;
  long steps = 0;
  tracker.record(0, validation_loss(phi), steps, phi);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (int p = 0; p < pseudo; ++p) {
      const auto ids = shift::sample_task_batch(weights, batch, rng);
      std::vector<SupportQuery> draws(ids.size());
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto& task = set.task(ids[k]);
        auto cls = pools.at(ids[k]);
        for (auto& c : cls) rng.shuffle(std::span<std::uint32_t>(c));
        draws[k].support = data::gather(task, interleave(cls, 0, n));
        if (!reptile) draws[k].query = data::gather(task, interleave(cls, n, n));
      }
      nn::ParameterSet direction;
      if (reptile) {
        std::vector<data::LabeledBatch> sup;
        for (auto& d : draws) sup.push_back(d.support);
        direction = reptile_direction(phi, sup, config.inner_steps, config.inner_lr, opts.jobs);
      } else {
        direction = fomaml_gradient(phi, draws, config.inner_lr, opts.jobs);
      }
      if (opts.on_meta_step) opts.on_meta_step({epoch, steps, &phi, &ids, &draws, &direction});
      nn::adam_step(phi, direction, adam, config.outer_lr);
      ++steps;
    }
    if (tracker.record(epoch, validation_loss(phi), steps, phi)) break;
  }
  return {std::move(tracker.best), std::move(tracker.log)};
}

SupervisedData supervised_split(const taskgen::Task& task, const std::vector<std::uint32_t>& indices,
                                double val_fraction, Rng& rng) {
  std::array<std::vector<std::uint32_t>, 2> cls;
  for (auto i : indices) cls[task.waveforms.at(i).label].push_back(i);
  if (cls[0].size() != cls[1].size())
    throw ValidationError("task " + std::to_string(task.id) + ": training data is not class balanced");
  const std::size_t per_class = cls[0].size();
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(per_class)));
  if (n_val < 1 || n_val >= per_class)
    throw ValidationError("task " + std::to_string(task.id) + ": " + std::to_string(per_class) +
                          " examples per class cannot be split for validation");
  for (auto& c : cls) rng.shuffle(std::span<std::uint32_t>(c));
  return {data::gather(task, interleave(cls, 0, per_class - n_val)),
          data::gather(task, interleave(cls, per_class - n_val, n_val))};
}

namespace {

TrainResult supervised_loop(const MetaConfig& config, const SupervisedData& d, nn::ParameterSet params, Rng& rng,
                            const TrainOptions& opts) {
  nn::OptimizerState adam;
  adam.learning_rate = config.outer_lr;
  Tracker tracker(config.patience, opts.record_time);
  auto val_loss = [&](const nn::ParameterSet& p) { return static_cast<double>(nn::loss_only(p, d.validation.x, d.validation.y)); };
  long steps = 0;
  tracker.record(0, val_loss(params), steps, params);
  const auto n = static_cast<std::uint32_t>(d.train.size());
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  const auto bs = static_cast<std::uint32_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::uint32_t>(order));
    for (std::uint32_t begin = 0; begin < n; begin += bs) {
      const auto rows = std::span<const std::uint32_t>(order).subspan(begin, std::min(bs, n - begin));
      nn::adam_step(params, batch_gradient(params, data::select(d.train, rows)).grads, adam, config.outer_lr);
      ++steps;
    }
    if (tracker.record(epoch, val_loss(params), steps, params)) break;
  }
  return {std::move(tracker.best), std::move(tracker.log)};
}

}  // namespace

TrainResult tdl_train(const MetaConfig& config, const taskgen::TaskSet& set, const std::vector<int>& pool,
                      int ensemble, const TrainOptions& opts) {
  validate(config);
  if (pool.empty()) throw ValidationError("tdl_train: empty task pool");
  Rng rng(derive_seed(config.seed, {kTrain, static_cast<std::uint64_t>(Algorithm::tdl),
                                    static_cast<std::uint64_t>(ensemble)}));
  SupervisedData all;
  for (int id : pool) {
    const auto& t = set.task(id);
    const auto& p = partition_for(t, config.n_per_class);
    const auto part = supervised_split(t, concat_lists({&p.support, &p.query}), config.val_fraction, rng);
    all.train = data::concat(all.train, part.train);
    all.validation = data::concat(all.validation, part.validation);
  }
  return supervised_loop(config, all, initial_params(config, ensemble), rng, opts);
}

TrainResult dnc_train(const MetaConfig& config, const taskgen::Task& task, int ensemble, const TrainOptions& opts) {
  validate(config);
  const auto& p = partition_for(task, config.n_per_class);
  if (p.support.empty() || p.query.empty())
    throw ValidationError("dnc_train: task " + std::to_string(task.id) + " lacks support/query partitions");
  Rng rng(derive_seed(config.seed, {kTrain, static_cast<std::uint64_t>(Algorithm::dnc),
                                    static_cast<std::uint64_t>(task.id), static_cast<std::uint64_t>(ensemble)}));
  const auto d = supervised_split(task, concat_lists({&p.support, &p.query, &p.kshot}), config.val_fraction, rng);
  return supervised_loop(config, d, initial_params(config, ensemble), rng, opts);
}

std::vector<TrainResult> run_ensemble(const MetaConfig& config, const taskgen::TaskSet& set, const TaskSplit& split,
                                      const shift::SamplingWeights& weights, std::size_t jobs,
                                      const TrainOptions& opts) {
  validate(config);
  if (config.algorithm == Algorithm::dnc && split.train.size() != 1)
    throw ValidationError("run_ensemble: D&C trains on exactly one task");
  TrainOptions member_opts = opts;
  if (jobs > 1) member_opts.jobs = 1;
  std::vector<TrainResult> out(config.ensembles);
  parallel_for(out.size(), jobs, [&](std::size_t e) {
    const int idx = static_cast<int>(e);
    switch (config.algorithm) {
      case Algorithm::reptile:
      case Algorithm::fomaml: out[e] = meta_train(config, set, split, weights, idx, member_opts); break;
      case Algorithm::tdl: {
        std::vector<int> pool = split.train;
        pool.insert(pool.end(), split.validation.begin(), split.validation.end());
        out[e] = tdl_train(config, set, pool, idx, member_opts);
        break;
      }
      case Algorithm::dnc: out[e] = dnc_train(config, set.task(split.train.front()), idx, member_opts); break;
    }
  });
  return out;
}

}  // namespace metashift::meta
