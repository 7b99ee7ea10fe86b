#include "metashift/eval/finetune.hpp"

#include <algorithm>

#include "metashift/common/error.hpp"
#include "metashift/common/rng.hpp"
#include "metashift/meta/inner.hpp"
#include "metashift/nn/optimizer.hpp"

namespace metashift::eval {

namespace {
constexpr std::uint64_t kKshotStream = 21;
constexpr int kTdlSteps = 5;
}  // namespace

EvalData make_eval_data(const taskgen::Task& task, taskgen::TaskSetKind kind, const taskgen::Partition& partition,
                        int k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("K must be >= 1");
  std::array<std::vector<std::uint32_t>, 2> cls;
  for (auto i : partition.kshot) cls[task.waveforms.at(i).label].push_back(i);
  const auto have = std::min(cls[0].size(), cls[1].size());
  if (static_cast<std::size_t>(k) > have)
    throw ValidationError("task " + std::to_string(task.id) + ": K=" + std::to_string(k) + " exceeds the kshot partition (" +
                          std::to_string(have) + " pairs per class)");
  Rng rng(derive_seed(seed, {kKshotStream, static_cast<std::uint64_t>(task.id), static_cast<std::uint64_t>(k)}));
  for (auto& c : cls) rng.shuffle(std::span<std::uint32_t>(c));
  std::vector<std::uint32_t> shots;
  for (int i = 0; i < k; ++i) {
    shots.push_back(cls[1][i]);
    shots.push_back(cls[0][i]);
  }

  std::vector<std::uint32_t> pool;
  if (kind == taskgen::TaskSetKind::ood_snr) {
    pool = partition.holdout;
  } else {
    for (const auto* l : {&partition.support, &partition.query, &partition.holdout}) pool.insert(pool.end(), l->begin(), l->end());
  }
  if (pool.empty()) throw ValidationError("task " + std::to_string(task.id) + ": empty evaluation pool");
  EvalData d;
  d.task_id = task.id;
  d.k = k;
  d.kshot = data::gather(task, shots);
  d.evaluation = data::gather(task, pool);
  return d;
}

int reptile_finetune_steps(int inner_steps, int k) { return std::min(inner_steps, k); }

int tdl_finetune_batch(int k) { return (2 * k + kTdlSteps - 1) / kTdlSteps; }

FinetuneResult finetune_and_eval(const nn::ParameterSet& phi, const FinetuneSpec& spec, const EvalData& data,
                                 int ensemble) {
  if (spec.epochs < 0) throw ValidationError("fine-tuning epochs must be >= 0");
  FinetuneResult r;
  r.task_id = data.task_id;
  r.ensemble = ensemble;
  r.k = data.k;
  nn::ParameterSet theta = phi;
  r.accuracy.push_back(data::accuracy(theta, data.evaluation));

  const int n = data.kshot.size();
  const int tdl_batch = tdl_finetune_batch(data.k);
  int cursor = 0;  // TDL position in the kshot set, carried across epochs
  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    switch (spec.algorithm) {
      case meta::Algorithm::reptile:
        theta = meta::inner_adapt(theta, data.kshot, reptile_finetune_steps(spec.inner_steps, data.k), spec.inner_lr);
        break;
      case meta::Algorithm::fomaml:
        theta = meta::inner_adapt(theta, data.kshot, 1, spec.inner_lr);
        break;
      case meta::Algorithm::tdl:
        for (int s = 0; s < kTdlSteps; ++s) {
          std::vector<std::uint32_t> rows;
          for (int b = 0; b < tdl_batch; ++b, cursor = (cursor + 1) % n) rows.push_back(static_cast<std::uint32_t>(cursor));
          nn::sgd_step(theta, meta::batch_gradient(theta, data::select(data.kshot, rows)).grads, spec.inner_lr);
        }
        break;
      case meta::Algorithm::dnc:
        r.accuracy.push_back(r.accuracy.front());
        continue;
    }
    r.accuracy.push_back(data::accuracy(theta, data.evaluation));
  }
  return r;
}

BestAccuracy best_accuracy(const FinetuneResult& r) {
  if (r.accuracy.empty()) throw ValidationError("best_accuracy: empty accuracy curve");
  BestAccuracy b{r.accuracy[0], 0};
  for (std::size_t e = 1; e < r.accuracy.size(); ++e)
    if (r.accuracy[e] > b.accuracy) b = {r.accuracy[e], static_cast<int>(e)};
  return b;
}

double finetune_speed(const std::vector<FinetuneResult>& results) {
  if (results.empty()) throw ValidationError("finetune_speed: no results");
  double sum = 0.0;
  for (const auto& r : results) sum += best_accuracy(r).epoch;
  return sum / static_cast<double>(results.size());
}

}  // namespace metashift::eval
