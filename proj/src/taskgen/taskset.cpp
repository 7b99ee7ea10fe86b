#include "metashift/taskgen/taskset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metashift/common/error.hpp"
#include "metashift/common/parallel.hpp"
#include "metashift/common/rng.hpp"
#include "metashift/taskgen/synthesis.hpp"
#include "metashift/taskgen/wavelet.hpp"

namespace metashift::taskgen {

namespace {

enum StreamTag : std::uint64_t { kTask = 1, kSignal = 2, kNoise = 3, kPartition = 5 };
enum NoiseRole : std::uint64_t { kEmbedded = 0, kNoiseOnly = 1 };

std::uint64_t noise_seed(std::uint64_t master, int task_id, int index, NoiseRole role) {
  return derive_seed(master, {kNoise, static_cast<std::uint64_t>(task_id),
                              static_cast<std::uint64_t>(index), role});
}

void add_noise_only(Task& task, std::uint64_t master, int reps, int samples) {
  for (int i = 0; i < reps; ++i) {
    Rng rng(noise_seed(master, task.id, i, kNoiseOnly));
    task.waveforms.push_back(normalize_noise(synth_noise(rng, samples)));
  }
}

EmbedResult render_ood_signal(std::uint64_t signal_seed, std::uint64_t nseed, double snr, int samples) {
  Rng rng(signal_seed);
  const double f = rng.uniform(2.0, 20.0);
  const double decay = rng.uniform(0.1, 0.5);
  const auto w = damped_sine_wavelet(f, decay, kDt, kWaveletLength);
  constexpr int kCounts[] = {0, 2, 4};
  FactorLevels medium;
  medium.circles = kCounts[rng.index(3)];
  medium.layers = kCounts[rng.index(3)];
  medium.velocity = Level::LoHi;
  const auto placed = place_onset(surrogate_propagate(w, medium, rng, samples), rng);
  Rng noise_rng(nseed);
  return embed_signal(placed.trace, synth_noise(noise_rng, samples), snr);
}

}  // namespace

std::size_t Task::count(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count_if(waveforms.begin(), waveforms.end(),
                                                [label](const auto& w) { return w.label == label; }));
}

const Task& TaskSet::task(int id) const {
  for (const auto& t : tasks)
    if (t.id == id) return t;
  throw ValidationError("task " + std::to_string(id) + " not in task set");
}

std::uint64_t task_seed(std::uint64_t master_seed, int task_id) {
  return derive_seed(master_seed, {kTask, static_cast<std::uint64_t>(task_id)});
}

EmbedResult render_task_signal(const TaskSetConfig& config, const Task& task, int rep) {
  if (!task.factors) throw ValidationError("render_task_signal: task " + std::to_string(task.id) + " has no factor levels");
  return render_signal(*task.factors, derive_seed(task.seed, {kSignal, static_cast<std::uint64_t>(rep)}),
                       noise_seed(config.master_seed, task.id, rep, kEmbedded), config.samples);
}

TaskSet generate_taskset(int reps_per_class, int samples, std::uint64_t master_seed, Design design,
                         std::size_t jobs) {
  if (reps_per_class < 1) throw ValidationError("generate_taskset: reps_per_class must be >= 1");
  if (design == Design::ood) throw ValidationError("generate_taskset: use generate_ood_taskset");
  const auto points = design == Design::full ? full_design() : mini_design();

  TaskSet set;
  set.config = {TaskSetKind::factorial, design, reps_per_class, samples, master_seed, 0, 0.2, 0.2};
  set.tasks.resize(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    Task& task = set.tasks[i];
    task.id = static_cast<int>(i);
    task.seed = task_seed(master_seed, task.id);
    task.factors = points[i];
    task.snr = 0.2;
    task.waveforms.reserve(2 * static_cast<std::size_t>(reps_per_class));
    for (int r = 0; r < reps_per_class; ++r) task.waveforms.push_back(render_task_signal(set.config, task, r).waveform);
    add_noise_only(task, master_seed, reps_per_class, samples);
  });
  return set;
}

double ood_bin_snr(int bin, int n_bins, double snr_lo, double snr_hi) {
  const double a = std::log(snr_lo), b = std::log(snr_hi);
  return std::exp(a + (bin + 0.5) / n_bins * (b - a));
}

TaskSet generate_ood_taskset(int n_bins, int reps_per_class, std::uint64_t master_seed, int samples,
                             double snr_lo, double snr_hi, std::size_t jobs) {
  if (n_bins < 1) throw ValidationError("generate_ood_taskset: n_bins must be >= 1");
  if (reps_per_class < 1) throw ValidationError("generate_ood_taskset: reps_per_class must be >= 1");
  if (!(snr_lo > 0.0) || !(snr_hi >= snr_lo)) throw ValidationError("generate_ood_taskset: bad SNR range");

  TaskSet set;
  set.config = {TaskSetKind::ood_snr, Design::ood, reps_per_class, samples, master_seed, n_bins, snr_lo, snr_hi};
  set.tasks.resize(n_bins);
  parallel_for(static_cast<std::size_t>(n_bins), jobs, [&](std::size_t i) {
    Task& task = set.tasks[i];
    task.id = static_cast<int>(i);
    task.seed = task_seed(master_seed, task.id);
    task.snr = ood_bin_snr(task.id, n_bins, snr_lo, snr_hi);
    for (int r = 0; r < reps_per_class; ++r) {
      auto s = render_ood_signal(derive_seed(task.seed, {kSignal, static_cast<std::uint64_t>(r)}),
                                 noise_seed(master_seed, task.id, r, kEmbedded), task.snr, samples);
      task.waveforms.push_back(std::move(s.waveform));
    }
    add_noise_only(task, master_seed, reps_per_class, samples);
  });
  return set;
}

Partition make_partition(const Task& task, TaskSetKind kind, int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw ValidationError("partition: N must be >= 1");
  std::vector<std::uint32_t> by_class[2];
  for (std::uint32_t i = 0; i < task.waveforms.size(); ++i) by_class[task.waveforms[i].label].push_back(i);

  const std::size_t need = (kind == TaskSetKind::factorial ? 3u : 1u) * n_per_class + 1;
  const std::size_t have = std::min(by_class[0].size(), by_class[1].size());
  if (have < need)
    throw ValidationError("partition of task " + std::to_string(task.id) + " with N=" +
                          std::to_string(n_per_class) + " needs " + std::to_string(need) +
                          " waveforms per class, task has " + std::to_string(have));

  Rng rng(derive_seed(seed, {kPartition, static_cast<std::uint64_t>(task.id),
                             static_cast<std::uint64_t>(n_per_class)}));
  for (auto& c : by_class) rng.shuffle(std::span<std::uint32_t>(c));

  Partition p;
  p.n_per_class = n_per_class;
  p.seed = seed;
  std::size_t at = 0;
  auto take = [&](std::vector<std::uint32_t>& out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(by_class[1][at + i]);
      out.push_back(by_class[0][at + i]);
    }
    at += n;
  };
  if (kind == TaskSetKind::factorial) {
    take(p.support, n_per_class);
    take(p.query, n_per_class);
  }
  take(p.kshot, n_per_class);
  const std::size_t common = have - at;
  take(p.holdout, common);
  // unequal class sizes: leftovers of the larger class also go to holdout
  for (auto& c : by_class)
    for (std::size_t i = at; i < c.size(); ++i) p.holdout.push_back(c[i]);
  return p;
}

void partition_task(Task& task, TaskSetKind kind, int n_per_class, std::uint64_t seed) {
  task.partition = make_partition(task, kind, n_per_class, seed);
}

void partition_all(TaskSet& set, int n_per_class, std::uint64_t seed) {
  for (auto& t : set.tasks) partition_task(t, set.config.kind, n_per_class, seed);
}

}  // namespace metashift::taskgen
