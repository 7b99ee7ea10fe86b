#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "metashift/taskgen/factors.hpp"
#include "metashift/taskgen/synthesis.hpp"
#include "metashift/taskgen/waveform.hpp"

namespace metashift::taskgen {

enum class TaskSetKind { factorial, ood_snr };
enum class Design { full, mini, ood };

/// Disjoint index lists into Task::waveforms. Each list alternates
/// signal/noise so any prefix of even length is class-balanced.
struct Partition {
  int n_per_class = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> support;
  std::vector<std::uint32_t> query;
  std::vector<std::uint32_t> kshot;
  std::vector<std::uint32_t> holdout;

  bool operator==(const Partition&) const = default;
};

struct Task {
  int id = 0;
  std::uint64_t seed = 0;
  std::optional<FactorLevels> factors;  // absent for OOD tasks
  double snr = 0.2;                     // signal-to-noise power ratio used for embedding
  std::vector<LabeledWaveform> waveforms;
  std::optional<Partition> partition;

  std::size_t count(std::uint8_t label) const;
  bool operator==(const Task&) const = default;
};

struct TaskSetConfig {
  TaskSetKind kind = TaskSetKind::factorial;
  Design design = Design::full;
  int reps_per_class = 210;
  int samples = kDefaultSamples;
  std::uint64_t master_seed = 0;
  int n_bins = 0;        // OOD only
  double snr_lo = 0.05;  // OOD sweep range
  double snr_hi = 2.0;

  bool operator==(const TaskSetConfig&) const = default;
};

struct TaskSet {
  TaskSetConfig config;
  std::vector<Task> tasks;

  const Task& task(int id) const;
  bool operator==(const TaskSet&) const = default;
};

/// Per-task seed: counter-based, so tasks can be generated in any order.
std::uint64_t task_seed(std::uint64_t master_seed, int task_id);

/// Re-renders signal waveform `rep` of a factorial task exactly as the
/// generator produced it, together with its pre-normalization SNR.
EmbedResult render_task_signal(const TaskSetConfig& config, const Task& task, int rep);

/// One task per design point, each with reps_per_class signal waveforms
/// followed by reps_per_class noise-only waveforms. Every noise draw comes
/// from its own stream keyed by (master seed, task, index, role).
TaskSet generate_taskset(int reps_per_class, int samples, std::uint64_t master_seed,
                         Design design = Design::full, std::size_t jobs = 1);

/// n_bins tasks whose signal SNRs are log-uniform bin centres over
/// [snr_lo, snr_hi], built from damped-sine sources.
TaskSet generate_ood_taskset(int n_bins, int reps_per_class, std::uint64_t master_seed,
                             int samples = kDefaultSamples, double snr_lo = 0.05,
                             double snr_hi = 2.0, std::size_t jobs = 1);

/// SNR of bin b out of n: exp of the bin-centre of the log range.
double ood_bin_snr(int bin, int n_bins, double snr_lo, double snr_hi);

/// Factorial tasks: support, query and kshot with N pairs per class each,
/// the rest holdout; needs >= 3N+1 per class. OOD tasks: kshot with N pairs
/// per class and the rest holdout; needs >= N+1 per class. Throws
/// ValidationError reporting required vs available counts.
Partition make_partition(const Task& task, TaskSetKind kind, int n_per_class, std::uint64_t seed);
void partition_task(Task& task, TaskSetKind kind, int n_per_class, std::uint64_t seed);
void partition_all(TaskSet& set, int n_per_class, std::uint64_t seed);

}  // namespace metashift::taskgen
