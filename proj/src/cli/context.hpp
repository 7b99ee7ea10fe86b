#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "metashift/common/csv.hpp"
#include "metashift/meta/config.hpp"
#include "metashift/shift/cluster.hpp"
#include "metashift/taskgen/taskset.hpp"

namespace metashift::cli {

namespace fs = std::filesystem;

struct Context {
  fs::path out;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  bool timing = false;
  std::string config_hash;  // hash of the canonical option text of this command
  std::ostream* log = nullptr;

  std::ostream& say() const { return *log; }
  /// Comment lines every CSV output starts with.
  std::vector<std::string> header(const std::string& command) const;
};

/// 64-bit FNV-1a, 16 hex digits.
std::string stable_hash(std::string_view text);

fs::path default_archive(const Context& ctx);
fs::path shift_dir(const Context& ctx);
fs::path train_dir(const Context& ctx);

/// Partition seeds depend on the archive and N only, so every command that
/// partitions with the same N sees the same lists.
std::uint64_t partition_seed(const taskgen::TaskSet& set, int n_per_class);
/// Evaluation partitions use a separate stream.
std::uint64_t eval_partition_seed(const taskgen::TaskSet& set, int n_per_class);

/// Throws ValidationError naming the grid value when the archive cannot be
/// partitioned with N pairs per class (factorial: 3N + extra, OOD: N + 1).
void require_partitionable(const taskgen::TaskSet& set, int n_per_class, int extra, const std::string& what);

// Split files written by `shift` and read by `train` / `eval`.
struct SplitFile {
  std::vector<int> test;
  std::vector<int> train;
  std::vector<int> validation;
};
fs::path split_path(const Context& ctx, meta::Sampling s);
fs::path weights_path(const Context& ctx, meta::Sampling s);
SplitFile read_splits(const fs::path& path);
shift::SamplingWeights read_weights(const fs::path& path);

std::string join(const std::vector<int>& v, const std::string& sep = ",");

}  // namespace metashift::cli
