#include "context.hpp"

#include "metashift/common/error.hpp"
#include "metashift/common/rng.hpp"

namespace metashift::cli {

std::vector<std::string> Context::header(const std::string& command) const {
  return {" config_hash=" + config_hash, " command=" + command};
}

std::string stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path default_archive(const Context& ctx) { return ctx.out / "tasks"; }
fs::path shift_dir(const Context& ctx) { return ctx.out / "shift"; }
fs::path train_dir(const Context& ctx) { return ctx.out / "train"; }

std::uint64_t partition_seed(const taskgen::TaskSet& set, int n_per_class) {
  return derive_seed(set.config.master_seed, {31, static_cast<std::uint64_t>(n_per_class)});
}

std::uint64_t eval_partition_seed(const taskgen::TaskSet& set, int n_per_class) {
  return derive_seed(set.config.master_seed, {32, static_cast<std::uint64_t>(n_per_class)});
}

void require_partitionable(const taskgen::TaskSet& set, int n_per_class, int extra, const std::string& what) {
  const int reps = set.config.reps_per_class;
  const bool ood = set.config.kind == taskgen::TaskSetKind::ood_snr;
  const int need = (ood ? n_per_class : 3 * n_per_class) + extra;
  if (n_per_class < 1 || reps < need)
    throw ValidationError(what + " = " + std::to_string(n_per_class) + " needs " + std::to_string(need) +
                          " waveforms per class but the archive has " + std::to_string(reps) +
                          "; regenerate with a larger --reps");
}

fs::path split_path(const Context& ctx, meta::Sampling s) {
  return shift_dir(ctx) / ("splits_" + std::string(meta::to_string(s)) + ".csv");
}

fs::path weights_path(const Context& ctx, meta::Sampling s) {
  return shift_dir(ctx) / ("weights_" + std::string(meta::to_string(s)) + ".csv");
}

namespace {
csv::Table read_shift_output(const fs::path& path) {
  if (!fs::exists(path))
    throw MissingArtifactError(path.string() + " not found; run `metashift shift` first");
  return csv::read(path);
}
}  // namespace

SplitFile read_splits(const fs::path& path) {
  const auto t = read_shift_output(path);
  const auto id = t.column("task_id"), role = t.column("split");
  SplitFile s;
  for (const auto& r : t.rows) {
    const int task = std::stoi(r[id]);
    if (r[role] == "test") s.test.push_back(task);
    else if (r[role] == "train") s.train.push_back(task);
    else if (r[role] == "validation") s.validation.push_back(task);
    else throw FormatError(path.string() + ": unknown split '" + r[role] + "'");
  }
  return s;
}

shift::SamplingWeights read_weights(const fs::path& path) {
  const auto t = read_shift_output(path);
  const auto id = t.column("task_id"), g = t.column("gamma");
  shift::SamplingWeights w;
  for (const auto& r : t.rows) {
    w.ids.push_back(std::stoi(r[id]));
    w.gamma.push_back(std::stod(r[g]));
  }
  return w;
}

std::string join(const std::vector<int>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

}  // namespace metashift::cli
