#include <algorithm>
#include <map>

#include "commands.hpp"
#include "metashift/common/error.hpp"
#include "metashift/common/io.hpp"
#include "metashift/common/parallel.hpp"
#include "metashift/meta/trainers.hpp"
#include "metashift/nn/checkpoint.hpp"
#include "metashift/taskgen/archive.hpp"

namespace metashift::cli {

namespace {

constexpr const char* kCellFile = "cell.txt";
constexpr const char* kDoneFile = "complete";

struct Cell {
  meta::MetaConfig config;
  std::string name;
};

std::string cell_name(const meta::MetaConfig& c) {
  const std::string id = std::string(meta::to_string(c.algorithm)) + "_" + std::string(nn::to_string(c.architecture)) + "_N" +
                         std::to_string(c.n_per_class) + "_" + std::string(meta::to_string(c.sampling)) + "_s" +
                         std::to_string(c.seed);
  return id + "_" + stable_hash(id).substr(0, 8);
}

std::vector<Cell> expand(const GridArgs& a, const Context& ctx) {
  const auto seeds = a.seeds.empty() ? std::vector<std::uint64_t>{ctx.seed} : a.seeds;
  std::map<std::string, Cell> cells;  // keyed by name: sorted and de-duplicated
  for (const auto& alg_name : a.algorithms)
    for (const auto& arch : a.architectures)
      for (int n : a.n)
        for (const auto& samp : a.sampling)
          for (auto seed : seeds) {
            auto c = meta::default_config(meta::parse_algorithm(alg_name));
            c.architecture = nn::parse_arch_size(arch);
            c.n_per_class = n;
            c.seed = seed;
            // weights only matter to the meta-learners
            const bool meta_learner = c.algorithm == meta::Algorithm::reptile || c.algorithm == meta::Algorithm::fomaml;
            c.sampling = meta_learner ? meta::parse_sampling(samp) : meta::Sampling::uniform;
            if (a.ensembles > 0) c.ensembles = a.ensembles;
            if (a.max_epochs > 0) c.max_epochs = a.max_epochs;
            if (a.patience > 0) c.patience = a.patience;
            meta::validate(c);
            cells.emplace(cell_name(c), Cell{c, cell_name(c)});
          }
  std::vector<Cell> out;
  for (auto& [name, c] : cells) out.push_back(std::move(c));
  std::stable_sort(out.begin(), out.end(), [](const Cell& x, const Cell& y) { return x.config.n_per_class < y.config.n_per_class; });
  return out;
}

std::string cell_text(const meta::MetaConfig& c, const Context& ctx) {
  return "#" + ctx.header("train")[0] + "\n" + meta::config_text(c);
}

void write_log(const fs::path& path, const meta::TrainLog& log, const Context& ctx) {
  meta::write_train_log(path, log, ctx.header("train"));
}

void train_cell(const Cell& cell, const taskgen::TaskSet& set, const SplitFile& split, const shift::SamplingWeights& w,
                const fs::path& dir, const Context& ctx) {
  const auto& c = cell.config;
  meta::TrainOptions opts;
  opts.record_time = ctx.timing;

  struct Job {
    int task = -1;  // D&C only
    int e = 0;
  };
  std::vector<Job> jobs;
  if (c.algorithm == meta::Algorithm::dnc) {
    for (int t : split.test)
      for (int e = 0; e < c.ensembles; ++e)
        if (!fs::exists(task_member_path(dir, t, e))) jobs.push_back({t, e});
  } else {
    for (int e = 0; e < c.ensembles; ++e)
      if (!fs::exists(member_path(dir, e))) jobs.push_back({-1, e});
  }
  ctx.say() << "train: " << cell.name << ": " << jobs.size() << " model(s) to fit\n";

  const meta::TaskSplit ts{split.train, split.validation};
  std::vector<int> pool = split.train;
  pool.insert(pool.end(), split.validation.begin(), split.validation.end());
  std::sort(pool.begin(), pool.end());

  parallel_for(jobs.size(), ctx.jobs, [&](std::size_t i) {
    const auto [task, e] = jobs[i];
    meta::TrainResult r;
    fs::path path;
    switch (c.algorithm) {
      case meta::Algorithm::reptile:
      case meta::Algorithm::fomaml:
        r = meta::meta_train(c, set, ts, w, e, opts);
        path = member_path(dir, e);
        break;
      case meta::Algorithm::tdl:
        r = meta::tdl_train(c, set, pool, e, opts);
        path = member_path(dir, e);
        break;
      case meta::Algorithm::dnc:
        r = meta::dnc_train(c, set.task(task), e, opts);
        path = task_member_path(dir, task, e);
        break;
    }
    // log first: a checkpoint without its log would be skipped on resume
    auto log_path = path;
    write_log(log_path.replace_extension(".log.csv"), r.log, ctx);
    nn::save_checkpoint(r.params, path);
  });
}

}  // namespace

fs::path member_path(const fs::path& cell_dir, int ensemble) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_e%02d.msnn", ensemble);
  return cell_dir / buf;
}

fs::path task_member_path(const fs::path& cell_dir, int task, int ensemble) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "task_%04d_e%02d.msnn", task, ensemble);
  return cell_dir / buf;
}

std::vector<CellInfo> list_complete_cells(const Context& ctx) {
  std::vector<CellInfo> cells;
  const auto root = train_dir(ctx);
  if (!fs::exists(root)) return cells;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / kDoneFile)) continue;
    cells.push_back({entry.path().filename().string(), meta::parse_config_text(io::read_file(entry.path() / kCellFile)),
                     entry.path()});
  }
  std::sort(cells.begin(), cells.end(), [](const CellInfo& a, const CellInfo& b) { return a.name < b.name; });
  return cells;
}

std::string canonical(const GridArgs& a, const Context& ctx) {
  std::string s = "train algorithms=";
  for (const auto& x : a.algorithms) s += x + ",";
  s += " architectures=";
  for (const auto& x : a.architectures) s += x + ",";
  s += " n=" + join(a.n) + " sampling=";
  for (const auto& x : a.sampling) s += x + ",";
  s += " seeds=";
  for (auto x : a.seeds.empty() ? std::vector<std::uint64_t>{ctx.seed} : a.seeds) s += std::to_string(x) + ",";
  s += " ensembles=" + std::to_string(a.ensembles) + " max_epochs=" + std::to_string(a.max_epochs) +
       " patience=" + std::to_string(a.patience) + " timing=" + (ctx.timing ? "1" : "0");
  return s;
}

void cmd_train(const GridArgs& a, const Context& ctx) {
  const auto cells = expand(a, ctx);
  if (cells.empty()) throw ValidationError("the training grid is empty");
  auto set = taskgen::load_archive(a.archive.empty() ? default_archive(ctx) : fs::path(a.archive));
  if (set.config.kind != taskgen::TaskSetKind::factorial) throw ValidationError("train needs a factorial archive, not an OOD one");
  for (const auto& cell : cells) require_partitionable(set, cell.config.n_per_class, 0, "grid N");

  int partitioned = -1;
  int done = 0;
  for (const auto& cell : cells) {
    const auto dir = train_dir(ctx) / cell.name;
    const auto text = cell_text(cell.config, ctx);
    if (fs::exists(dir / kCellFile)) {
      const auto stored = meta::parse_config_text(io::read_file(dir / kCellFile));
      if (!(stored == cell.config))
        throw ValidationError(dir.string() + " holds a cell trained with a different configuration; remove it or use another --out");
    }
    if (fs::exists(dir / kDoneFile)) {
      ++done;
      continue;
    }
    if (partitioned != cell.config.n_per_class) {
      taskgen::partition_all(set, cell.config.n_per_class, partition_seed(set, cell.config.n_per_class));
      partitioned = cell.config.n_per_class;
    }
    const auto split = read_splits(split_path(ctx, cell.config.sampling));
    const auto weights = read_weights(weights_path(ctx, cell.config.sampling));
    fs::create_directories(dir);
    io::write_file_atomic(dir / kCellFile, text);
    train_cell(cell, set, split, weights, dir, ctx);
    io::write_file_atomic(dir / kDoneFile, "ok\n");
  }
  ctx.say() << "train: " << cells.size() << " cell(s), " << done << " already complete -> " << train_dir(ctx).string() << "\n";
}

}  // namespace metashift::cli
