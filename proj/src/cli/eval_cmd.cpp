#include <algorithm>

#include "commands.hpp"
#include "metashift/common/error.hpp"
#include "metashift/common/parallel.hpp"
#include "metashift/eval/finetune.hpp"
#include "metashift/nn/checkpoint.hpp"
#include "metashift/taskgen/archive.hpp"

namespace metashift::cli {

namespace {

const csv::Row kResultColumns{"algorithm", "architecture", "sampling", "N", "K", "task_id", "ensemble", "ft_epoch", "accuracy"};

// Fine-tunes every member of one cell on every task for one K.
std::vector<csv::Row> evaluate_cell(const CellInfo& cell, const taskgen::TaskSet& set, const std::vector<int>& tasks, int k,
                                    const Context& ctx) {
  const auto& c = cell.config;
  std::vector<eval::EvalData> data;
  for (int t : tasks) {
    const auto& task = set.task(t);
    data.push_back(eval::make_eval_data(task, set.config.kind, *task.partition, k, c.seed));
  }
  const eval::FinetuneSpec spec{c.algorithm, c.inner_lr, c.inner_steps, eval::kFinetuneEpochs};
  const std::size_t E = static_cast<std::size_t>(c.ensembles);
  std::vector<eval::FinetuneResult> results(tasks.size() * E);
  std::vector<nn::ParameterSet> shared;
  if (c.algorithm != meta::Algorithm::dnc)
    for (std::size_t e = 0; e < E; ++e) shared.push_back(nn::load_checkpoint(member_path(cell.dir, static_cast<int>(e))));
  parallel_for(results.size(), ctx.jobs, [&](std::size_t i) {
    const std::size_t t = i / E, e = i % E;
    if (c.algorithm == meta::Algorithm::dnc) {
      const auto phi = nn::load_checkpoint(task_member_path(cell.dir, tasks[t], static_cast<int>(e)));
      results[i] = eval::finetune_and_eval(phi, spec, data[t], static_cast<int>(e));
    } else {
      results[i] = eval::finetune_and_eval(shared[e], spec, data[t], static_cast<int>(e));
    }
  });

  const std::string alg(meta::to_string(c.algorithm)), arch(nn::to_string(c.architecture)), samp(meta::to_string(c.sampling));
  std::vector<csv::Row> rows;
  for (const auto& r : results)
    for (std::size_t ep = 0; ep < r.accuracy.size(); ++ep)
      rows.push_back({alg, arch, samp, std::to_string(c.n_per_class), std::to_string(k), std::to_string(r.task_id),
                      std::to_string(r.ensemble), std::to_string(ep), csv::num(r.accuracy[ep])});
  return rows;
}

void evaluate_all(const std::vector<CellInfo>& cells, taskgen::TaskSet& set, const std::vector<int>& tasks_of_archive,
                  const std::vector<int>& ks, const fs::path& cell_out, const fs::path& merged, const Context& ctx) {
  const int kmax = *std::max_element(ks.begin(), ks.end());
  require_partitionable(set, kmax, 1, "largest K");
  taskgen::partition_all(set, kmax, eval_partition_seed(set, kmax));
  fs::create_directories(cell_out);

  csv::Table all;
  all.comments = ctx.header("eval");
  all.header = kResultColumns;
  for (const auto& cell : cells) {
    std::vector<int> tasks = tasks_of_archive;
    if (tasks.empty()) tasks = read_splits(split_path(ctx, cell.config.sampling)).test;
    for (int k : ks) {
      const auto path = cell_out / (cell.name + "_K" + std::to_string(k) + ".csv");
      csv::Table t;
      if (fs::exists(path)) {
        t = csv::read(path);
      } else {
        t.comments = ctx.header("eval");
        t.header = kResultColumns;
        t.rows = evaluate_cell(cell, set, tasks, k, ctx);
        csv::write(path, t);
        ctx.say() << "eval: " << cell.name << " K=" << k << " (" << tasks.size() << " tasks)\n";
      }
      all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
    }
  }
  csv::write(merged, all);
  ctx.say() << "eval: " << all.rows.size() << " rows -> " << merged.string() << "\n";
}

}  // namespace

std::string canonical(const EvalArgs& a, const Context& ctx) {
  return "eval k=" + join(a.k) + " ood=" + std::string(a.ood.empty() ? "no" : "yes") + " seed=" + std::to_string(ctx.seed);
}

void cmd_eval(const EvalArgs& a, const Context& ctx) {
  if (a.k.empty()) throw ValidationError("--k needs at least one value");
  for (int k : a.k)
    if (k < 1) throw ValidationError("--k values must be >= 1, got " + std::to_string(k));
  auto ks = a.k;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  const auto cells = list_complete_cells(ctx);
  if (cells.empty()) throw MissingArtifactError("no completed training cells under " + train_dir(ctx).string() + "; run `metashift train` first");

  auto set = taskgen::load_archive(a.archive.empty() ? default_archive(ctx) : fs::path(a.archive));
  evaluate_all(cells, set, {}, ks, ctx.out / "eval", ctx.out / "results.csv", ctx);

  if (!a.ood.empty()) {
    auto ood = taskgen::load_archive(a.ood);
    if (ood.config.kind != taskgen::TaskSetKind::ood_snr) throw ValidationError(a.ood + " is not an OOD archive");
    std::vector<CellInfo> transferable;
    for (const auto& c : cells)
      if (c.config.algorithm != meta::Algorithm::dnc) transferable.push_back(c);
    std::vector<int> ids;
    for (const auto& t : ood.tasks) ids.push_back(t.id);
    evaluate_all(transferable, ood, ids, ks, ctx.out / "eval_ood", ctx.out / "results_ood.csv", ctx);
  }
}

}  // namespace metashift::cli
