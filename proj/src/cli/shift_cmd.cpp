#include <algorithm>
#include <set>

#include "commands.hpp"
#include "metashift/common/error.hpp"
#include "metashift/common/io.hpp"
#include "metashift/common/parallel.hpp"
#include "metashift/common/rng.hpp"
#include "metashift/meta/trainers.hpp"
#include "metashift/nn/checkpoint.hpp"
#include "metashift/shift/accuracy.hpp"
#include "metashift/shift/similarity.hpp"
#include "metashift/taskgen/archive.hpp"

namespace metashift::cli {

namespace {

// Holdout pairs per class needed beyond the 3N training lists.
constexpr int kMinHoldout = 5;

meta::MetaConfig model_config(const ShiftArgs& a, const Context& ctx) {
  auto c = meta::default_config(meta::Algorithm::dnc);
  c.architecture = nn::parse_arch_size(a.architecture);
  c.n_per_class = a.n;
  c.ensembles = a.ensembles;
  c.seed = ctx.seed;
  if (a.max_epochs > 0) c.max_epochs = a.max_epochs;
  if (a.patience > 0) c.patience = a.patience;
  meta::validate(c);
  if (c.ensembles < 2) throw ValidationError("--ensembles must be >= 2 for ensemble-averaged similarity");
  return c;
}

fs::path model_path(const fs::path& dir, int task, int e) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "task_%04d_e%02d.msnn", task, e);
  return dir / buf;
}

void write_table(const fs::path& path, csv::Row header, std::vector<csv::Row> rows, const Context& ctx) {
  csv::Table t;
  t.comments = ctx.header("shift");
  t.header = std::move(header);
  t.rows = std::move(rows);
  csv::write(path, t);
}

}  // namespace

std::string canonical(const ShiftArgs& a, const Context& ctx) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "shift arch=%s n=%d ensembles=%d val_fraction=%.17g branch=%s max_epochs=%d patience=%d seed=%llu",
                a.architecture.c_str(), a.n, a.ensembles, a.val_fraction, a.test_branch.c_str(), a.max_epochs, a.patience,
                static_cast<unsigned long long>(ctx.seed));
  return buf;
}

void cmd_shift(const ShiftArgs& a, const Context& ctx) {
  const auto config = model_config(a, ctx);
  if (a.test_branch != "left" && a.test_branch != "right")
    throw ValidationError("--test-branch must be left or right, got '" + a.test_branch + "'");
  if (!(a.val_fraction > 0.0 && a.val_fraction < 1.0)) throw ValidationError("--val-fraction must lie in (0, 1)");

  auto set = taskgen::load_archive(a.archive.empty() ? default_archive(ctx) : fs::path(a.archive));
  if (set.config.kind != taskgen::TaskSetKind::factorial) throw ValidationError("shift needs a factorial archive, not an OOD one");
  require_partitionable(set, a.n, kMinHoldout, "--n");
  taskgen::partition_all(set, a.n, partition_seed(set, a.n));

  const int T = static_cast<int>(set.tasks.size());
  const int E = config.ensembles;
  char tag[96];
  std::snprintf(tag, sizeof tag, "models_%s_N%d_s%llu_%.8s", a.architecture.c_str(), a.n,
                static_cast<unsigned long long>(ctx.seed), stable_hash(meta::config_text(config)).c_str());
  const fs::path models = shift_dir(ctx) / tag;

  std::vector<std::pair<int, int>> missing;  // (task index, member)
  for (int t = 0; t < T; ++t)
    for (int e = 0; e < E; ++e)
      if (!fs::exists(model_path(models, set.tasks[t].id, e))) missing.emplace_back(t, e);
  if (!missing.empty() && !a.train_models) {
    std::set<int> absent;
    for (auto [t, e] : missing) absent.insert(set.tasks[t].id);
    throw MissingArtifactError("task-specific checkpoints missing under " + models.string() + " for tasks " +
                               join(std::vector<int>(absent.begin(), absent.end()), ", ") +
                               "; rerun with --train-models to train them");
  }
  if (!missing.empty()) {
    fs::create_directories(models);
    ctx.say() << "shift: training " << missing.size() << " task-specific models (" << T << " tasks x " << E
              << " members)\n";
    meta::TrainOptions opts;
    opts.record_time = ctx.timing;
    parallel_for(missing.size(), ctx.jobs, [&](std::size_t i) {
      const auto [t, e] = missing[i];
      const auto r = meta::dnc_train(config, set.tasks[t], e, opts);
      nn::save_checkpoint(r.params, model_path(models, set.tasks[t].id, e));
    });
  }

  std::vector<int> ids;
  std::vector<std::vector<nn::ParameterSet>> ensembles(T);
  std::vector<data::LabeledBatch> holdout(T);
  std::vector<nn::Batch> features(T);
  for (int t = 0; t < T; ++t) {
    const auto& task = set.tasks[t];
    ids.push_back(task.id);
    for (int e = 0; e < E; ++e) ensembles[t].push_back(nn::load_checkpoint(model_path(models, task.id, e)));
    holdout[t] = data::gather(task, task.partition->holdout);
    features[t] = holdout[t].x;
  }

  const shift::LabeledMatrix s{ids, shift::pairwise_similarity(ensembles, features, ctx.jobs)};
  const shift::LabeledMatrix d{ids, shift::similarity_to_distance(s.values)};
  const shift::LabeledMatrix acc{ids, shift::cross_accuracy(ensembles, holdout, ctx.jobs)};
  const auto pu = shift::compute_pu(acc.values);

  const fs::path dir = shift_dir(ctx);
  fs::create_directories(dir);
  const auto comments = ctx.header("shift");
  shift::write_matrix_csv(dir / "similarity.csv", s, comments);
  shift::write_matrix_csv(dir / "distance.csv", d, comments);
  shift::write_matrix_csv(dir / "accuracy.csv", acc, comments);

  std::vector<csv::Row> rows;
  for (int t = 0; t < T; ++t) rows.push_back({std::to_string(ids[t]), csv::num(pu[t])});
  write_table(dir / "pu.csv", {"task_id", "p_u"}, rows, ctx);

  const int pairs = T * (T - 1) / 2;
  rows.clear();
  const auto bins = shift::similarity_accuracy_bins(s.values, shift::symmetrize_accuracy(acc.values), std::min(20, pairs));
  for (std::size_t b = 0; b < bins.size(); ++b)
    rows.push_back({std::to_string(b), csv::num(bins[b].similarity), csv::num(bins[b].accuracy),
                    csv::num(bins[b].standardized), std::to_string(bins[b].count)});
  write_table(dir / "relation_bins.csv", {"bin", "similarity", "accuracy", "standardized", "count"}, rows, ctx);

  const auto dend = shift::ward_cluster(d.values);
  io::write_file_atomic(dir / "dendrogram.txt", "#" + comments[0] + "\n#" + comments[1] + "\n" + shift::dendrogram_text(dend, ids));
  const auto split = shift::assign_splits(dend, ids, a.test_branch == "left" ? shift::TestBranch::left : shift::TestBranch::right);
  if (split.pool.size() < 2) throw ValidationError("the training pool has fewer than 2 tasks; try the other --test-branch");

  std::vector<csv::Row> summary;
  for (auto sampling : {meta::Sampling::uniform, meta::Sampling::diverse}) {
    Rng rng(derive_seed(ctx.seed, {41, static_cast<std::uint64_t>(sampling)}));
    const auto v = sampling == meta::Sampling::uniform ? shift::select_validation_uniform(split.pool, a.val_fraction, rng)
                                                       : shift::select_validation_diverse(split.pool, a.val_fraction, d, rng);
    auto train = v.train;
    std::sort(train.begin(), train.end());
    const auto w = sampling == meta::Sampling::uniform
                       ? shift::uniform_weights(train)
                       : shift::diversity_weights(shift::ward_cluster(d.sub(train).values), train);

    auto in = [](const std::vector<int>& v, int id) { return std::find(v.begin(), v.end(), id) != v.end(); };
    rows.clear();
    for (int id : ids) {
      const char* role = in(split.test, id) ? "test" : in(v.validation, id) ? "validation" : "train";
      const char* branch = in(split.test, id) ? "test" : in(split.train_a, id) ? "train_a" : "train_b";
      rows.push_back({std::to_string(id), role, branch});
    }
    write_table(split_path(ctx, sampling), {"task_id", "split", "branch"}, rows, ctx);
    rows.clear();
    for (std::size_t i = 0; i < w.ids.size(); ++i) rows.push_back({std::to_string(w.ids[i]), csv::num(w.gamma[i])});
    write_table(weights_path(ctx, sampling), {"task_id", "gamma"}, rows, ctx);
    summary.push_back({std::string(meta::to_string(sampling)), csv::num(shift::mean_similarity_under_weights(s, w, split.test))});
  }
  write_table(dir / "sampling_similarity.csv", {"sampling", "mean_similarity_to_test"}, summary, ctx);

  double pu_mean = 0.0;
  for (double p : pu) pu_mean += p / T;
  ctx.say() << "shift: " << T << " tasks, test split " << split.test.size() << ", pool " << split.pool.size()
            << ", mean p_u " << pu_mean << " -> " << dir.string() << "\n";
}

}  // namespace metashift::cli
