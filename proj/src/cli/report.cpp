#include <map>
#include <tuple>

#include "commands.hpp"
#include "metashift/common/error.hpp"
#include "metashift/common/io.hpp"
#include "metashift/eval/finetune.hpp"
#include "metashift/eval/uq.hpp"
#include "svg.hpp"

namespace metashift::cli {

namespace {

using GroupKey = std::tuple<std::string, std::string, std::string, int, int>;  // algorithm, arch, sampling, N, K
// task -> ensemble -> accuracy by FT epoch
using Curves = std::map<int, std::map<int, std::vector<double>>>;

csv::Row key_fields(const GroupKey& k) {
  return {std::get<0>(k), std::get<1>(k), std::get<2>(k), std::to_string(std::get<3>(k)), std::to_string(std::get<4>(k))};
}

std::string series_label(const GroupKey& k) { return std::get<0>(k) + " (" + std::get<2>(k) + ")"; }

std::map<GroupKey, Curves> load_results(const fs::path& path) {
  const auto t = csv::read(path);
  if (t.rows.empty()) throw ValidationError(path.string() + " has no result rows; run `metashift eval` first");
  const auto c_alg = t.column("algorithm"), c_arch = t.column("architecture"), c_samp = t.column("sampling"), c_n = t.column("N"),
             c_k = t.column("K"), c_task = t.column("task_id"), c_e = t.column("ensemble"), c_ep = t.column("ft_epoch"),
             c_acc = t.column("accuracy");
  std::map<GroupKey, Curves> groups;
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw FormatError(path.string() + ": row with " + std::to_string(r.size()) + " fields");
    auto& curve = groups[{r[c_alg], r[c_arch], r[c_samp], std::stoi(r[c_n]), std::stoi(r[c_k])}][std::stoi(r[c_task])]
                        [std::stoi(r[c_e])];
    const auto ep = static_cast<std::size_t>(std::stoi(r[c_ep]));
    if (curve.size() <= ep) curve.resize(ep + 1, -1.0);
    curve[ep] = std::stod(r[c_acc]);
  }
  return groups;
}

eval::AccuracyTable table_at(const Curves& curves, std::size_t epoch) {
  eval::AccuracyTable acc;
  for (const auto& [task, members] : curves) {
    acc.emplace_back();
    for (const auto& [e, curve] : members) acc.back().push_back(curve.at(epoch));
  }
  return acc;
}

std::vector<eval::FinetuneResult> finetune_results(const Curves& curves) {
  std::vector<eval::FinetuneResult> out;
  for (const auto& [task, members] : curves)
    for (const auto& [e, curve] : members) out.push_back({task, e, 0, curve});
  return out;
}

csv::Row aggregate_fields(const eval::AggregateRecord& a, const eval::AccuracyTable& acc) {
  return {std::to_string(acc.size()), std::to_string(acc.front().size()), csv::num(a.mean), csv::num(a.variance),
          csv::num(a.ci_low), csv::num(a.ci_high)};
}

void write_svg(const fs::path& path, const LinePlot& plot, const Context& ctx) {
  io::write_file_atomic(path, render_svg(plot, "config_hash=" + ctx.config_hash + " command=report"));
}

void report_one(const fs::path& results, const fs::path& dir, const Context& ctx) {
  const auto groups = load_results(results);
  fs::create_directories(dir);
  const auto comments = ctx.header("report");
  const csv::Row keys{"algorithm", "architecture", "sampling", "N", "K"};
  const csv::Row stats{"tasks", "ensembles", "mean", "variance", "ci_low", "ci_high"};
  auto cat = [](csv::Row a, const csv::Row& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  csv::Table agg{comments, cat(cat(keys, {"ft_epoch"}), stats), {}};
  csv::Table best{comments, cat(cat(keys, stats), {"speed"}), {}};
  csv::Table qq{comments, cat(keys, {"theoretical", "sample"}), {}};

  // (arch, N, K) -> series for accuracy-vs-epoch; (arch, N) -> series over K
  std::map<std::tuple<std::string, int, int>, std::vector<Series>> by_epoch;
  std::map<std::pair<std::string, int>, std::map<std::string, Series>> by_k_acc, by_k_speed;

  for (const auto& [key, curves] : groups) {
    const auto epochs = curves.begin()->second.begin()->second.size();
    for (const auto& [task, members] : curves)
      for (const auto& [e, curve] : members)
        if (curve.size() != epochs || std::count(curve.begin(), curve.end(), -1.0) > 0)
          throw FormatError(results.string() + ": incomplete fine-tuning curve for task " + std::to_string(task) + ", ensemble " +
                            std::to_string(e));
    Series s{series_label(key), {}, {}, {}, {}};
    for (std::size_t ep = 0; ep < epochs; ++ep) {
      const auto acc = table_at(curves, ep);
      const auto a = eval::aggregate(acc);
      agg.rows.push_back(cat(cat(key_fields(key), {std::to_string(ep)}), aggregate_fields(a, acc)));
      s.x.push_back(static_cast<double>(ep));
      s.y.push_back(a.mean);
      s.lo.push_back(a.ci_low);
      s.hi.push_back(a.ci_high);
    }
    by_epoch[{std::get<1>(key), std::get<3>(key), std::get<4>(key)}].push_back(std::move(s));

    eval::AccuracyTable best_acc;
    for (const auto& [task, members] : curves) {
      best_acc.emplace_back();
      for (const auto& [e, curve] : members) best_acc.back().push_back(eval::best_accuracy({task, e, 0, curve}).accuracy);
    }
    const auto a = eval::aggregate(best_acc);
    const double speed = eval::finetune_speed(finetune_results(curves));
    best.rows.push_back(cat(cat(key_fields(key), aggregate_fields(a, best_acc)), {csv::num(speed)}));

    const double k = std::get<4>(key);
    auto& acc_series = by_k_acc[{std::get<1>(key), std::get<3>(key)}][series_label(key)];
    acc_series.label = series_label(key);
    acc_series.x.push_back(k);
    acc_series.y.push_back(a.mean);
    acc_series.lo.push_back(a.ci_low);
    acc_series.hi.push_back(a.ci_high);
    auto& speed_series = by_k_speed[{std::get<1>(key), std::get<3>(key)}][series_label(key)];
    speed_series.label = series_label(key);
    speed_series.x.push_back(k);
    speed_series.y.push_back(speed);

    try {
      const auto q = eval::qq_residuals(best_acc);
      if (q.skipped_tasks > 0)
        qq.comments.push_back(" " + series_label(key) + " N=" + std::to_string(std::get<3>(key)) + " K=" + std::to_string(std::get<4>(key)) +
                              ": skipped " + std::to_string(q.skipped_tasks) + " zero-variance task(s)");
      for (const auto& p : q.points) qq.rows.push_back(cat(key_fields(key), {csv::num(p.theoretical), csv::num(p.sample)}));
    } catch (const ValidationError& e) {
      qq.comments.push_back(" " + series_label(key) + " N=" + std::to_string(std::get<3>(key)) + " K=" +
                            std::to_string(std::get<4>(key)) + ": " + e.what());
    }
  }
  csv::write(dir / "aggregates.csv", agg);
  csv::write(dir / "best.csv", best);
  csv::write(dir / "qq.csv", qq);

  int plots = 0;
  for (const auto& [k, series] : by_epoch) {
    const auto& [arch, n, kshot] = k;
    const std::string tag = arch + "_N" + std::to_string(n) + "_K" + std::to_string(kshot);
    write_svg(dir / ("accuracy_vs_epoch_" + tag + ".svg"),
              {"Accuracy vs fine-tuning epoch (" + arch + ", N=" + std::to_string(n) + ", K=" + std::to_string(kshot) + ")",
               "fine-tuning epoch", "accuracy (mean, 95% CI)", false, series},
              ctx);
    ++plots;
  }
  for (const auto& [k, series] : by_k_acc) {
    const std::string tag = k.first + "_N" + std::to_string(k.second);
    std::vector<Series> acc, speed;
    for (const auto& [label, s] : series) acc.push_back(s);
    for (const auto& [label, s] : by_k_speed.at(k)) speed.push_back(s);
    write_svg(dir / ("accuracy_vs_k_" + tag + ".svg"),
              {"Best accuracy vs K (" + k.first + ", N=" + std::to_string(k.second) + ")", "K (pairs per class)",
               "best accuracy (mean, 95% CI)", true, acc},
              ctx);
    write_svg(dir / ("speed_vs_k_" + tag + ".svg"),
              {"Fine-tuning speed vs K (" + k.first + ", N=" + std::to_string(k.second) + ")", "K (pairs per class)",
               "mean epoch of best accuracy", true, speed},
              ctx);
    plots += 2;
  }
  ctx.say() << "report: " << groups.size() << " group(s), " << plots << " plot(s) -> " << dir.string() << "\n";
}

}  // namespace

std::string canonical(const ReportArgs&, const Context&) { return "report"; }

void cmd_report(const ReportArgs& a, const Context& ctx) {
  const fs::path results = a.results.empty() ? ctx.out / "results.csv" : fs::path(a.results);
  if (!fs::exists(results)) throw MissingArtifactError(results.string() + " not found; run `metashift eval` first");
  report_one(results, ctx.out / "report", ctx);
  const auto ood = ctx.out / "results_ood.csv";
  if (a.results.empty() && fs::exists(ood)) report_one(ood, ctx.out / "report" / "ood", ctx);
}

}  // namespace metashift::cli
