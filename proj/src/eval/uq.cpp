#include "metashift/eval/uq.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "metashift/common/error.hpp"
#include "metashift/common/rng.hpp"

namespace metashift::eval {

AggregateRecord aggregate(const AccuracyTable& acc) {
  if (acc.empty()) throw ValidationError("aggregate: no tasks");
  AggregateRecord r;
  const double t = static_cast<double>(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const auto& row = acc[i];
    if (row.size() < 2)
      throw ValidationError("aggregate: task row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                            " ensemble members; need at least 2 for a variance");
    double mean = 0.0;
    for (double a : row) mean += a;
    mean /= static_cast<double>(row.size());
    double var = 0.0;
    for (double a : row) var += (a - mean) * (a - mean);
    var /= static_cast<double>(row.size() - 1);
    r.task_mean.push_back(mean);
    r.task_variance.push_back(var);
    r.mean += mean / t;
    r.variance += var / static_cast<double>(row.size());
  }
  r.variance /= t * t;
  const double half = kZ95 * std::sqrt(r.variance);
  r.ci_low = r.mean - half;
  r.ci_high = r.mean + half;
  return r;
}

std::vector<QQPoint> qq_pairs(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const boost::math::normal_distribution<double> z;
  const double n = static_cast<double>(values.size());
  std::vector<QQPoint> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out.push_back({boost::math::quantile(z, (static_cast<double>(i) + 0.5) / n), values[i]});
  return out;
}

QQResult qq_residuals(const AccuracyTable& acc) {
  const auto agg = aggregate(acc);
  QQResult r;
  std::vector<double> residuals;
  for (std::size_t t = 0; t < acc.size(); ++t) {
    const double sd = std::sqrt(agg.task_variance[t]);
    if (!(sd > 0.0)) {
      ++r.skipped_tasks;
      continue;
    }
    for (double a : acc[t]) residuals.push_back((a - agg.task_mean[t]) / sd);
  }
  if (residuals.size() < 30)
    throw ValidationError("qq_residuals: " + std::to_string(residuals.size()) +
                          " residuals after skipping zero-variance tasks; need at least 30");
  r.points = qq_pairs(std::move(residuals));
  return r;
}

double ci_coverage_monte_carlo(int tasks, int ensembles, int replications, std::uint64_t seed) {
  if (tasks < 1 || ensembles < 2 || replications < 1) throw ValidationError("ci_coverage_monte_carlo: bad sizes");
  Rng rng(seed);
  std::vector<double> alpha(tasks), sigma(tasks);
  double truth = 0.0;
  for (int t = 0; t < tasks; ++t) {
    alpha[t] = rng.uniform(0.55, 0.95);
    sigma[t] = rng.uniform(0.01, 0.06);
    truth += alpha[t] / tasks;
  }
  int covered = 0;
  AccuracyTable acc(tasks, std::vector<double>(ensembles));
  for (int rep = 0; rep < replications; ++rep) {
    for (int t = 0; t < tasks; ++t)
      for (auto& a : acc[t]) a = alpha[t] + sigma[t] * rng.normal();
    const auto agg = aggregate(acc);
    covered += agg.ci_low <= truth && truth <= agg.ci_high;
  }
  return static_cast<double>(covered) / replications;
}

}  // namespace metashift::eval
