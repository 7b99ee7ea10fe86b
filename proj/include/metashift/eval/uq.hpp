#pragma once

#include <cstdint>
#include <vector>

namespace metashift::eval {

/// acc[t][e]: accuracy of ensemble member e on task t.
using AccuracyTable = std::vector<std::vector<double>>;

struct AggregateRecord {
  std::vector<double> task_mean;      // Acc_t
  std::vector<double> task_variance;  // unbiased, over ensembles
  double mean = 0.0;                  // alpha-bar, mean of Acc_t
  double variance = 0.0;              // T^-2 sum_t sigma_t^2 / E_t
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline constexpr double kZ95 = 1.96;

/// Normal model for the task-averaged accuracy. Throws ValidationError when
/// there are no tasks or a task has fewer than 2 ensemble members.
AggregateRecord aggregate(const AccuracyTable& acc);

struct QQPoint {
  double theoretical = 0.0;
  double sample = 0.0;
};

/// Sorted sample against standard normal quantiles at (i + 0.5) / n.
std::vector<QQPoint> qq_pairs(std::vector<double> values);

struct QQResult {
  std::vector<QQPoint> points;
  int skipped_tasks = 0;  // tasks with zero ensemble variance
};

/// Residuals Acc_te - Acc_t standardized by each task's ensemble standard
/// deviation. Needs at least 30 residuals after skipping.
QQResult qq_residuals(const AccuracyTable& acc);

/// Fraction of replications whose 95% interval contains the true mean when
/// accuracies are drawn from the normal model with per-task means and
/// standard deviations drawn once from the given ranges.
double ci_coverage_monte_carlo(int tasks, int ensembles, int replications, std::uint64_t seed);

}  // namespace metashift::eval
