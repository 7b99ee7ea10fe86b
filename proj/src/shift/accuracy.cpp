#include "metashift/shift/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metashift/common/error.hpp"
#include "metashift/common/parallel.hpp"

namespace metashift::shift {

Matrix cross_accuracy(const std::vector<std::vector<nn::ParameterSet>>& ensembles,
                      const std::vector<data::LabeledBatch>& data, std::size_t jobs) {
  const std::size_t t = ensembles.size();
  if (data.size() != t) throw ValidationError("cross_accuracy: one data batch per task required");
  for (std::size_t u = 0; u < t; ++u)
    if (ensembles[u].empty()) throw ValidationError("cross_accuracy: task position " + std::to_string(u) + " has no models");
  Matrix a(t, t);
  parallel_for(t * t, jobs, [&](std::size_t c) {
    const std::size_t u = c / t, v = c % t;
    double sum = 0.0;
    for (const auto& params : ensembles[u]) sum += data::accuracy(params, data[v]);
    a(u, v) = sum / static_cast<double>(ensembles[u].size());
  });
  return a;
}

std::vector<double> compute_pu(const Matrix& a) {
  if (a.rows() != a.cols()) throw ValidationError("compute_pu: accuracy matrix must be square");
  const auto t = a.rows();
  if (t < 2) throw ValidationError("compute_pu: need at least 2 tasks");
  std::vector<double> p(t);
  for (Eigen::Index u = 0; u < t; ++u) {
    int wins = 0;
    for (Eigen::Index v = 0; v < t; ++v)
      if (v != u && a(u, u) > a(v, u)) ++wins;
    p[u] = static_cast<double>(wins) / static_cast<double>(t - 1);
  }
  return p;
}

Matrix symmetrize_accuracy(const Matrix& a) {
  if (a.rows() != a.cols()) throw ValidationError("symmetrize_accuracy: matrix must be square");
  return (a + a.transpose()) / 2.0;
}

std::vector<RelationBin> similarity_accuracy_bins(const Matrix& s, const Matrix& a_sym, int n_bins) {
  if (s.rows() != a_sym.rows() || s.cols() != a_sym.cols() || s.rows() != s.cols())
    throw ValidationError("similarity_accuracy_bins: matrices must be square and the same size");
  std::vector<std::pair<double, double>> pairs;
  for (Eigen::Index u = 0; u < s.rows(); ++u)
    for (Eigen::Index v = u + 1; v < s.cols(); ++v) pairs.emplace_back(s(u, v), a_sym(u, v));
  if (n_bins < 1 || pairs.size() < static_cast<std::size_t>(n_bins))
    throw ValidationError("similarity_accuracy_bins: " + std::to_string(pairs.size()) +
                          " task pairs cannot fill " + std::to_string(n_bins) + " bins");
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

  std::vector<RelationBin> bins(n_bins);
  const std::size_t n = pairs.size();
  for (int b = 0; b < n_bins; ++b) {
    const std::size_t lo = n * b / n_bins, hi = n * (b + 1) / n_bins;
    auto& bin = bins[b];
    for (std::size_t i = lo; i < hi; ++i) {
      bin.similarity += pairs[i].first;
      bin.accuracy += pairs[i].second;
    }
    bin.count = static_cast<int>(hi - lo);
    bin.similarity /= bin.count;
    bin.accuracy /= bin.count;
  }
  double mean = 0.0, var = 0.0;
  for (const auto& b : bins) mean += b.accuracy;
  mean /= n_bins;
  for (const auto& b : bins) var += (b.accuracy - mean) * (b.accuracy - mean);
  const double sd = n_bins > 1 ? std::sqrt(var / (n_bins - 1)) : 0.0;
  for (auto& b : bins) b.standardized = sd > 0.0 ? (b.accuracy - mean) / sd : 0.0;
  return bins;
}

}  // namespace metashift::shift
