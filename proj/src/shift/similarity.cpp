#include "metashift/shift/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "metashift/common/error.hpp"
#include "metashift/common/parallel.hpp"

namespace metashift::shift {

Matrix gap_features(const nn::ParameterSet& params, const nn::Batch& batch) {
  const auto fr = nn::forward(params, batch);
  const auto& g = fr.cache.gap_out;
  const int rows = batch.size;
  const int cols = rows == 0 ? 0 : static_cast<int>(g.size()) / rows;
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = g[static_cast<std::size_t>(i) * cols + j];
  return out;
}

void center_columns(Matrix& x) {
  if (x.rows() == 0) return;
  x.rowwise() -= x.colwise().mean();
}

Matrix extract_activations(const nn::ParameterSet& params, const nn::Batch& batch) {
  Matrix x = gap_features(params, batch);
  center_columns(x);
  return x;
}

double linear_cka(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows())
    throw ValidationError("linear_cka: row counts differ (" + std::to_string(x.rows()) + " vs " +
                          std::to_string(y.rows()) + ")");
  const double xx = (x.transpose() * x).norm();
  const double yy = (y.transpose() * y).norm();
  if (!(xx > 0.0) || !(yy > 0.0)) throw NumericalError("linear_cka: similarity undefined for a zero matrix");
  const double s = 100.0 * (y.transpose() * x).squaredNorm() / (xx * yy);
  if (!std::isfinite(s)) throw NumericalError("linear_cka: non-finite similarity");
  return std::clamp(s, 0.0, 100.0);
}

namespace {

Matrix stacked_centred(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  center_columns(out);
  return out;
}

}  // namespace

Matrix pairwise_similarity(const std::vector<std::vector<nn::ParameterSet>>& ensembles,
                           const std::vector<nn::Batch>& data, std::size_t jobs) {
  const std::size_t t = ensembles.size();
  if (data.size() != t) throw ValidationError("pairwise_similarity: one data batch per task required");
  for (std::size_t u = 0; u < t; ++u)
    if (ensembles[u].size() < 2)
      throw ValidationError("pairwise_similarity: task position " + std::to_string(u) +
                            " has fewer than 2 models; the diagonal needs model pairs");

  // features[u][e][w]: model e of task u applied to task w's data
  std::vector<std::pair<std::size_t, std::size_t>> models;
  for (std::size_t u = 0; u < t; ++u)
    for (std::size_t e = 0; e < ensembles[u].size(); ++e) models.emplace_back(u, e);
  std::vector<std::vector<Matrix>> flat(models.size());
  parallel_for(models.size(), jobs, [&](std::size_t m) {
    const auto& params = ensembles[models[m].first][models[m].second];
    flat[m].resize(t);
    for (std::size_t w = 0; w < t; ++w) flat[m][w] = gap_features(params, data[w]);
  });
  std::vector<std::vector<const std::vector<Matrix>*>> features(t);
  for (std::size_t m = 0; m < models.size(); ++m) features[models[m].first].push_back(&flat[m]);

  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t u = 0; u < t; ++u)
    for (std::size_t v = u; v < t; ++v) cells.emplace_back(u, v);
  std::vector<double> values(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t c) {
    const auto [u, v] = cells[c];
    const auto& fu = features[u];
    const auto& fv = features[v];
    double sum = 0.0;
    int pairs = 0;
    if (u == v) {
      std::vector<Matrix> centred;
      for (const auto* f : fu) {
        Matrix x = (*f)[u];
        center_columns(x);
        centred.push_back(std::move(x));
      }
      for (std::size_t a = 0; a < centred.size(); ++a)
        for (std::size_t b = a + 1; b < centred.size(); ++b, ++pairs) sum += linear_cka(centred[a], centred[b]);
    } else {
      std::vector<Matrix> xs, ys;
      for (const auto* f : fu) xs.push_back(stacked_centred((*f)[u], (*f)[v]));
      for (const auto* f : fv) ys.push_back(stacked_centred((*f)[u], (*f)[v]));
      for (const auto& x : xs)
        for (const auto& y : ys) {
          sum += linear_cka(x, y);
          ++pairs;
        }
    }
    values[c] = sum / pairs;
  });

  Matrix s(t, t);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto [u, v] = cells[c];
    s(u, v) = s(v, u) = values[c];
  }
  return s;
}

Matrix similarity_to_distance(const Matrix& s) {
  Matrix d = (100.0 - s.array()).matrix();
  d.diagonal().setZero();
  return d;
}

}  // namespace metashift::shift
