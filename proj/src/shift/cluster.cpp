#include "metashift/shift/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "metashift/common/error.hpp"

namespace metashift::shift {

std::vector<int> Dendrogram::leaves_under(int node) const {
  std::vector<int> out;
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    if (is_leaf(n)) {
      out.push_back(n);
    } else {
      const auto& m = merge_of(n);
      stack.push_back(m.right);
      stack.push_back(m.left);
    }
  }
  return out;
}

std::vector<int> Dendrogram::depths() const {
  std::vector<int> depth(leaves, 0);
  std::vector<std::pair<int, int>> stack{{root(), 0}};
  while (!stack.empty()) {
    const auto [n, d] = stack.back();
    stack.pop_back();
    if (is_leaf(n)) {
      depth[n] = d;
    } else {
      const auto& m = merge_of(n);
      stack.emplace_back(m.left, d + 1);
      stack.emplace_back(m.right, d + 1);
    }
  }
  return depth;
}

namespace {

void validate_distances(const Matrix& d) {
  if (d.rows() != d.cols()) throw ValidationError("ward_cluster: distance matrix must be square");
  if (d.rows() < 1) throw ValidationError("ward_cluster: empty distance matrix");
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0) throw ValidationError("ward_cluster: diagonal entry " + std::to_string(i) + " is not 0");
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (!std::isfinite(d(i, j)) || d(i, j) < 0.0)
        throw ValidationError("ward_cluster: distances must be finite and non-negative");
      const double tol = 1e-9 * std::max(1.0, std::abs(d(i, j)));
      if (std::abs(d(i, j) - d(j, i)) > tol)
        throw ValidationError("ward_cluster: distance matrix is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
    }
  }
}

}  // namespace

Dendrogram ward_cluster(const Matrix& d) {
  validate_distances(d);
  const int n = static_cast<int>(d.rows());
  Dendrogram dend;
  dend.leaves = n;
  if (n == 1) return dend;

  const int nodes = 2 * n - 1;
  // squared dissimilarities between live clusters, indexed by node id
  std::vector<double> d2(static_cast<std::size_t>(nodes) * nodes, 0.0);
  auto at = [&](int a, int b) -> double& { return d2[static_cast<std::size_t>(a) * nodes + b]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) at(i, j) = 0.5 * (d(i, j) * d(i, j) + d(j, i) * d(j, i));
  std::vector<int> size(nodes, 1);
  std::vector<int> live(n);
  std::iota(live.begin(), live.end(), 0);

  for (int step = 0; step < n - 1; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < live.size(); ++i)
      for (std::size_t j = i + 1; j < live.size(); ++j)
        if (at(live[i], live[j]) < best) best = at(live[i], live[j]), bi = i, bj = j;
    const int a = live[bi], b = live[bj];  // a < b: live stays sorted
    const int node = n + step;
    size[node] = size[a] + size[b];
    dend.merges.push_back({a, b, std::sqrt(std::max(0.0, best)), size[node]});
    live.erase(live.begin() + static_cast<long>(bj));
    live.erase(live.begin() + static_cast<long>(bi));
    for (int k : live) {
      const double nk = size[k];
      const double v = ((size[a] + nk) * at(a, k) + (size[b] + nk) * at(b, k) - nk * best) / (size[node] + nk);
      at(node, k) = at(k, node) = v;
    }
    live.push_back(node);
  }
  return dend;
}

void swap_children(Dendrogram& dend, int node) {
  if (dend.is_leaf(node)) throw ValidationError("swap_children: node " + std::to_string(node) + " is a leaf");
  auto& m = dend.merges.at(node - dend.leaves);
  std::swap(m.left, m.right);
}

SplitAssignment assign_splits(const Dendrogram& dend, const std::vector<int>& ids, TestBranch branch) {
  if (dend.leaves < 2) throw ValidationError("assign_splits: a single-leaf tree cannot be split");
  if (ids.size() != static_cast<std::size_t>(dend.leaves))
    throw ValidationError("assign_splits: id list does not match the dendrogram leaves");
  const auto& root = dend.merge_of(dend.root());
  const int test_node = branch == TestBranch::left ? root.left : root.right;
  const int pool_node = branch == TestBranch::left ? root.right : root.left;
  auto to_ids = [&](const std::vector<int>& leaves) {
    std::vector<int> out;
    for (int l : leaves) out.push_back(ids[l]);
    return out;
  };
  SplitAssignment s;
  s.test = to_ids(dend.leaves_under(test_node));
  s.pool = to_ids(dend.leaves_under(pool_node));
  if (!dend.is_leaf(pool_node)) {
    const auto& pm = dend.merge_of(pool_node);
    s.train_a = to_ids(dend.leaves_under(pm.left));
    s.train_b = to_ids(dend.leaves_under(pm.right));
  }
  return s;
}

SamplingWeights uniform_weights(const std::vector<int>& ids) {
  if (ids.empty()) throw ValidationError("uniform_weights: no tasks");
  return {ids, std::vector<double>(ids.size(), 1.0 / static_cast<double>(ids.size()))};
}

SamplingWeights diversity_weights(const Dendrogram& dend, const std::vector<int>& ids) {
  if (ids.size() != static_cast<std::size_t>(dend.leaves))
    throw ValidationError("diversity_weights: id list does not match the dendrogram leaves");
  const auto depth = dend.depths();
  SamplingWeights w{ids, {}};
  double total = 0.0;
  for (int k : depth) {
    w.gamma.push_back(std::ldexp(1.0, -k));
    total += w.gamma.back();
  }
  for (auto& g : w.gamma) g /= total;
  return w;
}

namespace {

std::size_t validation_count(std::size_t pool, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("validation fraction must lie in (0, 1)");
  // the small offset keeps products such as 0.2 * 5 from rounding up
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pool) - 1e-9));
  if (pool < 2 || n < 1 || n >= pool)
    throw ValidationError("pool of " + std::to_string(pool) + " tasks is too small for validation fraction " +
                          std::to_string(fraction));
  return n;
}

std::size_t weighted_pick(std::span<const double> w, Rng& rng) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return i;
  }
  return w.size() - 1;
}

}  // namespace

ValidationSplit select_validation_diverse(const std::vector<int>& pool, double fraction, const LabeledMatrix& d,
                                          Rng& rng) {
  const std::size_t n_val = validation_count(pool.size(), fraction);
  ValidationSplit out;
  std::vector<int> remaining = pool;
  while (out.validation.size() < n_val) {
    const auto w = diversity_weights(ward_cluster(d.sub(remaining).values), remaining);
    const std::size_t pick = weighted_pick(w.gamma, rng);
    out.validation.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<long>(pick));
  }
  out.train = std::move(remaining);
  return out;
}

ValidationSplit select_validation_uniform(const std::vector<int>& pool, double fraction, Rng& rng) {
  const std::size_t n_val = validation_count(pool.size(), fraction);
  std::vector<int> order = pool;
  rng.shuffle(std::span<int>(order));
  ValidationSplit out;
  out.validation.assign(order.begin(), order.begin() + static_cast<long>(n_val));
  for (int id : pool)
    if (std::find(out.validation.begin(), out.validation.end(), id) == out.validation.end()) out.train.push_back(id);
  return out;
}

std::vector<int> sample_task_batch(const SamplingWeights& w, int batch, Rng& rng) {
  if (w.ids.size() != w.gamma.size()) throw ValidationError("sample_task_batch: ids and weights differ in length");
  if (batch < 0 || static_cast<std::size_t>(batch) > w.ids.size())
    throw ValidationError("sample_task_batch: batch of " + std::to_string(batch) + " exceeds " +
                          std::to_string(w.ids.size()) + " training tasks");
  for (double g : w.gamma)
    if (!(g > 0.0) || !std::isfinite(g)) throw ValidationError("sample_task_batch: weights must be positive");
  std::vector<int> ids = w.ids;
  std::vector<double> gamma = w.gamma;
  std::vector<int> out;
  for (int k = 0; k < batch; ++k) {
    const std::size_t pick = weighted_pick(gamma, rng);
    out.push_back(ids[pick]);
    ids.erase(ids.begin() + static_cast<long>(pick));
    gamma.erase(gamma.begin() + static_cast<long>(pick));
  }
  return out;
}

double mean_similarity_under_weights(const LabeledMatrix& s, const SamplingWeights& w, const std::vector<int>& test) {
  if (test.empty()) throw ValidationError("mean_similarity_under_weights: empty test split");
  double total = 0.0;
  for (std::size_t i = 0; i < w.ids.size(); ++i) {
    double mean = 0.0;
    for (int v : test) mean += s.at(w.ids[i], v);
    total += w.gamma[i] * mean / static_cast<double>(test.size());
  }
  return total;
}

std::string dendrogram_text(const Dendrogram& dend, const std::vector<int>& ids) {
  if (ids.size() != static_cast<std::size_t>(dend.leaves))
    throw ValidationError("dendrogram_text: id list does not match the dendrogram leaves");
  std::ostringstream out;
  out << "leaves";
  for (int id : ids) out << ' ' << id;
  out << "\n# left right height size\n";
  char buf[64];
  for (const auto& m : dend.merges) {
    std::snprintf(buf, sizeof buf, "%.17g", m.height);
    out << m.left << ' ' << m.right << ' ' << buf << ' ' << m.size << '\n';
  }
  return out.str();
}

Dendrogram parse_dendrogram(const std::string& text, std::vector<int>* ids) {
  std::istringstream in(text);
  std::string line;
  Dendrogram dend;
  std::vector<int> leaf_ids;
  bool have_leaves = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!have_leaves) {
      std::string tag;
      ls >> tag;
      if (tag != "leaves") throw FormatError("dendrogram: expected a 'leaves' line first");
      for (int id; ls >> id;) leaf_ids.push_back(id);
      dend.leaves = static_cast<int>(leaf_ids.size());
      have_leaves = true;
      continue;
    }
    Merge m;
    if (!(ls >> m.left >> m.right >> m.height >> m.size)) throw FormatError("dendrogram: malformed merge line '" + line + "'");
    dend.merges.push_back(m);
  }
  if (!have_leaves) throw FormatError("dendrogram: missing 'leaves' line");
  if (dend.leaves > 0 && dend.merges.size() != static_cast<std::size_t>(dend.leaves - 1))
    throw FormatError("dendrogram: " + std::to_string(dend.merges.size()) + " merges for " +
                      std::to_string(dend.leaves) + " leaves");
  if (ids) *ids = std::move(leaf_ids);
  return dend;
}

}  // namespace metashift::shift
