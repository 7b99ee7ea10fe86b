#pragma once

#include <string>
#include <vector>

#include "metashift/common/rng.hpp"
#include "metashift/shift/matrix.hpp"

namespace metashift::shift {

/// One agglomeration step. Leaves are 0..n-1; merge i creates node n+i.
struct Merge {
  int left = 0;  // lower node id
  int right = 0;
  double height = 0.0;
  int size = 0;  // leaves under the new node

  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  int leaves = 0;
  std::vector<Merge> merges;

  int root() const { return leaves == 1 ? 0 : leaves + static_cast<int>(merges.size()) - 1; }
  bool is_leaf(int node) const { return node < leaves; }
  const Merge& merge_of(int node) const { return merges.at(node - leaves); }
  /// Leaves under `node`, left subtree first.
  std::vector<int> leaves_under(int node) const;
  /// Bifurcations between the root and each leaf.
  std::vector<int> depths() const;

  bool operator==(const Dendrogram&) const = default;
};

/// Ward agglomeration through the Lance-Williams recurrence on squared
/// dissimilarities; merge heights are reported as square roots. Ties go to
/// the lowest pair of cluster ids. Throws ValidationError unless `d` is
/// square, finite, non-negative, symmetric and zero on the diagonal.
Dendrogram ward_cluster(const Matrix& d);

/// Exchanges the two children of an internal node.
void swap_children(Dendrogram& dend, int node);

enum class TestBranch { left, right };

struct SplitAssignment {
  std::vector<int> test;
  std::vector<int> pool;
  std::vector<int> train_a;  // pool's first bifurcation, left side
  std::vector<int> train_b;
};

/// One root child subtree becomes the test split, the other the pool.
/// `ids[leaf]` maps dendrogram leaves to task ids.
SplitAssignment assign_splits(const Dendrogram& dend, const std::vector<int>& ids,
                              TestBranch branch = TestBranch::left);

/// Task weights gamma aligned with `ids`.
struct SamplingWeights {
  std::vector<int> ids;
  std::vector<double> gamma;
};

SamplingWeights uniform_weights(const std::vector<int>& ids);
/// gamma_t proportional to 2^-depth(t), normalized to sum 1.
SamplingWeights diversity_weights(const Dendrogram& dend, const std::vector<int>& ids);

struct ValidationSplit {
  std::vector<int> train;
  std::vector<int> validation;
};

/// Draws ceil(fraction * |pool|) validation tasks one at a time by the
/// current diversity weights, re-clustering the remaining pool after each
/// draw. `d` must cover every pool id.
ValidationSplit select_validation_diverse(const std::vector<int>& pool, double fraction,
                                          const LabeledMatrix& d, Rng& rng);

/// Uniformly random validation subset of the same size.
ValidationSplit select_validation_uniform(const std::vector<int>& pool, double fraction, Rng& rng);

/// Sequential weighted draws without replacement; the remaining mass is
/// renormalized after each draw. Throws ValidationError if batch > |ids|.
std::vector<int> sample_task_batch(const SamplingWeights& w, int batch, Rng& rng);

/// sum_t gamma_t * mean_{v in test} s_tv.
double mean_similarity_under_weights(const LabeledMatrix& s, const SamplingWeights& w,
                                     const std::vector<int>& test);

/// One line per merge: "left right height size".
std::string dendrogram_text(const Dendrogram& dend, const std::vector<int>& ids);
Dendrogram parse_dendrogram(const std::string& text, std::vector<int>* ids = nullptr);

}  // namespace metashift::shift
