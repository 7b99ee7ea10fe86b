#pragma once

#include <vector>

#include "metashift/data/labeled_batch.hpp"
#include "metashift/shift/matrix.hpp"

namespace metashift::shift {

/// a_uv: accuracy of task u's models on task v's data, averaged over u's ensemble.
Matrix cross_accuracy(const std::vector<std::vector<nn::ParameterSet>>& ensembles,
                      const std::vector<data::LabeledBatch>& data, std::size_t jobs = 1);

/// p_u = (T-1)^-1 * #{v != u : a_uu > a_vu}. Throws ValidationError for T < 2
/// or a non-square matrix.
std::vector<double> compute_pu(const Matrix& a);

/// (A + A') / 2.
Matrix symmetrize_accuracy(const Matrix& a);

struct RelationBin {
  double similarity = 0.0;    // mean s_uv in the bin
  double accuracy = 0.0;      // mean a'_uv in the bin
  double standardized = 0.0;  // accuracy z-scored across bins
  int count = 0;
};

/// Off-diagonal pairs u < v sorted by similarity and cut into equal-count bins.
std::vector<RelationBin> similarity_accuracy_bins(const Matrix& s, const Matrix& a_sym, int n_bins = 20);

}  // namespace metashift::shift
