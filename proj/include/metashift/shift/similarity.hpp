#pragma once

#include <vector>

#include "metashift/nn/network.hpp"
#include "metashift/shift/matrix.hpp"

namespace metashift::shift {

/// Post-GAP features, one row per example, not centred.
Matrix gap_features(const nn::ParameterSet& params, const nn::Batch& batch);
void center_columns(Matrix& x);
/// gap_features with every column shifted to mean zero.
Matrix extract_activations(const nn::ParameterSet& params, const nn::Batch& batch);

/// 100 * |Y'X|_F^2 / (|X'X|_F |Y'Y|_F) for column-centred X, Y with equal
/// row counts. Throws NumericalError when either side is all zero.
double linear_cka(const Matrix& x, const Matrix& y);

/// Ensemble-averaged CKA similarity between the task-specific models of
/// every pair of tasks. Off-diagonal cells compare all E_u x E_v model pairs
/// on the concatenated data of both tasks; diagonal cells compare the
/// C(E_u, 2) distinct pairs of task u on its own data. `ensembles[t]` and
/// `data[t]` belong to the same task. Throws ValidationError if a task has
/// fewer than two models.
Matrix pairwise_similarity(const std::vector<std::vector<nn::ParameterSet>>& ensembles,
                           const std::vector<nn::Batch>& data, std::size_t jobs = 1);

/// d = 100 - s off the diagonal, 0 on it.
Matrix similarity_to_distance(const Matrix& s);

}  // namespace metashift::shift
