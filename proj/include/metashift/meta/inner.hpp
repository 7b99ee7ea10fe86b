#pragma once

#include <span>
#include <vector>

#include "metashift/data/labeled_batch.hpp"
#include "metashift/nn/parameters.hpp"

namespace metashift::meta {

/// Loss and gradient of the mean binary cross-entropy on a batch.
nn::LossAndGrads<float> batch_gradient(const nn::ParameterSet& params, const data::LabeledBatch& b);

/// G sequential SGD steps of rate alpha from phi, one per contiguous slice of
/// `data` (sizes |data|/G, the first |data| mod G slices one larger).
/// Throws ValidationError when |data| < G.
nn::ParameterSet inner_adapt(const nn::ParameterSet& phi, const data::LabeledBatch& data, int steps, float alpha);

/// phi - mean_t theta_t, theta_t = inner_adapt(phi, task_data[t], G, alpha).
/// Per-task adaptations may run concurrently; the mean is taken in task order.
nn::ParameterSet reptile_direction(const nn::ParameterSet& phi, std::span<const data::LabeledBatch> task_data,
                                   int steps, float alpha, std::size_t jobs = 1);

struct SupportQuery {
  data::LabeledBatch support;
  data::LabeledBatch query;
};

/// First-order MAML gradient: mean_t grad L(theta_t, query_t), with
/// theta_t = phi - alpha * grad L(phi, support_t).
nn::ParameterSet fomaml_gradient(const nn::ParameterSet& phi, std::span<const SupportQuery> tasks, float alpha,
                                 std::size_t jobs = 1);

}  // namespace metashift::meta
