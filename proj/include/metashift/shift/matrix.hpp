#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace metashift::shift {

using Matrix = Eigen::MatrixXd;

/// Square matrix whose rows and columns are keyed by task id.
struct LabeledMatrix {
  std::vector<int> ids;
  Matrix values;

  std::size_t index_of(int id) const;
  double at(int row_id, int col_id) const { return values(index_of(row_id), index_of(col_id)); }
  /// Rows and columns restricted to `subset`, in that order.
  LabeledMatrix sub(const std::vector<int>& subset) const;
};

/// CSV with a task-id header row and a task-id first column.
void write_matrix_csv(const std::filesystem::path& path, const LabeledMatrix& m,
                      const std::vector<std::string>& comments = {});
LabeledMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace metashift::shift
