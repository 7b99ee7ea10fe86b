#include "metashift/shift/matrix.hpp"

#include <algorithm>

#include "metashift/common/csv.hpp"
#include "metashift/common/error.hpp"

namespace metashift::shift {

std::size_t LabeledMatrix::index_of(int id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw ValidationError("task " + std::to_string(id) + " not in matrix");
  return static_cast<std::size_t>(it - ids.begin());
}

LabeledMatrix LabeledMatrix::sub(const std::vector<int>& subset) const {
  LabeledMatrix out;
  out.ids = subset;
  out.values.resize(static_cast<Eigen::Index>(subset.size()), static_cast<Eigen::Index>(subset.size()));
  std::vector<std::size_t> idx;
  for (int id : subset) idx.push_back(index_of(id));
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out.values(i, j) = values(idx[i], idx[j]);
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const LabeledMatrix& m,
                      const std::vector<std::string>& comments) {
  csv::Table t;
  t.comments = comments;
  t.header.push_back("task_id");
  for (int id : m.ids) t.header.push_back(std::to_string(id));
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    csv::Row row{std::to_string(m.ids[i])};
    for (std::size_t j = 0; j < m.ids.size(); ++j) row.push_back(csv::num(m.values(i, j)));
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  if (t.header.empty() || t.header[0] != "task_id")
    throw FormatError(path.string() + ": expected a task_id header column");
  LabeledMatrix m;
  const std::size_t n = t.header.size() - 1;
  if (t.rows.size() != n) throw FormatError(path.string() + ": matrix is not square");
  m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  try {
    for (std::size_t j = 0; j < n; ++j) m.ids.push_back(std::stoi(t.header[j + 1]));
    for (std::size_t i = 0; i < n; ++i) {
      if (t.rows[i].size() != n + 1) throw FormatError(path.string() + ": ragged row " + std::to_string(i));
      if (std::stoi(t.rows[i][0]) != m.ids[i]) throw FormatError(path.string() + ": row ids differ from header");
      for (std::size_t j = 0; j < n; ++j) m.values(i, j) = std::stod(t.rows[i][j + 1]);
    }
  } catch (const std::logic_error&) {
    throw FormatError(path.string() + ": non-numeric matrix entry");
  }
  return m;
}

}  // namespace metashift::shift
