#include "rtgee/dataset.hpp"

#include <numeric>

namespace rtgee {

std::size_t LongitudinalDataset::num_observations() const {
  return std::accumulate(subjects.begin(), subjects.end(), std::size_t{0},
                         [](std::size_t acc, const Subject& s) { return acc + s.size(); });
}

bool LongitudinalDataset::balanced() const {
  const auto T = static_cast<std::size_t>(num_times());
  for (const auto& s : subjects) {
    if (s.size() != T) return false;
  }
  return true;
}

void LongitudinalDataset::validate() const {
  if (subjects.empty()) throw DataError("dataset has no subjects");
  if (time_labels.empty()) throw DataError("dataset has an empty time grid");
  for (std::size_t t = 1; t < time_labels.size(); ++t) {
    if (time_labels[t] <= time_labels[t - 1]) throw DataError("time labels must be strictly increasing");
  }
  const int dim = p();
  for (const auto& s : subjects) {
    const auto m = s.size();
    if (m == 0) throw DataError("subject '" + s.id + "' has no observations");
    if (s.x.rows() != static_cast<Eigen::Index>(m) || s.x.cols() != dim || s.times.size() != m) {
      throw DataError("subject '" + s.id + "' has inconsistent dimensions");
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (s.times[j] < 0 || s.times[j] >= num_times()) {
        throw DataError("subject '" + s.id + "' has a time index outside the grid");
      }
      if (j > 0 && s.times[j] <= s.times[j - 1]) {
        throw DataError("subject '" + s.id + "' has unsorted or duplicate time indices");
      }
    }
  }
}

Eigen::MatrixXd LongitudinalDataset::stacked_x() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(num_observations()), p());
  Eigen::Index row = 0;
  for (const auto& s : subjects) {
    out.middleRows(row, s.x.rows()) = s.x;
    row += s.x.rows();
  }
  return out;
}

Eigen::VectorXd LongitudinalDataset::stacked_y() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(num_observations()));
  Eigen::Index row = 0;
  for (const auto& s : subjects) {
    out.segment(row, s.y.size()) = s.y;
    row += s.y.size();
  }
  return out;
}

LongitudinalDataset LongitudinalDataset::without_subject(std::size_t index) const {
  LongitudinalDataset out;
  out.covariate_names = covariate_names;
  out.time_labels = time_labels;
  out.subjects.reserve(subjects.size() - 1);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (i != index) out.subjects.push_back(subjects[i]);
  }
  return out;
}

LongitudinalDataset make_dataset(std::vector<Subject> subjects, int p, int num_times) {
  LongitudinalDataset data;
  data.subjects = std::move(subjects);
  data.covariate_names.reserve(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) data.covariate_names.push_back("x" + std::to_string(k + 1));
  data.time_labels.resize(static_cast<std::size_t>(num_times));
  std::iota(data.time_labels.begin(), data.time_labels.end(), 1L);
  return data;
}

}  // namespace rtgee
