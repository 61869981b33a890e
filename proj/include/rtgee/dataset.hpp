#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rtgee {

/// Raised when input data violate a structural requirement (shape, grid, duplicates).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One subject's repeated measurements. Row j of `x` pairs with `y[j]` and
/// with `times[j]`, a 0-based index into the dataset's global time grid.
struct Subject {
  std::string id;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> times;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
};

/// Subjects observed on a shared time grid with a common covariate header.
struct LongitudinalDataset {
  std::vector<Subject> subjects;
  std::vector<std::string> covariate_names;
  /// Original time labels, one per grid index, strictly increasing.
  std::vector<long> time_labels;

  std::size_t n() const { return subjects.size(); }
  int p() const { return static_cast<int>(covariate_names.size()); }
  int num_times() const { return static_cast<int>(time_labels.size()); }
  std::size_t num_observations() const;
  bool balanced() const;

  /// Checks dimensions, time ordering and grid membership; throws DataError.
  void validate() const;

  /// All covariate rows stacked subject by subject (N x p).
  Eigen::MatrixXd stacked_x() const;
  Eigen::VectorXd stacked_y() const;

  /// Copy with subject `index` removed.
  LongitudinalDataset without_subject(std::size_t index) const;
};

/// Builds a dataset whose time grid is {0, ..., T-1} with generic covariate names.
LongitudinalDataset make_dataset(std::vector<Subject> subjects, int p, int num_times);

}  // namespace rtgee
