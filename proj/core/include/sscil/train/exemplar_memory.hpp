#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "sscil/data/feature_matrix.hpp"

namespace sscil {

// Rehearsal memory: per-class exemplar ids in herding order.
struct ExemplarMemory {
  int capacity = 2000;
  std::map<int, std::vector<std::string>> exemplars;

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] std::vector<std::string> ids() const;  // sorted
  // Errors: capacity when more than `capacity` ids are stored.
  void validate() const;

  [[nodiscard]] std::string to_json() const;
  static ExemplarMemory from_json(const std::string& text);

  friend bool operator==(const ExemplarMemory&, const ExemplarMemory&) = default;
};

// Greedy herding: step k adds the row that brings the running exemplar mean
// closest (Euclidean) to the mean of all rows. Ties go to the lowest index.
// Returns row indices in selection order. Errors: capacity when m > rows.
std::vector<int> herding_select(const Eigen::MatrixXd& features, int m);
std::vector<std::string> herding_select(const FeatureMatrix& features, int m);

}  // namespace sscil
