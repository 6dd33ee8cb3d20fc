#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

namespace sscil {

// Row r of `features` is the representation of `sample_ids[r]`.
struct FeatureMatrix {
  std::vector<std::string> sample_ids;
  Eigen::MatrixXd features;

  [[nodiscard]] Eigen::Index rows() const { return features.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return features.cols(); }

  // Throws invalid-feature on row-count mismatch or non-finite entries.
  void validate() const;
};

// Feature file layout:
//
//   SSCIL-FEATURES 1\n
//   <rows> <dim>\n
//   <sample_id>\n            (rows lines)
//   <rows*dim float64>       (row-major, little endian, no padding)
//
// Loading checks the magic line, the declared shape and the payload size.
void save_features(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace sscil
