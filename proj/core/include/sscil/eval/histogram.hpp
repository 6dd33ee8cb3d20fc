#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sscil/eval/features.hpp"

namespace sscil {

enum class DistanceMetric { cosine, euclidean };

std::string_view to_string(DistanceMetric metric) noexcept;
DistanceMetric parse_distance_metric(std::string_view name);

struct HistogramConfig {
  int bins = 40;
  DistanceMetric metric = DistanceMetric::cosine;
  // Upper edge; cosine distances lie in [0, 2]. Larger values land in the
  // last bin.
  double range_max = 2.0;

  void validate() const;
  friend bool operator==(const HistogramConfig&, const HistogramConfig&) = default;
};

struct DistanceHistogram {
  std::string metric;
  std::string stage;
  std::vector<double> edges;  // bins + 1
  std::vector<long> counts;   // bins
  long pairs = 0;
  long excluded = 0;  // zero-norm rows left out under the cosine metric

  // Share of pairs in the fullest bin.
  [[nodiscard]] double concentration() const;
  [[nodiscard]] std::string to_json() const;
};

// Histogram over all n(n-1)/2 row pairs. Errors: insufficient-data for
// fewer than two rows, undefined-similarity for a zero row under cosine.
DistanceHistogram distance_histogram(const Eigen::MatrixXd& reps, const HistogramConfig& cfg);

// Under the cosine metric, samples whose representation is exactly zero are
// dropped and counted in `excluded`.
DistanceHistogram pairwise_distance_histogram(const ModelState& state, std::span<const SampleRecord> samples,
                                              Stage stage, ImageStore& images, const HistogramConfig& cfg);

}  // namespace sscil
