#include "sscil/eval/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "sscil/common/error.hpp"

namespace sscil {

std::string_view to_string(DistanceMetric metric) noexcept {
  return metric == DistanceMetric::cosine ? "cosine" : "euclidean";
}

DistanceMetric parse_distance_metric(std::string_view name) {
  if (name == "cosine") return DistanceMetric::cosine;
  if (name == "euclidean") return DistanceMetric::euclidean;
  throw Error(Errc::invalid_config, "unknown distance metric '" + std::string(name) + "'");
}

void HistogramConfig::validate() const {
  if (bins < 1) throw Error(Errc::invalid_config, "histogram bins must be >= 1");
  if (!(range_max > 0.0)) throw Error(Errc::invalid_config, "histogram range_max must be > 0");
}

double DistanceHistogram::concentration() const {
  if (pairs == 0) return 0.0;
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(pairs);
}

std::string DistanceHistogram::to_json() const {
  nlohmann::ordered_json j;
  j["metric"] = metric;
  j["stage"] = stage;
  j["edges"] = edges;
  j["counts"] = counts;
  j["pairs"] = pairs;
  j["excluded"] = excluded;
  j["concentration"] = concentration();
  return j.dump();
}

DistanceHistogram distance_histogram(const Eigen::MatrixXd& reps, const HistogramConfig& cfg) {
  cfg.validate();
  const auto n = reps.rows();
  if (n < 2) throw Error(Errc::insufficient_data, "a distance histogram needs at least two samples");
  DistanceHistogram h;
  h.metric = std::string(to_string(cfg.metric));
  h.counts.assign(static_cast<std::size_t>(cfg.bins), 0);
  for (int i = 0; i <= cfg.bins; ++i) h.edges.push_back(cfg.range_max * i / cfg.bins);

  Eigen::MatrixXd x = reps;
  if (cfg.metric == DistanceMetric::cosine) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double norm = x.row(r).norm();
      if (!(norm > 0.0)) throw Error(Errc::undefined_similarity, "zero representation under cosine distance");
      x.row(r) /= norm;
    }
  }
  const Eigen::MatrixXd gram = x * x.transpose();
  const double width = cfg.range_max / cfg.bins;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d;
      if (cfg.metric == DistanceMetric::cosine) {
        d = 1.0 - gram(i, j);
      } else {
        d = std::sqrt(std::max(0.0, gram(i, i) + gram(j, j) - 2.0 * gram(i, j)));
      }
      d = std::max(0.0, d);
      const auto bin = std::min<long>(cfg.bins - 1, static_cast<long>(d / width));
      ++h.counts[static_cast<std::size_t>(bin)];
      ++h.pairs;
    }
  }
  return h;
}

DistanceHistogram pairwise_distance_histogram(const ModelState& state, std::span<const SampleRecord> samples,
                                              Stage stage, ImageStore& images, const HistogramConfig& cfg) {
  if (samples.size() < 2) throw Error(Errc::insufficient_data, "a distance histogram needs at least two samples");
  AuditingLoader loader(images, id_set(samples));
  const auto reps = extract_features(state, samples, loader, stage);
  if (cfg.metric != DistanceMetric::cosine) {
    auto h = distance_histogram(reps.features, cfg);
    h.stage = std::string(to_string(stage));
    return h;
  }
  // A dead representation (all ReLU outputs zero) has no direction; it is
  // left out and counted instead of failing the whole evaluation.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < reps.features.rows(); ++r) {
    if (reps.features.row(r).squaredNorm() > 0.0) keep.push_back(r);
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(keep.size()), reps.features.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = reps.features.row(keep[i]);
  auto h = distance_histogram(rows, cfg);
  h.stage = std::string(to_string(stage));
  h.excluded = static_cast<long>(samples.size() - keep.size());
  return h;
}

}  // namespace sscil
