#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "sscil/augment/image_io.hpp"
#include "sscil/data/manifest.hpp"
#include "sscil/model/model_state.hpp"

namespace sscil {

// Linear probe recipe: momentum SGD with a cosine schedule over
// standardized features, weights starting at zero.
struct ProbeConfig {
  int epochs = 100;
  int batch_size = 256;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  int feature_batch = 256;

  void validate() const;
  friend bool operator==(const ProbeConfig&, const ProbeConfig&) = default;
};

// Affine classifier over raw features: scores = weight * x + bias, row r
// scoring classes[r]. Standardization is folded into weight and bias.
struct ProbeResult {
  std::vector<int> classes;
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
  double accuracy = 0.0;  // on the test set, or the train set when no test set was given
  int train_count = 0;
  int test_count = 0;
  std::vector<double> loss_trace;

  [[nodiscard]] std::vector<int> predict(const Eigen::MatrixXd& features) const;
};

// Errors: degenerate-probe when the labels hold fewer than two classes.
ProbeResult fit_probe(const Eigen::MatrixXd& features, std::span<const int> labels, const ProbeConfig& cfg);

double accuracy_of(const ProbeResult& probe, const Eigen::MatrixXd& features, std::span<const int> labels);

// Encoder features of `train` (and `test`) from the frozen state, then
// fit_probe. The state is never modified.
ProbeResult fit_linear_probe(const ModelState& frozen, std::span<const SampleRecord> train,
                             std::span<const SampleRecord> test, ImageStore& images, const ProbeConfig& cfg);

}  // namespace sscil
