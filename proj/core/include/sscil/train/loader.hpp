#pragma once

#include <torch/types.h>

#include <Eigen/Core>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "sscil/augment/image_io.hpp"
#include "sscil/data/manifest.hpp"

namespace sscil {

// Gatekeeper between a phase and the image store. Only ids in the allowed
// set are served; every served id is recorded for later audit.
class AuditingLoader {
 public:
  AuditingLoader(ImageStore& store, std::unordered_set<std::string> allowed);

  // Errors: leakage when the sample is outside the allowed set.
  const Image& fetch(const SampleRecord& sample);

  [[nodiscard]] std::set<std::string> served() const;
  [[nodiscard]] bool allows(const std::string& sample_id) const { return allowed_.contains(sample_id); }

 private:
  ImageStore& store_;
  std::unordered_set<std::string> allowed_;
  mutable std::mutex mutex_;
  std::set<std::string> served_;
};

std::unordered_set<std::string> id_set(std::span<const SampleRecord> samples);

// Un-augmented batch: each image resized to `side` and stacked NCHW.
torch::Tensor plain_batch(AuditingLoader& loader, std::span<const SampleRecord> samples, int side);

Eigen::MatrixXd to_matrix(const torch::Tensor& t);

}  // namespace sscil
