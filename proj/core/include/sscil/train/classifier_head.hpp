#pragma once

#include <torch/types.h>

#include <cstdint>
#include <vector>

#include "sscil/model/model_state.hpp"

namespace sscil {

// Linear classifier used by the supervised baselines. Row r of `weight`
// scores class `classes[r]`; growing appends rows and keeps the old ones.
struct ClassifierHead {
  std::vector<int> classes;
  torch::Tensor weight;  // C x feature_dim
  torch::Tensor bias;    // C

  // New rows are seeded per class id, so the head does not depend on the
  // order in which classes arrive.
  void grow(const std::vector<int>& new_classes, int feature_dim, std::uint64_t seed);
  // Errors: label when the class has no row.
  [[nodiscard]] int column_of(int class_id) const;
  [[nodiscard]] int size() const noexcept { return static_cast<int>(classes.size()); }

  [[nodiscard]] ClassifierHead clone() const;
  [[nodiscard]] TensorMap tensors() const;
  static ClassifierHead from_tensors(const TensorMap& tensors);
};

}  // namespace sscil
