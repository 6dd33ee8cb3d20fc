#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sscil {

// Every failure the harness reports is tagged with one of these codes so the
// CLI can map it onto an exit status and tests can assert on the exact kind.
enum class Errc {
  malformed_manifest,
  duplicate_id,
  indivisible_classes,
  missing_grouping,
  group_arity,
  infeasible_k,
  invalid_feature,
  coverage,
  registry,
  input_shape,
  undefined_similarity,
  invalid_temperature,
  label,
  class_alignment,
  empty_phase,
  leakage,
  capacity,
  degenerate_probe,
  lep_undefined,
  detail_undefined,
  insufficient_data,
  integrity,
  invalid_config,
  io,
  locked,
  usage,
};

std::string_view to_string(Errc code) noexcept;

// Usage problems exit with 2, data/validation problems with 3, the rest with 1.
int exit_code_for(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sscil
