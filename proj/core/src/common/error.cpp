#include "sscil/common/error.hpp"

namespace sscil {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_manifest: return "malformed-manifest";
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::indivisible_classes: return "indivisible-classes";
    case Errc::missing_grouping: return "missing-grouping";
    case Errc::group_arity: return "group-arity";
    case Errc::infeasible_k: return "infeasible-k";
    case Errc::invalid_feature: return "invalid-feature";
    case Errc::coverage: return "coverage";
    case Errc::registry: return "registry";
    case Errc::input_shape: return "input-shape";
    case Errc::undefined_similarity: return "undefined-similarity";
    case Errc::invalid_temperature: return "invalid-temperature";
    case Errc::label: return "label";
    case Errc::class_alignment: return "class-alignment";
    case Errc::empty_phase: return "empty-phase";
    case Errc::leakage: return "leakage";
    case Errc::capacity: return "capacity";
    case Errc::degenerate_probe: return "degenerate-probe";
    case Errc::lep_undefined: return "lep-undefined";
    case Errc::detail_undefined: return "detail-undefined";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::integrity: return "integrity";
    case Errc::invalid_config: return "invalid-config";
    case Errc::io: return "io";
    case Errc::locked: return "locked";
    case Errc::usage: return "usage";
  }
  return "unknown";
}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::usage:
      return 2;
    case Errc::io:
    case Errc::locked:
      return 1;
    default:
      return 3;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace sscil
