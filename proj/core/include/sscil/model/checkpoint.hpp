#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "sscil/model/model_state.hpp"

namespace sscil {

// A checkpoint directory holds
//   spec.json     encoder/projector specs
//   meta.json     phase index, tensor table (group, name, dtype, shape,
//                 offset, bytes), FNV-1a hash of the payload, extras
//   tensors.bin   raw little-endian tensor data, concatenated
//
// `extra_tensors` carries additional named groups (e.g. a classifier head)
// and `extras_json` an opaque JSON document (e.g. exemplar memory).
struct Checkpoint {
  ModelState state;
  std::map<std::string, TensorMap> extra_tensors;
  std::string extras_json = "{}";
};

// Writes into a sibling temporary directory and renames it into place.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);

// Errors: integrity on hash, size or table mismatch; io when files are absent.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace sscil
