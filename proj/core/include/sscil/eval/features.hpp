#pragma once

#include <filesystem>
#include <span>
#include <string_view>

#include "sscil/data/feature_matrix.hpp"
#include "sscil/data/manifest.hpp"
#include "sscil/model/model_state.hpp"
#include "sscil/train/loader.hpp"

namespace sscil {

enum class Stage { encoder, projector };

std::string_view to_string(Stage stage) noexcept;
Stage parse_stage(std::string_view name);

// Eval-mode representations of un-augmented (resized) samples, one row per
// sample in input order.
FeatureMatrix extract_features(const ModelState& state, std::span<const SampleRecord> samples, AuditingLoader& loader,
                               Stage stage, int batch_size = 256);

// Writes the representations as a feature file and returns them.
FeatureMatrix export_embeddings(const ModelState& state, std::span<const SampleRecord> samples, ImageStore& images,
                                Stage stage, const std::filesystem::path& out);

}  // namespace sscil
