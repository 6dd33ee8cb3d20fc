#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "sscil/augment/augmentation.hpp"
#include "sscil/eval/histogram.hpp"
#include "sscil/eval/probe.hpp"
#include "sscil/model/specs.hpp"
#include "sscil/train/trainers.hpp"

namespace sscil {

enum class Method { sscil, finetune, icarl, joint_ssl, joint_supervised };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);
bool is_joint(Method method) noexcept;

struct DatasetPaths {
  std::string manifest;
  std::string features;  // cluster scheme only
  std::string grouping;  // overrides the manifest's groups sidecar

  friend bool operator==(const DatasetPaths&, const DatasetPaths&) = default;
};

struct PlanSettings {
  std::string scheme = "random";
  int num_phases = 5;
  std::string file;  // precomputed plan; takes precedence over scheme

  friend bool operator==(const PlanSettings&, const PlanSettings&) = default;
};

struct EvalSettings {
  bool defer = false;
  bool histograms = true;
  HistogramConfig histogram;
  int histogram_samples = 500;

  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

// Everything a run depends on besides its input files. The run seed feeds
// the plan, initialisation, augmentation and probe streams.
struct RunConfig {
  std::string run_id;
  std::uint64_t seed = 0;
  Method method = Method::sscil;
  DatasetPaths dataset;
  PlanSettings plan;
  TrainConfig train;
  AugmentationConfig augmentation = byol_augmentation(32);
  EncoderSpec encoder;
  ProjectorSpec projector;
  bool inherit_projector = true;
  ProbeConfig probe;
  EvalSettings evaluation;
  std::string output_dir = "runs";
  std::string ablation_cell;

  // Errors: invalid-config, registry.
  void validate() const;
  // run_id when set, otherwise <method>-<scheme>-<N>p-s<seed>[-<cell>].
  [[nodiscard]] std::string resolved_run_id() const;
  // Copies the run seed into the train and probe sections.
  [[nodiscard]] TrainConfig effective_train() const;
  [[nodiscard]] ProbeConfig effective_probe() const;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);

// Unknown keys anywhere are invalid-config errors. Relative dataset and plan
// paths are resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const AugmentationConfig& aug);
nlohmann::ordered_json to_json(const TrainConfig& cfg);

}  // namespace sscil
