#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "sscil/augment/augmentation.hpp"
#include "sscil/augment/image_io.hpp"
#include "sscil/data/manifest.hpp"
#include "sscil/model/model_state.hpp"
#include "sscil/train/classifier_head.hpp"
#include "sscil/train/exemplar_memory.hpp"

namespace sscil {

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 0.2;
  int epochs_per_phase = 30;
  std::string optimizer = "sgd";
  double momentum = 0.9;
  double weight_decay_ssl = 1e-6;
  double weight_decay_supervised = 1e-4;
  std::string schedule = "cosine";
  double temperature = 0.1;
  std::uint64_t seed = 0;
  int workers = 1;
  bool deterministic = true;
  int memory_capacity = 2000;
  double ce_weight = 1.0;
  double distill_weight = 1.0;

  // Errors: invalid-config.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Resolved training samples of one phase. `retired` lists the ids of
// earlier phases, which must not reappear.
struct PhaseData {
  int phase_index = 1;
  std::vector<SampleRecord> samples;
  std::unordered_set<std::string> retired;
};

struct PhaseResult {
  ModelState state;
  std::vector<double> loss_trace;  // mean loss per epoch
  double wall_seconds = 0.0;
  TrainConfig config;
  std::vector<std::string> served_ids;  // sorted, from the auditing loader
};

// Supervised baselines see crop + flip only.
AugmentationConfig supervised_augmentation(const AugmentationConfig& base);

// Contrastive phase on unlabeled data. Class ids are never read.
// Errors: empty-phase, leakage, invalid-config.
PhaseResult train_sscil_phase(const ModelState& state, const PhaseData& data, const TrainConfig& cfg,
                              const AugmentationConfig& aug, ImageStore& images);

// Cross entropy on the current phase only. `head` is grown to cover the
// phase's classes and updated in place.
PhaseResult train_finetune_phase(const ModelState& state, ClassifierHead& head, const PhaseData& data,
                                 const TrainConfig& cfg, const AugmentationConfig& aug, ImageStore& images);

struct IcarlOutcome {
  PhaseResult result;
  ExemplarMemory memory;
};

// Cross entropy over all seen classes on current data plus memory, and
// distillation towards the incoming model on the old classes. Afterwards
// each seen class keeps floor(capacity / classes) exemplars.
IcarlOutcome train_icarl_phase(const ModelState& state, ClassifierHead& head, const PhaseData& data,
                               const ExemplarMemory& memory, const DatasetManifest& manifest, const TrainConfig& cfg,
                               const AugmentationConfig& aug, ImageStore& images);

enum class JointMode { self_supervised, supervised };

// Single phase over all training data, starting from a fresh state.
// `head` is required in supervised mode.
PhaseResult train_joint(const ModelState& fresh, const std::vector<SampleRecord>& samples, const TrainConfig& cfg,
                        const AugmentationConfig& aug, JointMode mode, ImageStore& images,
                        ClassifierHead* head = nullptr);

// Learning rate at `step` of `total` under the configured schedule.
double scheduled_lr(const TrainConfig& cfg, long step, long total);

}  // namespace sscil
