#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sscil/data/phase_plan.hpp"
#include "sscil/eval/protocols.hpp"
#include "sscil/runner/config.hpp"
#include "sscil/runner/run_dir.hpp"

namespace sscil {

struct RunOptions {
  // Stop (as if interrupted) once this phase is complete; 0 runs to the end.
  int stop_after_phase = 0;
  std::function<void(std::string_view)> log;
};

struct RunOutcome {
  RunPaths paths;
  std::string run_id;
  std::vector<int> completed;
  bool finished = false;
};

DatasetManifest load_run_manifest(const RunConfig& cfg);

// Precomputed plan file, or the configured scheme over the manifest.
// Errors: usage when the cluster scheme has no feature file.
PhasePlan build_plan(const RunConfig& cfg, const DatasetManifest& manifest);

// Executes (or resumes) the phase loop in runs/<run_id>: train, checkpoint,
// evaluate, append metrics and ledger entries. A run directory holding a
// different config is rejected. Errors: locked, integrity, invalid-config.
RunOutcome execute_run(const RunConfig& cfg, const RunOptions& opts = {});

// Evaluation of one completed phase.
MetricsRecord evaluate_phase(const ModelState& state, const PhasePlan& plan, const DatasetManifest& manifest,
                             int lep_phase, ImageStore& images, const ProbeConfig& probe);

struct AblationCell {
  std::string tag;
  RunConfig config;
};

// One cell per listed value: `disable` names augmentation ops, `projectors`
// holds "none" or "<width>x<depth>". Errors: usage on unknown keys.
std::vector<AblationCell> ablation_cells(const RunConfig& base, const std::vector<std::string>& disable,
                                         const std::vector<std::string>& projectors, bool no_inherit);

ProjectorSpec parse_projector(std::string_view descriptor);

}  // namespace sscil
