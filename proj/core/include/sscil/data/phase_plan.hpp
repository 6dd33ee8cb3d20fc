#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sscil/data/feature_matrix.hpp"
#include "sscil/data/manifest.hpp"

namespace sscil {

enum class Scheme { random, semantic, cluster };
enum class PartitionMode { class_level, sample_level };

std::string_view to_string(Scheme scheme) noexcept;
std::string_view to_string(PartitionMode mode) noexcept;
Scheme parse_scheme(std::string_view name);

// Sub-dataset of one incremental phase. Exactly one of the two sets is
// populated, matching `mode`; both are kept sorted.
struct PhasePartition {
  int phase_index = 1;
  PartitionMode mode = PartitionMode::class_level;
  std::vector<int> class_set;
  std::vector<std::string> sample_set;

  friend bool operator==(const PhasePartition&, const PhasePartition&) = default;
};

struct PhasePlan {
  Scheme scheme = Scheme::random;
  int num_phases = 0;
  std::vector<PhasePartition> partitions;
  std::uint64_t seed = 0;

  [[nodiscard]] PartitionMode mode() const noexcept {
    return scheme == Scheme::cluster ? PartitionMode::sample_level : PartitionMode::class_level;
  }
  [[nodiscard]] const PhasePartition& phase(int t) const;

  friend bool operator==(const PhasePlan&, const PhasePlan&) = default;
};

// Shuffles the sorted class list with the seeded generator and cuts it into
// N consecutive blocks. Errors: indivisible-classes when C % N != 0.
PhasePlan split_random(const DatasetManifest& manifest, int num_phases, std::uint64_t seed);

// One partition per semantic group, ordered by group label.
// Errors: missing-grouping, group-arity.
PhasePlan split_semantic(const DatasetManifest& manifest, int num_phases);

// K-means over the train-split features; phase t holds cluster t-1.
// Errors: coverage when a train sample has no feature row.
PhasePlan split_cluster(const DatasetManifest& manifest, const FeatureMatrix& features, int num_phases,
                        std::uint64_t seed);

struct PlanViolation {
  std::string kind;  // phase-count, phase-order, mode, empty-set, overlap, coverage, unknown-member
  std::string message;
  std::vector<int> phases;
};

// Lists every violated plan invariant; empty iff the plan is valid.
std::vector<PlanViolation> validate_plan(const PhasePlan& plan, const DatasetManifest& manifest);

// Train-split samples of phase t, in manifest order.
std::vector<SampleRecord> phase_train_samples(const PhasePlan& plan, const DatasetManifest& manifest, int t);

// Union of the class sets of phases 1..t (class-level plans only).
std::vector<int> classes_through(const PhasePlan& plan, int t);

std::string serialize_plan(const PhasePlan& plan);
PhasePlan parse_plan(std::string_view text);
void save_plan(const PhasePlan& plan, const std::filesystem::path& path);
PhasePlan load_plan(const std::filesystem::path& path);

}  // namespace sscil
