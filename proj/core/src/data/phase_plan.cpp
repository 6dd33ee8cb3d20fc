#include "sscil/data/phase_plan.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"
#include "sscil/data/kmeans.hpp"

namespace sscil {

namespace {

constexpr const char* kPlanFormat = "sscil-phase-plan/1";

void require_phase_count(int num_phases) {
  if (num_phases < 2) throw Error(Errc::invalid_config, "number of phases must be at least 2");
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  return os.str();
}

}  // namespace

std::string_view to_string(Scheme scheme) noexcept {
  switch (scheme) {
    case Scheme::random: return "random";
    case Scheme::semantic: return "semantic";
    case Scheme::cluster: return "cluster";
  }
  return "?";
}

std::string_view to_string(PartitionMode mode) noexcept {
  return mode == PartitionMode::class_level ? "class-level" : "sample-level";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "random") return Scheme::random;
  if (name == "semantic") return Scheme::semantic;
  if (name == "cluster") return Scheme::cluster;
  throw Error(Errc::usage, "unknown scheme '" + std::string(name) + "' (random|semantic|cluster)");
}

const PhasePartition& PhasePlan::phase(int t) const {
  if (t < 1 || t > static_cast<int>(partitions.size())) {
    throw Error(Errc::invalid_config, "phase " + std::to_string(t) + " outside 1.." + std::to_string(partitions.size()));
  }
  return partitions[static_cast<std::size_t>(t - 1)];
}

PhasePlan split_random(const DatasetManifest& manifest, int num_phases, std::uint64_t seed) {
  require_phase_count(num_phases);
  std::vector<int> classes = manifest.class_ids();  // sorted: map keys
  if (classes.size() % static_cast<std::size_t>(num_phases) != 0) {
    throw Error(Errc::indivisible_classes, std::to_string(classes.size()) + " classes cannot be split into " +
                                               std::to_string(num_phases) + " equal phases");
  }
  Rng rng(seed);
  rng.shuffle(std::span<int>(classes));
  const std::size_t per_phase = classes.size() / static_cast<std::size_t>(num_phases);
  PhasePlan plan{Scheme::random, num_phases, {}, seed};
  for (int t = 0; t < num_phases; ++t) {
    PhasePartition part;
    part.phase_index = t + 1;
    part.mode = PartitionMode::class_level;
    const auto first = classes.begin() + static_cast<std::ptrdiff_t>(per_phase * static_cast<std::size_t>(t));
    part.class_set.assign(first, first + static_cast<std::ptrdiff_t>(per_phase));
    std::sort(part.class_set.begin(), part.class_set.end());
    plan.partitions.push_back(std::move(part));
  }
  return plan;
}

PhasePlan split_semantic(const DatasetManifest& manifest, int num_phases) {
  require_phase_count(num_phases);
  if (!manifest.semantic_group) throw Error(Errc::missing_grouping, "manifest carries no semantic grouping");
  std::map<std::string, std::vector<int>> groups;
  for (const auto& [cls, _] : manifest.class_names) {
    const auto it = manifest.semantic_group->find(cls);
    if (it == manifest.semantic_group->end()) {
      throw Error(Errc::missing_grouping, "class " + std::to_string(cls) + " has no group");
    }
    groups[it->second].push_back(cls);
  }
  if (static_cast<int>(groups.size()) != num_phases) {
    throw Error(Errc::group_arity, std::to_string(groups.size()) + " semantic groups for " +
                                       std::to_string(num_phases) + " phases");
  }
  PhasePlan plan{Scheme::semantic, num_phases, {}, 0};
  int t = 1;
  for (auto& [label, members] : groups) {
    PhasePartition part;
    part.phase_index = t++;
    part.mode = PartitionMode::class_level;
    part.class_set = std::move(members);
    plan.partitions.push_back(std::move(part));
  }
  return plan;
}

PhasePlan split_cluster(const DatasetManifest& manifest, const FeatureMatrix& features, int num_phases,
                        std::uint64_t seed) {
  require_phase_count(num_phases);
  features.validate();
  std::unordered_map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < features.sample_ids.size(); ++i) {
    row_of.emplace(features.sample_ids[i], static_cast<Eigen::Index>(i));
  }
  const auto train = manifest.split_samples(Split::train);
  FeatureMatrix train_features;
  train_features.features.resize(static_cast<Eigen::Index>(train.size()), features.dim());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto it = row_of.find(train[i].sample_id);
    if (it == row_of.end()) {
      throw Error(Errc::coverage, "no feature row for train sample '" + train[i].sample_id + "'");
    }
    train_features.sample_ids.push_back(train[i].sample_id);
    train_features.features.row(static_cast<Eigen::Index>(i)) = features.features.row(it->second);
  }
  const auto clusters = kmeans_cluster(train_features, num_phases, seed);
  PhasePlan plan{Scheme::cluster, num_phases, {}, seed};
  plan.partitions.resize(static_cast<std::size_t>(num_phases));
  for (int t = 0; t < num_phases; ++t) {
    plan.partitions[static_cast<std::size_t>(t)].phase_index = t + 1;
    plan.partitions[static_cast<std::size_t>(t)].mode = PartitionMode::sample_level;
  }
  for (const auto& [id, cluster] : clusters) plan.partitions[static_cast<std::size_t>(cluster)].sample_set.push_back(id);
  for (auto& part : plan.partitions) std::sort(part.sample_set.begin(), part.sample_set.end());
  return plan;
}

std::vector<PlanViolation> validate_plan(const PhasePlan& plan, const DatasetManifest& manifest) {
  std::vector<PlanViolation> report;
  const auto add = [&](std::string kind, std::string message, std::vector<int> phases = {}) {
    report.push_back({std::move(kind), std::move(message), std::move(phases)});
  };

  if (plan.num_phases < 2) add("phase-count", "plan declares " + std::to_string(plan.num_phases) + " phases (< 2)");
  if (static_cast<int>(plan.partitions.size()) != plan.num_phases) {
    add("phase-count", "plan declares " + std::to_string(plan.num_phases) + " phases but holds " +
                           std::to_string(plan.partitions.size()) + " partitions");
  }
  for (std::size_t i = 0; i < plan.partitions.size(); ++i) {
    const auto& p = plan.partitions[i];
    const int expected = static_cast<int>(i) + 1;
    if (p.phase_index != expected) {
      add("phase-order", "partition " + std::to_string(expected) + " carries phase index " +
                             std::to_string(p.phase_index), {p.phase_index});
    }
    if (p.mode != plan.mode()) {
      add("mode", "phase " + std::to_string(p.phase_index) + " is " + std::string(to_string(p.mode)) +
                      " in a " + std::string(to_string(plan.mode())) + " plan", {p.phase_index});
    }
    const bool class_level = p.mode == PartitionMode::class_level;
    if ((class_level && !p.sample_set.empty()) || (!class_level && !p.class_set.empty())) {
      add("mode", "phase " + std::to_string(p.phase_index) + " populates the set of the other mode", {p.phase_index});
    }
    if ((class_level && p.class_set.empty()) || (!class_level && p.sample_set.empty())) {
      add("empty-set", "phase " + std::to_string(p.phase_index) + " is empty", {p.phase_index});
    }
  }

  if (plan.mode() == PartitionMode::class_level) {
    const auto all = manifest.class_ids();
    const std::set<int> known(all.begin(), all.end());
    std::map<int, int> owner;
    for (const auto& p : plan.partitions) {
      std::map<int, std::vector<int>> shared;  // earlier phase -> classes
      for (int c : p.class_set) {
        if (!known.contains(c)) {
          add("unknown-member", "phase " + std::to_string(p.phase_index) + " lists unknown class " + std::to_string(c),
              {p.phase_index});
          continue;
        }
        const auto [it, inserted] = owner.emplace(c, p.phase_index);
        if (!inserted) shared[it->second].push_back(c);
      }
      for (const auto& [other, classes] : shared) {
        add("overlap", "phases " + std::to_string(other) + " and " + std::to_string(p.phase_index) +
                           " share classes " + join(classes), {other, p.phase_index});
      }
    }
    std::vector<int> missing;
    for (int c : all) {
      if (!owner.contains(c)) missing.push_back(c);
    }
    if (!missing.empty()) add("coverage", "classes not assigned to any phase: " + join(missing));
  } else {
    std::set<std::string> train_ids;
    for (const auto& s : manifest.samples) {
      if (s.split == Split::train) train_ids.insert(s.sample_id);
    }
    std::map<std::string, int> owner;
    for (const auto& p : plan.partitions) {
      std::map<int, std::vector<std::string>> shared;
      for (const auto& id : p.sample_set) {
        if (!train_ids.contains(id)) {
          add("unknown-member", "phase " + std::to_string(p.phase_index) + " lists non-train sample '" + id + "'",
              {p.phase_index});
          continue;
        }
        const auto [it, inserted] = owner.emplace(id, p.phase_index);
        if (!inserted) shared[it->second].push_back(id);
      }
      for (const auto& [other, ids] : shared) {
        add("overlap", "phases " + std::to_string(other) + " and " + std::to_string(p.phase_index) +
                           " share samples " + join(ids), {other, p.phase_index});
      }
    }
    std::vector<std::string> missing;
    for (const auto& id : train_ids) {
      if (!owner.contains(id)) missing.push_back(id);
    }
    if (!missing.empty()) add("coverage", "train samples not assigned to any phase: " + join(missing));
  }
  return report;
}

std::vector<SampleRecord> phase_train_samples(const PhasePlan& plan, const DatasetManifest& manifest, int t) {
  const auto& part = plan.phase(t);
  if (part.mode == PartitionMode::class_level) return manifest.samples_of_classes(part.class_set, Split::train);
  const std::set<std::string> wanted(part.sample_set.begin(), part.sample_set.end());
  std::vector<SampleRecord> out;
  for (const auto& s : manifest.samples) {
    if (s.split == Split::train && wanted.contains(s.sample_id)) out.push_back(s);
  }
  return out;
}

std::vector<int> classes_through(const PhasePlan& plan, int t) {
  if (plan.mode() != PartitionMode::class_level) {
    throw Error(Errc::lep_undefined, "sample-level plans carry no per-phase class sets");
  }
  std::set<int> classes;
  for (int p = 1; p <= t; ++p) {
    const auto& part = plan.phase(p);
    classes.insert(part.class_set.begin(), part.class_set.end());
  }
  return {classes.begin(), classes.end()};
}

std::string serialize_plan(const PhasePlan& plan) {
  nlohmann::ordered_json j;
  j["format"] = kPlanFormat;
  j["scheme"] = to_string(plan.scheme);
  j["mode"] = to_string(plan.mode());
  j["seed"] = plan.seed;
  j["num_phases"] = plan.num_phases;
  auto& parts = j["partitions"] = nlohmann::ordered_json::array();
  for (const auto& p : plan.partitions) {
    nlohmann::ordered_json e;
    e["phase"] = p.phase_index;
    if (p.mode == PartitionMode::class_level) {
      e["classes"] = p.class_set;
    } else {
      e["samples"] = p.sample_set;
    }
    parts.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

PhasePlan parse_plan(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kPlanFormat) throw Error(Errc::invalid_config, "unsupported plan format");
    PhasePlan plan;
    plan.scheme = parse_scheme(j.at("scheme").get<std::string>());
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.num_phases = j.at("num_phases").get<int>();
    for (const auto& e : j.at("partitions")) {
      PhasePartition p;
      p.phase_index = e.at("phase").get<int>();
      if (e.contains("classes")) {
        p.mode = PartitionMode::class_level;
        p.class_set = e.at("classes").get<std::vector<int>>();
      } else {
        p.mode = PartitionMode::sample_level;
        p.sample_set = e.at("samples").get<std::vector<std::string>>();
      }
      plan.partitions.push_back(std::move(p));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("malformed plan: ") + e.what());
  }
}

void save_plan(const PhasePlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << serialize_plan(plan);
}

PhasePlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open plan " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_plan(os.str());
}

}  // namespace sscil
