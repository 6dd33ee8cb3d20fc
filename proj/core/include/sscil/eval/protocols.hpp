#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sscil/data/phase_plan.hpp"
#include "sscil/eval/probe.hpp"

namespace sscil {

// LEP_t: probe on the train split of the classes of phases 1..t, tested on
// their test split. Errors: lep-undefined for sample-level plans.
double eval_lep(const ModelState& state, const PhasePlan& plan, const DatasetManifest& manifest, int t,
                ImageStore& images, const ProbeConfig& cfg);

struct GepResult {
  double accuracy = 0.0;
  ProbeResult probe;
  std::vector<std::string> test_ids;
  std::vector<int> test_labels;
  std::vector<char> correct;  // per test sample
};

// GEP_t: probe on the full train split, tested on the full test split.
GepResult eval_gep(const ModelState& state, const DatasetManifest& manifest, ImageStore& images, const ProbeConfig& cfg);

struct GepDetail {
  std::map<int, double> accuracy;  // phase -> accuracy on its test subset
  std::map<int, int> count;        // phase -> test subset size

  [[nodiscard]] double weighted_mean() const;
};

// The GEP probe's accuracy restricted to each phase's test classes.
// Errors: detail-undefined for sample-level plans.
GepDetail gep_detail(const GepResult& gep, const PhasePlan& plan, const DatasetManifest& manifest);

// joint - final; positive means forgetting.
inline double forgetting_gap(double final_metric, double joint_metric) { return joint_metric - final_metric; }

struct MetricsRecord {
  int phase_index = 0;
  std::optional<double> lep;
  double gep = 0.0;
  std::map<int, double> gep_detail;
  std::map<int, int> gep_detail_count;
  std::optional<double> forgetting_gap;
};

}  // namespace sscil
