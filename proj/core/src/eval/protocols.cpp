#include "sscil/eval/protocols.hpp"

#include <algorithm>

#include "sscil/common/error.hpp"
#include "sscil/eval/features.hpp"

namespace sscil {

double eval_lep(const ModelState& state, const PhasePlan& plan, const DatasetManifest& manifest, int t,
                ImageStore& images, const ProbeConfig& cfg) {
  if (plan.mode() == PartitionMode::sample_level) {
    throw Error(Errc::lep_undefined, "LEP needs per-phase class sets; the " + std::string(to_string(plan.scheme)) +
                                         " scheme partitions samples");
  }
  const auto classes = classes_through(plan, t);
  const auto train = manifest.samples_of_classes(classes, Split::train);
  const auto test = manifest.samples_of_classes(classes, Split::test);
  return fit_linear_probe(state, train, test, images, cfg).accuracy;
}

GepResult eval_gep(const ModelState& state, const DatasetManifest& manifest, ImageStore& images, const ProbeConfig& cfg) {
  const auto train = manifest.split_samples(Split::train);
  const auto test = manifest.split_samples(Split::test);
  if (test.empty()) throw Error(Errc::insufficient_data, "manifest has no test samples");
  AuditingLoader loader(images, id_set(manifest.samples));
  const auto train_features = extract_features(state, train, loader, Stage::encoder, cfg.feature_batch);
  const auto test_features = extract_features(state, test, loader, Stage::encoder, cfg.feature_batch);

  GepResult result;
  std::vector<int> train_labels;
  for (const auto& s : train) train_labels.push_back(s.class_id);
  result.probe = fit_probe(train_features.features, train_labels, cfg);
  const auto pred = result.probe.predict(test_features.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    result.test_ids.push_back(test[i].sample_id);
    result.test_labels.push_back(test[i].class_id);
    const bool ok = pred[i] == test[i].class_id;
    result.correct.push_back(ok ? 1 : 0);
    hits += ok ? 1 : 0;
  }
  result.accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
  result.probe.accuracy = result.accuracy;
  result.probe.test_count = static_cast<int>(test.size());
  return result;
}

double GepDetail::weighted_mean() const {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [phase, acc] : accuracy) {
    const double n = count.at(phase);
    num += n * acc;
    den += n;
  }
  return den > 0.0 ? num / den : 0.0;
}

GepDetail gep_detail(const GepResult& gep, const PhasePlan& plan, const DatasetManifest& manifest) {
  (void)manifest;
  if (plan.mode() == PartitionMode::sample_level) {
    throw Error(Errc::detail_undefined, "per-phase test subsets do not exist for sample-level plans");
  }
  GepDetail detail;
  for (const auto& part : plan.partitions) {
    std::size_t n = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gep.test_labels.size(); ++i) {
      if (std::binary_search(part.class_set.begin(), part.class_set.end(), gep.test_labels[i])) {
        ++n;
        hits += gep.correct[i] ? 1 : 0;
      }
    }
    detail.count[part.phase_index] = static_cast<int>(n);
    detail.accuracy[part.phase_index] = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  }
  return detail;
}

}  // namespace sscil
