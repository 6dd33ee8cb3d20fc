#include "sscil/train/exemplar_memory.hpp"

#include <algorithm>
#include <limits>
#include <nlohmann/json.hpp>

#include "sscil/common/error.hpp"

namespace sscil {

std::size_t ExemplarMemory::size() const {
  std::size_t n = 0;
  for (const auto& [cls, ids] : exemplars) n += ids.size();
  return n;
}

std::vector<std::string> ExemplarMemory::ids() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (const auto& [cls, ids] : exemplars) out.insert(out.end(), ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  return out;
}

void ExemplarMemory::validate() const {
  if (capacity < 0) throw Error(Errc::invalid_config, "memory capacity must be >= 0");
  if (size() > static_cast<std::size_t>(capacity)) {
    throw Error(Errc::capacity, "memory holds " + std::to_string(size()) + " exemplars, capacity is " +
                                    std::to_string(capacity));
  }
}

std::string ExemplarMemory::to_json() const {
  nlohmann::ordered_json j;
  j["capacity"] = capacity;
  auto& per_class = j["exemplars"] = nlohmann::ordered_json::object();
  for (const auto& [cls, ids] : exemplars) per_class[std::to_string(cls)] = ids;
  return j.dump();
}

ExemplarMemory ExemplarMemory::from_json(const std::string& text) {
  ExemplarMemory memory;
  try {
    const auto j = nlohmann::json::parse(text);
    memory.capacity = j.at("capacity").get<int>();
    for (const auto& [key, ids] : j.at("exemplars").items()) {
      memory.exemplars[std::stoi(key)] = ids.get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::integrity, std::string("exemplar memory: ") + e.what());
  }
  return memory;
}

std::vector<int> herding_select(const Eigen::MatrixXd& features, int m) {
  const auto n = static_cast<int>(features.rows());
  if (m < 0 || m > n) {
    throw Error(Errc::capacity, "cannot select " + std::to_string(m) + " exemplars from " + std::to_string(n));
  }
  std::vector<int> selected;
  if (m == 0) return selected;
  const Eigen::RowVectorXd mu = features.colwise().mean();
  Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(features.cols());
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (int k = 1; k <= m; ++k) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double dist = (mu - (running + features.row(i)) / k).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    taken[static_cast<std::size_t>(best)] = true;
    running += features.row(best);
    selected.push_back(best);
  }
  return selected;
}

std::vector<std::string> herding_select(const FeatureMatrix& features, int m) {
  features.validate();
  std::vector<std::string> out;
  for (int idx : herding_select(features.features, m)) out.push_back(features.sample_ids[static_cast<std::size_t>(idx)]);
  return out;
}

}  // namespace sscil
