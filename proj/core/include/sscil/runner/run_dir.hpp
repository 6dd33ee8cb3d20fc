#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace sscil {

// runs/<run_id>/
//   config.json  plan.json  metrics.csv  ledger.jsonl  .lock
//   checkpoints/phase_<t>/  logs/train.jsonl  histograms/phase_<t>.json
struct RunPaths {
  std::filesystem::path root;

  [[nodiscard]] std::filesystem::path config() const { return root / "config.json"; }
  [[nodiscard]] std::filesystem::path plan() const { return root / "plan.json"; }
  [[nodiscard]] std::filesystem::path metrics() const { return root / "metrics.csv"; }
  [[nodiscard]] std::filesystem::path ledger() const { return root / "ledger.jsonl"; }
  [[nodiscard]] std::filesystem::path lock() const { return root / ".lock"; }
  [[nodiscard]] std::filesystem::path logs() const { return root / "logs"; }
  [[nodiscard]] std::filesystem::path histograms() const { return root / "histograms"; }
  [[nodiscard]] std::filesystem::path checkpoint(int phase) const {
    return root / "checkpoints" / ("phase_" + std::to_string(phase));
  }
};

// Exclusive ownership of a run directory. A lock left behind by a process
// that no longer exists is taken over. Errors: locked.
class RunLock {
 public:
  explicit RunLock(std::filesystem::path path);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

std::string utc_timestamp();

// Append-only JSON-lines ledger.
void append_ledger(const RunPaths& paths, nlohmann::ordered_json event);
std::vector<nlohmann::json> read_ledger(const RunPaths& paths);
// Phases with a phase-complete event, in order.
std::vector<int> completed_phases(const std::vector<nlohmann::json>& ledger);

struct MetricRow {
  std::string run_id;
  int phase = 0;
  std::string metric;
  std::string value;
  std::string timestamp;
};

// metrics.csv: run_id,phase,metric,value,timestamp
void append_metrics(const RunPaths& paths, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics(const std::filesystem::path& path);
// Drops rows of phases above `last_phase` (left by an interrupted phase).
void truncate_metrics(const RunPaths& paths, int last_phase);

std::string format_value(double v);

}  // namespace sscil
