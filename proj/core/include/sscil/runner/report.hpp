#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sscil {

// Per-phase metrics of one run directory, read without modifying it.
struct RunSummary {
  std::string run_id;
  std::string method;
  std::string ablation_cell;
  std::string scheme;
  unsigned long long seed = 0;
  int num_phases = 0;
  bool complete = false;
  std::map<int, std::optional<double>> lep;  // nullopt = undefined
  std::map<int, double> gep;
  std::map<int, std::map<int, double>> gep_detail;      // phase -> subset -> accuracy
  std::map<int, std::map<int, int>> gep_detail_count;   // phase -> subset -> size
  std::map<int, std::map<std::string, double>> concentration;  // phase -> stage -> share
  std::map<int, double> loss_final;

  [[nodiscard]] std::optional<double> final_lep() const;
  [[nodiscard]] std::optional<double> final_gep() const;
};

RunSummary load_run_summary(const std::filesystem::path& run_dir);

// Writes curves.csv, comparison.csv, gep_detail.csv, gep_detail_summary.csv,
// ablation.csv, forgetting.csv, histograms.csv and plot.py into `out_dir`.
// Errors: usage when `run_dirs` is empty.
std::vector<std::filesystem::path> write_report(const std::vector<std::filesystem::path>& run_dirs,
                                                const std::filesystem::path& out_dir);

}  // namespace sscil
