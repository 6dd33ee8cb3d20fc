#include "sscil/runner/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "sscil/common/error.hpp"
#include "sscil/runner/run_dir.hpp"

namespace sscil {

namespace fs = std::filesystem;

std::optional<double> RunSummary::final_lep() const {
  if (lep.empty()) return std::nullopt;
  return lep.rbegin()->second;
}

std::optional<double> RunSummary::final_gep() const {
  if (gep.empty()) return std::nullopt;
  return gep.rbegin()->second;
}

namespace {

int subset_of(const std::string& metric, const std::string& prefix) {
  return std::stoi(metric.substr(prefix.size()));
}

std::string cell(const std::optional<double>& v) { return v ? format_value(*v) : std::string("undefined"); }

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw Error(Errc::io, "cannot write " + path.string());
    out_ << header << '\n';
  }
  std::ofstream& row() { return out_; }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::ofstream out_;
};

constexpr const char* kPlotScript = R"(#!/usr/bin/env python3
"""Charts for an sscil report directory: python3 plot.py [report_dir]"""
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

root = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))


def rows(name):
    with open(os.path.join(root, name)) as f:
        return list(csv.DictReader(f))


def num(v):
    try:
        return float(v)
    except ValueError:
        return None


curves = defaultdict(list)
for r in rows("curves.csv"):
    curves[r["run_id"]].append((int(r["phase"]), num(r["lep"]), num(r["gep"])))

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for run, pts in sorted(curves.items()):
    pts.sort()
    phases = [p for p, _, _ in pts]
    for ax, idx in ((axes[0], 1), (axes[1], 2)):
        ys = [pt[idx] for pt in pts]
        if any(y is not None for y in ys):
            ax.plot(phases, [y if y is not None else float("nan") for y in ys], marker="o", label=run)
for ax, title in zip(axes, ("LEP", "GEP")):
    ax.set_xlabel("phase")
    ax.set_ylabel("top-1 accuracy")
    ax.set_title(title)
axes[0].legend(fontsize=6)
fig.tight_layout()
fig.savefig(os.path.join(root, "curves.png"), dpi=120)

ablation = rows("ablation.csv")
if ablation:
    fig, ax = plt.subplots(figsize=(8, 4))
    labels = [r["cell"] or "base" for r in ablation]
    ax.bar(range(len(ablation)), [num(r["final_lep"]) or 0.0 for r in ablation])
    ax.set_xticks(range(len(ablation)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("final LEP")
    fig.tight_layout()
    fig.savefig(os.path.join(root, "ablation.png"), dpi=120)

detail = defaultdict(lambda: defaultdict(dict))
for r in rows("gep_detail.csv"):
    detail[r["run_id"]][int(r["phase"])][int(r["subset"])] = float(r["accuracy"])
for run, by_phase in detail.items():
    fig, ax = plt.subplots(figsize=(8, 4))
    phases = sorted(by_phase)
    subsets = sorted({s for p in by_phase.values() for s in p})
    width = 0.8 / max(1, len(phases))
    for i, p in enumerate(phases):
        ax.bar([s + i * width for s in subsets], [by_phase[p].get(s, 0.0) for s in subsets], width, label=f"after phase {p}")
    ax.set_xlabel("sub-dataset")
    ax.set_ylabel("accuracy")
    ax.set_title(run)
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(os.path.join(root, f"gep_detail_{run}.png"), dpi=120)
)";

}  // namespace

RunSummary load_run_summary(const fs::path& run_dir) {
  RunSummary s;
  const RunPaths paths{run_dir};
  std::ifstream cfg_in(paths.config());
  if (!cfg_in) throw Error(Errc::io, "no config.json in " + run_dir.string());
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(cfg_in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::integrity, paths.config().string() + ": " + e.what());
  }
  s.run_id = cfg.value("run_id", run_dir.filename().string());
  s.method = cfg.value("method", "");
  s.ablation_cell = cfg.value("ablation_cell", "");
  s.seed = cfg.value("seed", 0ULL);
  if (cfg.contains("plan")) {
    s.scheme = cfg["plan"].value("scheme", "");
    s.num_phases = cfg["plan"].value("num_phases", 0);
  }
  for (const auto& e : read_ledger(paths)) s.complete |= e.value("event", "") == "run-complete";
  if (!fs::exists(paths.metrics())) return s;
  for (const auto& r : read_metrics(paths.metrics())) {
    const auto value = [&] { return std::stod(r.value); };
    if (r.metric == "lep") {
      s.lep[r.phase] = r.value == "undefined" ? std::nullopt : std::optional<double>(value());
    } else if (r.metric == "gep") {
      s.gep[r.phase] = value();
    } else if (r.metric.starts_with("gep_detail.p")) {
      s.gep_detail[r.phase][subset_of(r.metric, "gep_detail.p")] = value();
    } else if (r.metric.starts_with("gep_detail_count.p")) {
      s.gep_detail_count[r.phase][subset_of(r.metric, "gep_detail_count.p")] = static_cast<int>(value());
    } else if (r.metric.starts_with("hist_concentration.")) {
      s.concentration[r.phase][r.metric.substr(19)] = value();
    } else if (r.metric == "loss_final") {
      s.loss_final[r.phase] = value();
    }
  }
  return s;
}

std::vector<fs::path> write_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw Error(Errc::usage, "report needs at least one run directory");
  std::vector<RunSummary> runs;
  for (const auto& dir : run_dirs) runs.push_back(load_run_summary(dir));
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.run_id < b.run_id; });
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  {
    Csv csv(out_dir / "curves.csv", "run_id,method,cell,phase,lep,gep");
    for (const auto& r : runs) {
      for (const auto& [phase, gep] : r.gep) {
        const auto it = r.lep.find(phase);
        csv.row() << r.run_id << ',' << r.method << ',' << r.ablation_cell << ',' << phase << ','
                  << (it == r.lep.end() ? std::string("undefined") : cell(it->second)) << ',' << format_value(gep)
                  << '\n';
      }
    }
    written.push_back(csv.path());
  }

  {
    std::map<std::string, int> method_count;
    for (const auto& r : runs) ++method_count[r.method];
    std::string header = "phase";
    std::set<int> phases;
    for (const auto& r : runs) {
      const std::string label = method_count[r.method] == 1 ? r.method : r.run_id;
      header += "," + label + "_lep," + label + "_gep";
      for (const auto& [p, g] : r.gep) phases.insert(p);
    }
    Csv csv(out_dir / "comparison.csv", header);
    for (int p : phases) {
      csv.row() << p;
      for (const auto& r : runs) {
        const auto l = r.lep.find(p);
        const auto g = r.gep.find(p);
        csv.row() << ',' << (l == r.lep.end() ? std::string() : cell(l->second)) << ','
                  << (g == r.gep.end() ? std::string() : format_value(g->second));
      }
      csv.row() << '\n';
    }
    written.push_back(csv.path());
  }

  {
    Csv detail(out_dir / "gep_detail.csv", "run_id,phase,subset,accuracy,count");
    Csv summary(out_dir / "gep_detail_summary.csv", "run_id,phase,gep,weighted_mean,abs_diff");
    for (const auto& r : runs) {
      for (const auto& [phase, subsets] : r.gep_detail) {
        double num = 0.0;
        double den = 0.0;
        for (const auto& [subset, acc] : subsets) {
          const int n = r.gep_detail_count.at(phase).at(subset);
          detail.row() << r.run_id << ',' << phase << ',' << subset << ',' << format_value(acc) << ',' << n << '\n';
          num += n * acc;
          den += n;
        }
        const double mean = den > 0.0 ? num / den : 0.0;
        const double gep = r.gep.at(phase);
        summary.row() << r.run_id << ',' << phase << ',' << format_value(gep) << ',' << format_value(mean) << ','
                      << format_value(std::abs(mean - gep)) << '\n';
      }
    }
    written.push_back(detail.path());
    written.push_back(summary.path());
  }

  {
    Csv csv(out_dir / "ablation.csv", "run_id,method,cell,seed,final_lep,final_gep");
    for (const auto& r : runs) {
      if (r.method != "sscil") continue;
      csv.row() << r.run_id << ',' << r.method << ',' << r.ablation_cell << ',' << r.seed << ','
                << cell(r.final_lep()) << ',' << cell(r.final_gep()) << '\n';
    }
    written.push_back(csv.path());
  }

  {
    Csv csv(out_dir / "forgetting.csv", "run_id,method,num_phases,final_lep,joint_run,joint_lep,gap");
    auto find_joint = [&](const RunSummary& r) -> const RunSummary* {
      const std::string want = r.method == "sscil" ? "joint-ssl" : "joint-supervised";
      const RunSummary* fallback = nullptr;
      for (const auto& j : runs) {
        if (j.method != want || !j.final_lep()) continue;
        if (j.seed == r.seed) return &j;
        if (fallback == nullptr) fallback = &j;
      }
      return fallback;
    };
    for (const auto& r : runs) {
      if (r.method == "joint-ssl" || r.method == "joint-supervised") continue;
      const auto final_lep = r.final_lep();
      const RunSummary* j = find_joint(r);
      if (!final_lep || j == nullptr) continue;
      const double joint_lep = *j->final_lep();
      csv.row() << r.run_id << ',' << r.method << ',' << r.num_phases << ',' << format_value(*final_lep) << ','
                << j->run_id << ',' << format_value(joint_lep) << ',' << format_value(joint_lep - *final_lep) << '\n';
    }
    written.push_back(csv.path());
  }

  {
    Csv csv(out_dir / "histograms.csv", "run_id,phase,stage,concentration");
    for (const auto& r : runs) {
      for (const auto& [phase, stages] : r.concentration) {
        for (const auto& [stage, share] : stages) {
          csv.row() << r.run_id << ',' << phase << ',' << stage << ',' << format_value(share) << '\n';
        }
      }
    }
    written.push_back(csv.path());
  }

  {
    const auto path = out_dir / "plot.py";
    std::ofstream out(path);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out << kPlotScript;
    written.push_back(path);
  }
  return written;
}

}  // namespace sscil
