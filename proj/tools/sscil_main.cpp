// sscil: command-line front end for plans, training runs, ablations,
// reports, embedding export and the synthetic benchmark.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

#include "sscil/common/error.hpp"
#include "sscil/eval/features.hpp"
#include "sscil/model/checkpoint.hpp"
#include "sscil/runner/report.hpp"
#include "sscil/runner/runner.hpp"
#include "sscil/runner/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sscil;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

RunConfig base_config(const Globals& g) {
  if (g.config.empty()) throw Error(Errc::usage, "--config is required");
  RunConfig cfg = load_run_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.deterministic) cfg.train.deterministic = true;
  return cfg;
}

void log_line(std::string_view line) { std::cerr << "[sscil] " << line << '\n'; }

int cmd_split(const Globals& g, const std::string& manifest_path, const std::string& scheme_name, int phases,
              const std::string& features, const std::string& grouping, const std::string& out) {
  const Scheme scheme = parse_scheme(scheme_name);
  if (scheme == Scheme::cluster && features.empty()) throw Error(Errc::usage, "--scheme cluster requires --features");
  auto manifest = load_manifest(manifest_path);
  if (!grouping.empty()) attach_grouping(manifest, grouping);
  const std::uint64_t seed = g.seed.value_or(0);
  PhasePlan plan;
  switch (scheme) {
    case Scheme::random: plan = split_random(manifest, phases, seed); break;
    case Scheme::semantic: plan = split_semantic(manifest, phases); break;
    case Scheme::cluster: plan = split_cluster(manifest, load_features(features), phases, seed); break;
  }
  const auto violations = validate_plan(plan, manifest);
  nlohmann::ordered_json report;
  report["valid"] = violations.empty();
  report["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : violations) {
    report["violations"].push_back({{"kind", v.kind}, {"message", v.message}, {"phases", v.phases}});
  }
  save_plan(plan, out);
  std::ofstream(out + ".validation.json") << report.dump(2) << '\n';
  std::cout << "wrote " << out << " (" << plan.num_phases << " phases, " << to_string(plan.mode()) << ")\n";
  if (!violations.empty()) {
    throw Error(Errc::invalid_config, violations.front().kind + ": " + violations.front().message);
  }
  return 0;
}

int run_one(RunConfig cfg, int stop_after) {
  RunOptions opts;
  opts.stop_after_phase = stop_after;
  opts.log = log_line;
  const auto outcome = execute_run(cfg, opts);
  std::cout << outcome.paths.root.string() << (outcome.finished ? " complete" : " stopped") << " after phase "
            << (outcome.completed.empty() ? 0 : outcome.completed.back()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised class-incremental learning harness"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config, "Run config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Run seed override");
  app.add_flag("--deterministic", g.deterministic, "Single-threaded, bitwise reproducible training");

  auto* split = app.add_subcommand("split", "Partition a manifest into incremental phases");
  std::string manifest, scheme, features, grouping, plan_out;
  int phases = 5;
  split->add_option("--manifest", manifest, "Dataset manifest")->required();
  split->add_option("--scheme", scheme, "random | semantic | cluster")->required();
  split->add_option("--phases", phases, "Number of phases");
  split->add_option("--features", features, "Feature file (cluster scheme)");
  split->add_option("--grouping", grouping, "class_id,group_label file (semantic scheme)");
  split->add_option("--out", plan_out, "Plan file to write")->required();

  auto* train = app.add_subcommand("train", "Run (or resume) the phase loop");
  std::string method, run_id, output_dir, plan_file;
  int epochs = 0;
  int stop_after = 0;
  int workers = 0;
  bool defer_eval = false;
  train->add_option("--method", method, "sscil | finetune | icarl | joint-ssl | joint-supervised");
  train->add_option("--run-id", run_id, "Run directory name");
  train->add_option("--output-dir", output_dir, "Parent of run directories");
  train->add_option("--plan", plan_file, "Precomputed plan file");
  train->add_option("--epochs", epochs, "Epochs per phase override");
  train->add_option("--workers", workers, "Augmentation workers");
  train->add_option("--stop-after-phase", stop_after, "Stop once this phase is complete");
  train->add_flag("--defer-eval", defer_eval, "Evaluate only after the final phase");

  auto* ablate = app.add_subcommand("ablate", "One run per ablation cell");
  std::vector<std::string> disable, projectors;
  bool no_inherit = false;
  ablate->add_option("--disable", disable, "Augmentation op(s) to remove")->delimiter(',');
  ablate->add_option("--projector", projectors, "none or <width>x<depth>")->delimiter(',');
  ablate->add_flag("--no-inherit", no_inherit, "Re-initialise the projector every phase");
  ablate->add_option("--output-dir", output_dir, "Parent of run directories");
  ablate->add_option("--epochs", epochs, "Epochs per phase override");
  ablate->add_flag("--defer-eval", defer_eval, "Evaluate only after the final phase");

  auto* report = app.add_subcommand("report", "Tables and charts from run directories");
  std::vector<std::string> runs;
  std::string runs_dir, report_out = "report";
  report->add_option("--runs", runs, "Run directories")->delimiter(',');
  report->add_option("--runs-dir", runs_dir, "Use every run directory below this one");
  report->add_option("--out", report_out, "Output directory");

  auto* exporter = app.add_subcommand("export", "Write representations as a feature file");
  std::string checkpoint, stage = "encoder", split_name = "train", export_out;
  exporter->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  exporter->add_option("--manifest", manifest, "Dataset manifest")->required();
  exporter->add_option("--stage", stage, "encoder | projector");
  exporter->add_option("--split", split_name, "train | test | all");
  exporter->add_option("--out", export_out, "Feature file to write")->required();

  auto* synth = app.add_subcommand("gen-synthetic", "Generate the synthetic shape benchmark");
  SyntheticSpec spec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--train-per-class", spec.train_per_class, "Training images per class");
  synth->add_option("--test-per-class", spec.test_per_class, "Test images per class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed_value;

  try {
    if (*split) return cmd_split(g, manifest, scheme, phases, features, grouping, plan_out);
    if (*train) {
      RunConfig cfg = base_config(g);
      if (!method.empty()) cfg.method = parse_method(method);
      if (!run_id.empty()) cfg.run_id = run_id;
      if (!output_dir.empty()) cfg.output_dir = fs::absolute(output_dir).string();
      if (!plan_file.empty()) cfg.plan.file = fs::absolute(plan_file).string();
      if (epochs > 0) cfg.train.epochs_per_phase = epochs;
      if (workers > 0) cfg.train.workers = workers;
      if (defer_eval) cfg.evaluation.defer = true;
      return run_one(cfg, stop_after);
    }
    if (*ablate) {
      RunConfig cfg = base_config(g);
      if (!output_dir.empty()) cfg.output_dir = fs::absolute(output_dir).string();
      if (epochs > 0) cfg.train.epochs_per_phase = epochs;
      if (defer_eval) cfg.evaluation.defer = true;
      for (auto& c : ablation_cells(cfg, disable, projectors, no_inherit)) {
        std::cerr << "[sscil] ablation cell " << c.tag << '\n';
        run_one(c.config, 0);
      }
      return 0;
    }
    if (*report) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      if (!runs_dir.empty()) {
        if (!fs::is_directory(runs_dir)) throw Error(Errc::usage, runs_dir + " is not a directory");
        for (const auto& entry : fs::directory_iterator(runs_dir)) {
          if (fs::exists(entry.path() / "config.json")) dirs.push_back(entry.path());
        }
      }
      for (const auto& p : write_report(dirs, report_out)) std::cout << p.string() << '\n';
      return 0;
    }
    if (*exporter) {
      const auto ck = load_checkpoint(checkpoint);
      const auto m = load_manifest(manifest);
      std::vector<SampleRecord> samples;
      if (split_name == "all") {
        samples = m.samples;
      } else if (split_name == "train" || split_name == "test") {
        samples = m.split_samples(split_name == "train" ? Split::train : Split::test);
      } else {
        throw Error(Errc::usage, "--split must be train, test or all");
      }
      ImageStore images(m.root);
      const auto f = export_embeddings(ck.state, samples, images, parse_stage(stage), export_out);
      std::cout << "wrote " << export_out << " (" << f.rows() << " x " << f.dim() << ")\n";
      return 0;
    }
    if (*synth) {
      spec.seed = g.seed.value_or(0);
      const auto m = generate_synthetic(spec, synth_out);
      std::cout << "wrote " << (fs::path(synth_out) / "manifest.csv").string() << " (" << m.samples.size()
                << " samples)\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "sscil: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "sscil: runtime failure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
