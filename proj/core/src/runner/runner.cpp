#include "sscil/runner/runner.hpp"

#include <fstream>
#include <sstream>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"
#include "sscil/common/text.hpp"
#include "sscil/eval/histogram.hpp"
#include "sscil/model/checkpoint.hpp"

namespace sscil {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using text::parse_int;

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974ULL;
constexpr std::uint64_t kProjTag = 0x70726f6aULL;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << text;
}

void note(const RunOptions& opts, const std::string& line) {
  if (opts.log) opts.log(line);
}

std::vector<SampleRecord> histogram_population(const PhasePlan& plan, const DatasetManifest& manifest, int limit) {
  std::vector<SampleRecord> pop = plan.mode() == PartitionMode::class_level
                                      ? manifest.samples_of_classes(plan.phase(1).class_set, Split::test)
                                      : manifest.split_samples(Split::test);
  if (static_cast<int>(pop.size()) > limit) pop.resize(static_cast<std::size_t>(limit));
  return pop;
}

std::vector<MetricRow> metric_rows(const std::string& run_id, int phase, const MetricsRecord& m) {
  const auto ts = utc_timestamp();
  std::vector<MetricRow> rows;
  rows.push_back({run_id, phase, "lep", m.lep ? format_value(*m.lep) : "undefined", ts});
  rows.push_back({run_id, phase, "gep", format_value(m.gep), ts});
  for (const auto& [p, acc] : m.gep_detail) {
    rows.push_back({run_id, phase, "gep_detail.p" + std::to_string(p), format_value(acc), ts});
    rows.push_back({run_id, phase, "gep_detail_count.p" + std::to_string(p), std::to_string(m.gep_detail_count.at(p)), ts});
  }
  return rows;
}

ojson metrics_json(const MetricsRecord& m) {
  ojson j;
  j["lep"] = m.lep ? ojson(*m.lep) : ojson("undefined");
  j["gep"] = m.gep;
  ojson detail = ojson::object();
  for (const auto& [p, acc] : m.gep_detail) detail[std::to_string(p)] = acc;
  j["gep_detail"] = detail;
  return j;
}

}  // namespace

DatasetManifest load_run_manifest(const RunConfig& cfg) {
  auto manifest = load_manifest(cfg.dataset.manifest);
  if (!cfg.dataset.grouping.empty()) attach_grouping(manifest, cfg.dataset.grouping);
  return manifest;
}

PhasePlan build_plan(const RunConfig& cfg, const DatasetManifest& manifest) {
  PhasePlan plan;
  if (!cfg.plan.file.empty()) {
    plan = load_plan(cfg.plan.file);
  } else {
    switch (parse_scheme(cfg.plan.scheme)) {
      case Scheme::random: plan = split_random(manifest, cfg.plan.num_phases, cfg.seed); break;
      case Scheme::semantic: plan = split_semantic(manifest, cfg.plan.num_phases); break;
      case Scheme::cluster:
        if (cfg.dataset.features.empty()) throw Error(Errc::usage, "the cluster scheme needs dataset.features");
        plan = split_cluster(manifest, load_features(cfg.dataset.features), cfg.plan.num_phases, cfg.seed);
        break;
    }
  }
  const auto violations = validate_plan(plan, manifest);
  if (!violations.empty()) {
    throw Error(Errc::invalid_config, "plan is invalid: " + violations.front().kind + ": " + violations.front().message);
  }
  return plan;
}

MetricsRecord evaluate_phase(const ModelState& state, const PhasePlan& plan, const DatasetManifest& manifest,
                             int lep_phase, ImageStore& images, const ProbeConfig& probe) {
  MetricsRecord m;
  m.phase_index = state.phase_index;
  if (plan.mode() == PartitionMode::class_level) m.lep = eval_lep(state, plan, manifest, lep_phase, images, probe);
  const auto gep = eval_gep(state, manifest, images, probe);
  m.gep = gep.accuracy;
  if (plan.mode() == PartitionMode::class_level) {
    const auto detail = gep_detail(gep, plan, manifest);
    m.gep_detail = detail.accuracy;
    m.gep_detail_count = detail.count;
  }
  return m;
}

RunOutcome execute_run(const RunConfig& cfg_in, const RunOptions& opts) {
  cfg_in.validate();
  RunConfig cfg = cfg_in;
  cfg.run_id = cfg.resolved_run_id();
  RunOutcome outcome;
  outcome.run_id = cfg.run_id;
  outcome.paths = RunPaths{fs::path(cfg.output_dir) / cfg.run_id};
  const RunPaths& paths = outcome.paths;
  fs::create_directories(paths.root / "checkpoints");
  fs::create_directories(paths.logs());
  fs::create_directories(paths.histograms());
  RunLock lock(paths.lock());

  const std::string snapshot = to_json(cfg).dump(2) + "\n";
  if (fs::exists(paths.config())) {
    if (ojson::parse(read_file(paths.config())) != ojson::parse(snapshot)) {
      throw Error(Errc::invalid_config, "run directory " + paths.root.string() + " holds a different configuration");
    }
  } else {
    write_file(paths.config(), snapshot);
  }

  const auto manifest = load_run_manifest(cfg);
  const auto plan = build_plan(cfg, manifest);
  const std::string plan_text = serialize_plan(plan);
  if (fs::exists(paths.plan())) {
    if (read_file(paths.plan()) != plan_text) {
      throw Error(Errc::integrity, "stored plan differs from the plan derived from the config");
    }
  } else {
    write_file(paths.plan(), plan_text);
  }

  const TrainConfig tc = cfg.effective_train();
  const ProbeConfig pc = cfg.effective_probe();
  const bool joint = is_joint(cfg.method);
  const int total = joint ? 1 : plan.num_phases;

  const auto ledger = read_ledger(paths);
  const auto done = completed_phases(ledger);
  for (std::size_t i = 0; i < done.size(); ++i) {
    if (done[i] != static_cast<int>(i) + 1) throw Error(Errc::integrity, "ledger lists phases out of order");
  }
  const int resume_from = static_cast<int>(done.size());
  outcome.completed = done;
  truncate_metrics(paths, resume_from);

  if (ledger.empty()) {
    append_ledger(paths, ojson{{"event", "run-start"},
                               {"run_id", cfg.run_id},
                               {"method", std::string(to_string(cfg.method))},
                               {"ablation_cell", cfg.ablation_cell},
                               {"total_phases", total},
                               {"config", ojson::parse(snapshot)}});
  } else if (resume_from < total) {
    append_ledger(paths, ojson{{"event", "run-resume"}, {"from_phase", resume_from + 1}});
  }

  ModelState state;
  ClassifierHead head;
  ExemplarMemory memory;
  memory.capacity = tc.memory_capacity;
  if (resume_from > 0) {
    auto ck = load_checkpoint(paths.checkpoint(resume_from));
    state = std::move(ck.state);
    if (const auto it = ck.extra_tensors.find("head"); it != ck.extra_tensors.end()) {
      head = ClassifierHead::from_tensors(it->second);
    }
    const auto extras = nlohmann::json::parse(ck.extras_json);
    if (extras.contains("memory")) memory = ExemplarMemory::from_json(extras.at("memory").dump());
    note(opts, "resuming " + cfg.run_id + " after phase " + std::to_string(resume_from));
  } else {
    state = init_model(cfg.encoder, cfg.projector, mix(cfg.seed, kInitTag));
  }

  ImageStore images(manifest.root);
  std::unordered_set<std::string> retired;
  for (int t = 1; t <= resume_from && !joint; ++t) {
    for (const auto& s : phase_train_samples(plan, manifest, t)) retired.insert(s.sample_id);
  }

  for (int t = resume_from + 1; t <= total; ++t) {
    PhaseResult result;
    const bool supervised = cfg.method == Method::finetune || cfg.method == Method::icarl ||
                            cfg.method == Method::joint_supervised;
    if (joint) {
      const auto all = manifest.split_samples(Split::train);
      result = cfg.method == Method::joint_ssl
                   ? train_joint(state, all, tc, cfg.augmentation, JointMode::self_supervised, images)
                   : train_joint(state, all, tc, cfg.augmentation, JointMode::supervised, images, &head);
    } else {
      PhaseData data;
      data.phase_index = t;
      data.samples = phase_train_samples(plan, manifest, t);
      data.retired = retired;
      const ModelState next = inherit_state(state, cfg.inherit_projector, mix(cfg.seed, kProjTag, t));
      switch (cfg.method) {
        case Method::sscil: result = train_sscil_phase(next, data, tc, cfg.augmentation, images); break;
        case Method::finetune: result = train_finetune_phase(next, head, data, tc, cfg.augmentation, images); break;
        case Method::icarl: {
          auto out = train_icarl_phase(next, head, data, memory, manifest, tc, cfg.augmentation, images);
          result = std::move(out.result);
          memory = std::move(out.memory);
          break;
        }
        default: break;
      }
      for (const auto& s : data.samples) retired.insert(s.sample_id);
    }
    state = result.state;

    Checkpoint ck;
    ck.state = state;
    if (supervised) ck.extra_tensors["head"] = head.tensors();
    ojson extras = ojson::object();
    if (cfg.method == Method::icarl) extras["memory"] = ojson::parse(memory.to_json());
    ck.extras_json = extras.dump();
    save_checkpoint(ck, paths.checkpoint(t));

    {
      std::ofstream log(paths.logs() / "train.jsonl", std::ios::app);
      for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
        log << ojson{{"phase", t}, {"epoch", e + 1}, {"loss", result.loss_trace[e]}}.dump() << '\n';
      }
    }

    std::vector<MetricRow> rows;
    rows.push_back({cfg.run_id, t, "loss_final", format_value(result.loss_trace.back()), utc_timestamp()});
    ojson phase_event{{"event", "phase-complete"},
                      {"phase", t},
                      {"loss_trace", result.loss_trace},
                      {"wall_seconds", result.wall_seconds},
                      {"served_samples", result.served_ids.size()},
                      {"checkpoint", fs::relative(paths.checkpoint(t), paths.root).string()}};
    if (cfg.method == Method::icarl) phase_event["memory_size"] = memory.size();
    if (cfg.method == Method::sscil || cfg.method == Method::joint_ssl) {
      // K source images per batch, 2K views through the loss.
      phase_event["batch_images"] = cfg.train.batch_size;
      phase_event["batch_views"] = 2 * cfg.train.batch_size;
    }
    std::string summary = cfg.run_id + " phase " + std::to_string(t) + "/" + std::to_string(total) +
                          " loss " + format_value(result.loss_trace.back());

    if (!cfg.evaluation.defer || t == total) {
      const auto m = evaluate_phase(state, plan, manifest, joint ? plan.num_phases : t, images, pc);
      for (auto& r : metric_rows(cfg.run_id, t, m)) rows.push_back(std::move(r));
      phase_event["metrics"] = metrics_json(m);
      summary += " lep " + (m.lep ? format_value(*m.lep) : std::string("undefined")) + " gep " + format_value(m.gep);

      if (cfg.evaluation.histograms) {
        const auto pop = histogram_population(plan, manifest, cfg.evaluation.histogram_samples);
        ojson hist{{"phase", t}, {"population", pop.size()}};
        for (Stage stage : {Stage::encoder, Stage::projector}) {
          const auto h = pairwise_distance_histogram(state, pop, stage, images, cfg.evaluation.histogram);
          hist[std::string(to_string(stage))] = ojson::parse(h.to_json());
          rows.push_back({cfg.run_id, t, "hist_concentration." + std::string(to_string(stage)),
                          format_value(h.concentration()), utc_timestamp()});
        }
        write_file(paths.histograms() / ("phase_" + std::to_string(t) + ".json"), hist.dump(2) + "\n");
      }
    }
    append_metrics(paths, rows);
    append_ledger(paths, phase_event);
    outcome.completed.push_back(t);
    note(opts, summary + " (" + format_value(result.wall_seconds) + " s)");

    if (opts.stop_after_phase == t && t < total) {
      append_ledger(paths, ojson{{"event", "run-interrupted"}, {"after_phase", t}});
      return outcome;
    }
  }

  bool complete_logged = false;
  for (const auto& e : read_ledger(paths)) complete_logged |= e.value("event", "") == "run-complete";
  if (!complete_logged) append_ledger(paths, ojson{{"event", "run-complete"}, {"phases", total}});
  outcome.finished = true;
  return outcome;
}

ProjectorSpec parse_projector(std::string_view descriptor) {
  if (descriptor == "none") return ProjectorSpec{0, 0};
  const auto x = descriptor.find('x');
  long long width = 0;
  long long depth = 0;
  if (x == std::string_view::npos || !parse_int(descriptor.substr(0, x), width) ||
      !parse_int(descriptor.substr(x + 1), depth) || width < 1 || depth < 1) {
    throw Error(Errc::usage, "projector descriptor '" + std::string(descriptor) + "' is not 'none' or '<width>x<depth>'");
  }
  return ProjectorSpec{static_cast<int>(depth), static_cast<int>(width)};
}

std::vector<AblationCell> ablation_cells(const RunConfig& base, const std::vector<std::string>& disable,
                                         const std::vector<std::string>& projectors, bool no_inherit) {
  std::vector<AblationCell> cells;
  auto add = [&](std::string tag, RunConfig cfg) {
    cfg.ablation_cell = tag;
    if (!base.run_id.empty()) cfg.run_id = base.run_id + "-" + tag;
    cells.push_back({std::move(tag), std::move(cfg)});
  };
  for (const auto& name : disable) {
    const AugOp op = parse_aug_op(name);
    RunConfig cfg = base;
    cfg.augmentation.set_enabled(op, false);
    add("no-" + std::string(to_string(op)), std::move(cfg));
  }
  for (const auto& desc : projectors) {
    RunConfig cfg = base;
    cfg.projector = parse_projector(desc);
    add("proj-" + desc, std::move(cfg));
  }
  if (no_inherit) {
    RunConfig cfg = base;
    cfg.inherit_projector = false;
    add("no-inherit", std::move(cfg));
  }
  if (cells.empty()) throw Error(Errc::usage, "no ablation cell given (--disable, --projector or --no-inherit)");
  return cells;
}

}  // namespace sscil
