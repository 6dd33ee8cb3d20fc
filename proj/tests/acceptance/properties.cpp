#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "acceptance.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sscil/augment/augmentation.hpp"
#include "sscil/augment/image_io.hpp"
#include "sscil/common/error.hpp"
#include "sscil/data/phase_plan.hpp"
#include "sscil/eval/histogram.hpp"
#include "sscil/eval/protocols.hpp"
#include "sscil/model/checkpoint.hpp"
#include "sscil/objectives/losses.hpp"
#include "sscil/runner/run_dir.hpp"
#include "sscil/runner/runner.hpp"
#include "sscil/train/exemplar_memory.hpp"
#include "sscil/train/trainers.hpp"

namespace sscil::acceptance {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

// Shared toy image set for the criteria that train or evaluate a model.
struct ToyWorld {
  fs::path manifest_path;
  DatasetManifest manifest;
};

const ToyWorld& toy_world(const Context& ctx) {
  static ToyWorld world = [&] {
    ToyWorld w;
    const auto dir = ctx.work / "toy";
    fs::remove_all(dir);
    w.manifest_path = toy::write_dataset(dir, toy::toy_classes(4, 6, 3, 16, 101));
    w.manifest = load_manifest(w.manifest_path);
    return w;
  }();
  return world;
}

Verdict nt_xent_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.index(7));
    const int d = 4 + static_cast<int>(rng.index(29));
    const double tau = rng.uniform(0.05, 1.0);
    const Eigen::MatrixXd z = toy::gaussian_matrix(2 * k, d, rng);
    worst = std::max(worst, oracle::relative_error(nt_xent_loss(z, tau).loss, oracle::nt_xent(z, tau)));
  }
  return {worst <= 1e-10, "max relative error " + fmt(worst) + " over 100 batches (tol 1e-10)"};
}

Verdict gradient_checks() {
  Rng rng(77);
  double worst_nt = 0, worst_ce = 0, worst_kd = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.index(3));
    const int d = 3 + static_cast<int>(rng.index(4));
    const double tau = rng.uniform(0.1, 1.0);
    const Eigen::MatrixXd z = toy::gaussian_matrix(2 * k, d, rng);
    const auto fd_nt = oracle::central_difference([&](const Eigen::MatrixXd& x) { return nt_xent_loss(x, tau).loss; }, z);
    worst_nt = std::max(worst_nt, oracle::relative_error(nt_xent_loss(z, tau).grad, fd_nt));

    const int n = 2 + static_cast<int>(rng.index(4));
    const int c = 2 + static_cast<int>(rng.index(4));
    const Eigen::MatrixXd logits = toy::gaussian_matrix(n, c, rng) * 2.0;
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& y : labels) y = static_cast<int>(rng.index(static_cast<std::uint64_t>(c)));
    const auto fd_ce = oracle::central_difference(
        [&](const Eigen::MatrixXd& x) { return cross_entropy_loss(x, labels).loss; }, logits);
    worst_ce = std::max(worst_ce, oracle::relative_error(cross_entropy_loss(logits, labels).grad, fd_ce));

    const int old = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(c)));
    Eigen::MatrixXd teacher(n, old);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < old; ++j) teacher(i, j) = rng.uniform();
    }
    const auto fd_kd = oracle::central_difference(
        [&](const Eigen::MatrixXd& x) { return distillation_loss(x, teacher).loss; }, logits);
    worst_kd = std::max(worst_kd, oracle::relative_error(distillation_loss(logits, teacher).grad, fd_kd));
  }
  const bool ok = worst_nt <= 1e-4 && worst_ce <= 1e-4 && worst_kd <= 1e-4;
  return {ok, "max relative error nt-xent " + fmt(worst_nt) + ", cross-entropy " + fmt(worst_ce) + ", distillation " +
                  fmt(worst_kd) + " (tol 1e-4, h 1e-5)"};
}

Verdict analytic_anchors() {
  Rng rng(5);
  double single = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    single = std::max(single, std::abs(nt_xent_loss(toy::gaussian_matrix(2, 6, rng), rng.uniform(0.05, 2)).loss));
  }
  double ln3 = 0.0;
  for (double tau : {0.05, 0.1, 0.5, 1.0}) {
    const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(4, 5, 0.42);
    ln3 = std::max(ln3, std::abs(nt_xent_loss(same, tau).loss - std::log(3.0)));
  }
  double lnc = 0.0;
  for (int c : {2, 5, 10, 100}) {
    const std::vector<int> labels = {0, c - 1, c / 2};
    lnc = std::max(lnc, std::abs(cross_entropy_loss(Eigen::MatrixXd::Constant(3, c, -0.7), labels).loss - std::log(c)));
  }
  const bool ok = single == 0.0 && ln3 <= 1e-12 && lnc <= 1e-12;
  return {ok, "K=1 max |loss| " + fmt(single) + ", |loss - ln 3| " + fmt(ln3) + ", |CE - ln C| " + fmt(lnc)};
}

// Independent checks, not validate_plan: every class exactly once, equal
// block sizes.
bool random_plan_sound(const PhasePlan& plan, const DatasetManifest& m, int n) {
  if (static_cast<int>(plan.partitions.size()) != n) return false;
  std::map<int, int> seen;
  const std::size_t block = plan.partitions.front().class_set.size();
  for (const auto& p : plan.partitions) {
    if (p.class_set.size() != block) return false;
    for (int c : p.class_set) ++seen[c];
  }
  const auto all = m.class_ids();
  if (seen.size() != all.size()) return false;
  return std::all_of(all.begin(), all.end(), [&](int c) { return seen.contains(c) && seen.at(c) == 1; });
}

bool cluster_plan_sound(const PhasePlan& plan, const DatasetManifest& m) {
  std::map<std::string, int> seen;
  for (const auto& p : plan.partitions) {
    for (const auto& id : p.sample_set) ++seen[id];
  }
  const auto train = m.split_samples(Split::train);
  if (seen.size() != train.size()) return false;
  return std::all_of(train.begin(), train.end(),
                     [&](const SampleRecord& s) { return seen.contains(s.sample_id) && seen.at(s.sample_id) == 1; });
}

bool reports(const PhasePlan& plan, const DatasetManifest& m, const std::string& kind) {
  const auto report = validate_plan(plan, m);
  return std::any_of(report.begin(), report.end(), [&](const PlanViolation& v) { return v.kind == kind; });
}

Verdict partition_invariants() {
  Rng rng(404);
  int random_ok = 0, cluster_ok = 0, injected_ok = 0, injected_total = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(9));
    const int per = 1 + static_cast<int>(rng.index(8));
    const auto m = toy::class_manifest(n * per, 2, 1);
    const auto seed = rng.next();
    const auto plan = split_random(m, n, seed);
    if (random_plan_sound(plan, m, n) && validate_plan(plan, m).empty()) ++random_ok;

    FeatureMatrix fm;
    const auto train = m.split_samples(Split::train);
    fm.features = toy::gaussian_matrix(static_cast<Eigen::Index>(train.size()), 3, rng);
    for (const auto& s : train) fm.sample_ids.push_back(s.sample_id);
    const auto cplan = split_cluster(m, fm, n, seed);
    if (cluster_plan_sound(cplan, m) && validate_plan(cplan, m).empty()) ++cluster_ok;

    // Injected violations.
    auto overlap = plan;
    overlap.partitions[1].class_set.push_back(overlap.partitions[0].class_set.front());
    auto missing = plan;
    missing.partitions.back().class_set.pop_back();
    auto order = plan;
    std::swap(order.partitions[0].phase_index, order.partitions[1].phase_index);
    auto csplit = cplan;
    auto& victim = *std::max_element(csplit.partitions.begin(), csplit.partitions.end(),
                                     [](const auto& a, const auto& b) { return a.sample_set.size() < b.sample_set.size(); });
    victim.sample_set.pop_back();
    auto cdup = cplan;
    cdup.partitions[1].sample_set.push_back(cplan.partitions[0].sample_set.empty() ? cplan.partitions[1].sample_set[0]
                                                                                   : cplan.partitions[0].sample_set[0]);
    injected_total += 5;
    injected_ok += reports(overlap, m, "overlap") + reports(missing, m, "coverage") + reports(order, m, "phase-order") +
                   reports(csplit, m, "coverage") + reports(cdup, m, "overlap");
  }
  const bool ok = random_ok == 200 && cluster_ok == 200 && injected_ok == injected_total;
  return {ok, "random " + std::to_string(random_ok) + "/200, cluster " + std::to_string(cluster_ok) +
                  "/200, injected violations caught " + std::to_string(injected_ok) + "/" +
                  std::to_string(injected_total)};
}

Verdict herding_equivalence() {
  Rng rng(55);
  int agree = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(10));
    const int m = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
    const Eigen::MatrixXd f = toy::gaussian_matrix(n, 1 + static_cast<int>(rng.index(6)), rng);
    agree += herding_select(f, m) == oracle::greedy_herding(f, m);
  }
  return {agree == 50, std::to_string(agree) + "/50 instances match the exhaustive greedy oracle"};
}

std::vector<nlohmann::json> phase_events(const RunPaths& paths) {
  std::vector<nlohmann::json> out;
  for (auto e : read_ledger(paths)) {
    if (e.value("event", "") != "phase-complete") continue;
    e.erase("timestamp");
    e.erase("wall_seconds");
    out.push_back(e);
  }
  return out;
}

std::vector<std::string> metric_values(const RunPaths& paths) {
  std::vector<std::string> out;
  for (const auto& r : read_metrics(paths.metrics())) {
    out.push_back(std::to_string(r.phase) + "," + r.metric + "," + r.value);
  }
  return out;
}

Verdict determinism(const Context& ctx) {
  const auto& world = toy_world(ctx);
  const auto root = ctx.work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::vector<std::string> failures;

  const auto plan = split_random(world.manifest, 2, 9);
  save_plan(plan, root / "a.json");
  save_plan(split_random(world.manifest, 2, 9), root / "b.json");
  if (toy::read_file(root / "a.json") != toy::read_file(root / "b.json")) failures.push_back("plan files");

  const auto cfg = byol_augmentation(16);
  ImageStore images(world.manifest.root);
  bool streams = true;
  for (const auto& s : world.manifest.samples) {
    const auto key = augmentation_stream_key(9, 1, 3, s.sample_id);
    const auto a = augment_pair(images.get(s.uri), cfg, key);
    const auto b = augment_pair(images.get(s.uri), cfg, key);
    streams &= a.view_i == b.view_i && a.view_j == b.view_j;
  }
  if (!streams) failures.push_back("augmentation streams");

  auto run_cfg = toy::tiny_run_config(world.manifest_path, root / "runs", 2);
  run_cfg.run_id = "once";
  const auto once = execute_run(run_cfg);
  run_cfg.run_id = "twice";
  const auto twice = execute_run(run_cfg);
  if (toy::read_file(once.paths.checkpoint(2) / "tensors.bin") !=
      toy::read_file(twice.paths.checkpoint(2) / "tensors.bin")) {
    failures.push_back("final checkpoints");
  }

  run_cfg.run_id = "resumed";
  RunOptions stop;
  stop.stop_after_phase = 1;
  execute_run(run_cfg, stop);
  const auto resumed = execute_run(run_cfg);
  const bool same = phase_events(resumed.paths) == phase_events(once.paths) &&
                    metric_values(resumed.paths) == metric_values(once.paths) &&
                    toy::read_file(resumed.paths.checkpoint(2) / "tensors.bin") ==
                        toy::read_file(once.paths.checkpoint(2) / "tensors.bin");
  if (!same) failures.push_back("resume after interrupt");

  std::string detail = "plan bytes, augmentation streams, single-worker checkpoints, resume";
  if (!failures.empty()) {
    detail = "differs:";
    for (const auto& f : failures) detail += " " + f;
  }
  return {failures.empty(), detail};
}

Verdict label_blindness(const Context& ctx) {
  const auto& world = toy_world(ctx);
  ImageStore images(world.manifest.root);
  const auto start = inherit_state(init_model(toy::micro_encoder(), toy::small_projector(), 3), true, 0);
  PhaseData data;
  data.samples = world.manifest.split_samples(Split::train);
  const auto cfg = toy::quick_train(2, 8, 13);
  const auto a = train_sscil_phase(start, data, cfg, byol_augmentation(16), images);
  Rng rng(17);
  const auto classes = world.manifest.class_ids();
  std::vector<int> perm = classes;
  rng.shuffle(std::span<int>(perm));
  std::map<int, int> relabel;
  for (std::size_t i = 0; i < classes.size(); ++i) relabel[classes[i]] = perm[i] + 1000;
  for (auto& s : data.samples) s.class_id = relabel.at(s.class_id);
  const auto b = train_sscil_phase(start, data, cfg, byol_augmentation(16), images);
  const bool ok = bitwise_equal(a.state, b.state) && a.loss_trace == b.loss_trace;
  return {ok, ok ? "final parameters bitwise equal under a label permutation" : "parameters differ"};
}

Verdict probe_isolation(const Context& ctx) {
  const auto& world = toy_world(ctx);
  ImageStore images(world.manifest.root);
  const auto state = init_model(toy::micro_encoder(), toy::small_projector(), 21);
  const auto before = state.clone();
  ProbeConfig probe;
  probe.epochs = 20;
  const auto plan = split_random(world.manifest, 2, 4);
  double worst = 0.0;
  (void)eval_lep(state, plan, world.manifest, 2, images, probe);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    probe.seed = seed;
    const auto gep = eval_gep(state, world.manifest, images, probe);
    worst = std::max(worst, std::abs(gep_detail(gep, plan, world.manifest).weighted_mean() - gep.accuracy));
  }
  (void)pairwise_distance_histogram(state, world.manifest.split_samples(Split::test), Stage::projector, images, {});
  (void)export_embeddings(state, world.manifest.samples, images, Stage::encoder, ctx.work / "isolation.bin");
  const bool untouched = bitwise_equal(before, state);
  return {untouched && worst <= 1e-12,
          std::string(untouched ? "state bitwise unchanged" : "state CHANGED") + ", |detail mean - GEP| " + fmt(worst) +
              " (tol 1e-12)"};
}

Verdict lep_refusal(const Context& ctx) {
  const auto& world = toy_world(ctx);
  ImageStore images(world.manifest.root);
  FeatureMatrix fm;
  const auto train = world.manifest.split_samples(Split::train);
  Rng rng(8);
  fm.features = toy::gaussian_matrix(static_cast<Eigen::Index>(train.size()), 2, rng);
  for (const auto& s : train) fm.sample_ids.push_back(s.sample_id);
  const auto plan = split_cluster(world.manifest, fm, 2, 1);
  const auto state = inherit_state(init_model(toy::micro_encoder(), toy::small_projector(), 1), true, 0);
  bool refused = false;
  try {
    (void)eval_lep(state, plan, world.manifest, 1, images, ProbeConfig{});
  } catch (const Error& e) {
    refused = e.code() == Errc::lep_undefined;
  }
  ProbeConfig probe;
  probe.epochs = 10;
  const auto record = evaluate_phase(state, plan, world.manifest, 1, images, probe);
  const bool gep_only = !record.lep.has_value() && record.gep_detail.empty() && record.gep >= 0.0 && record.gep <= 1.0;

  save_features(fm, ctx.work / "cluster-features.bin");
  auto cfg = toy::tiny_run_config(world.manifest_path, ctx.work / "lep-refusal", 2);
  cfg.run_id = "cluster";
  cfg.plan.scheme = "cluster";
  cfg.dataset.features = (ctx.work / "cluster-features.bin").string();
  fs::remove_all(ctx.work / "lep-refusal");
  const auto out = execute_run(cfg);
  int lep_undefined = 0, gep_rows = 0, other_lep = 0;
  for (const auto& r : read_metrics(out.paths.metrics())) {
    if (r.metric == "lep") (r.value == "undefined" ? lep_undefined : other_lep)++;
    gep_rows += r.metric == "gep";
  }
  const bool run_ok = lep_undefined == 2 && other_lep == 0 && gep_rows == 2;
  return {refused && gep_only && run_ok, std::string(refused ? "eval_lep refused" : "eval_lep DID NOT refuse") +
                                             ", record GEP-only " + (gep_only ? "yes" : "no") + ", run rows lep=undefined " +
                                             std::to_string(lep_undefined) + "/2, gep " + std::to_string(gep_rows) + "/2"};
}

}  // namespace

std::vector<Criterion> property_criteria(const Context& ctx) {
  return {
      {1, "nt-xent-oracle", nt_xent_oracle},
      {2, "gradient-checks", gradient_checks},
      {3, "analytic-anchors", analytic_anchors},
      {4, "partition-invariants", partition_invariants},
      {5, "herding-equivalence", herding_equivalence},
      {6, "determinism", [&ctx] { return determinism(ctx); }},
      {7, "label-blindness", [&ctx] { return label_blindness(ctx); }},
      {8, "probe-isolation", [&ctx] { return probe_isolation(ctx); }},
      {9, "lep-refusal", [&ctx] { return lep_refusal(ctx); }},
  };
}

}  // namespace sscil::acceptance
