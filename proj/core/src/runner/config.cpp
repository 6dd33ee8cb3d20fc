#include "sscil/runner/config.hpp"

#include <fstream>
#include <set>

#include "sscil/common/error.hpp"
#include "sscil/data/phase_plan.hpp"

namespace sscil {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::sscil: return "sscil";
    case Method::finetune: return "finetune";
    case Method::icarl: return "icarl";
    case Method::joint_ssl: return "joint-ssl";
    case Method::joint_supervised: return "joint-supervised";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::sscil, Method::finetune, Method::icarl, Method::joint_ssl, Method::joint_supervised}) {
    if (to_string(m) == name) return m;
  }
  throw Error(Errc::usage,
              "unknown method '" + std::string(name) + "' (sscil|finetune|icarl|joint-ssl|joint-supervised)");
}

bool is_joint(Method method) noexcept { return method == Method::joint_ssl || method == Method::joint_supervised; }

void RunConfig::validate() const {
  if (dataset.manifest.empty()) throw Error(Errc::invalid_config, "dataset.manifest is required");
  if (plan.file.empty()) {
    parse_scheme(plan.scheme);
    if (plan.num_phases < 2) throw Error(Errc::invalid_config, "plan.num_phases must be >= 2");
  }
  train.validate();
  augmentation.validate();
  validate_specs(encoder, projector);
  if (augmentation.output_size != encoder.input_size) {
    throw Error(Errc::invalid_config, "augmentation.output_size must equal encoder.input_size");
  }
  probe.validate();
  evaluation.histogram.validate();
  if (evaluation.histogram_samples < 2) throw Error(Errc::invalid_config, "evaluation.histogram_samples must be >= 2");
  if (output_dir.empty()) throw Error(Errc::invalid_config, "output_dir must not be empty");
  const auto id = resolved_run_id();
  if (id.find_first_of("/\\") != std::string::npos || id == "." || id == "..") {
    throw Error(Errc::invalid_config, "run_id must be a plain directory name");
  }
}

std::string RunConfig::resolved_run_id() const {
  if (!run_id.empty()) return run_id;
  std::string id = std::string(to_string(method)) + "-" + (plan.file.empty() ? plan.scheme : "planfile") + "-" +
                   std::to_string(plan.num_phases) + "p-s" + std::to_string(seed);
  if (!ablation_cell.empty()) id += "-" + ablation_cell;
  return id;
}

TrainConfig RunConfig::effective_train() const {
  TrainConfig out = train;
  out.seed = seed;
  return out;
}

ProbeConfig RunConfig::effective_probe() const {
  ProbeConfig out = probe;
  out.seed = seed;
  return out;
}

namespace {

using ojson = nlohmann::ordered_json;

// Reads known keys from one JSON object and rejects the rest.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(Errc::invalid_config, label() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::invalid_config, "bad value for '" + qualified(key) + "'");
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  [[nodiscard]] std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw Error(Errc::invalid_config, "unknown config key '" + qualified(key) + "'");
    }
  }

 private:
  [[nodiscard]] std::string label() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ojson view_to_json(const ViewParams& v) {
  return ojson{{"crop_scale_min", v.crop_scale_min}, {"crop_scale_max", v.crop_scale_max},
               {"crop_ratio_min", v.crop_ratio_min}, {"crop_ratio_max", v.crop_ratio_max},
               {"flip_p", v.flip_p},                 {"jitter_p", v.jitter_p},
               {"brightness", v.brightness},         {"contrast", v.contrast},
               {"saturation", v.saturation},         {"hue", v.hue},
               {"grayscale_p", v.grayscale_p},       {"blur_p", v.blur_p},
               {"blur_sigma_min", v.blur_sigma_min}, {"blur_sigma_max", v.blur_sigma_max},
               {"solarize_p", v.solarize_p},         {"solarize_threshold", v.solarize_threshold}};
}

void view_from_json(const nlohmann::json& j, const std::string& path, ViewParams& v) {
  Section s(j, path);
  s.get("crop_scale_min", v.crop_scale_min);
  s.get("crop_scale_max", v.crop_scale_max);
  s.get("crop_ratio_min", v.crop_ratio_min);
  s.get("crop_ratio_max", v.crop_ratio_max);
  s.get("flip_p", v.flip_p);
  s.get("jitter_p", v.jitter_p);
  s.get("brightness", v.brightness);
  s.get("contrast", v.contrast);
  s.get("saturation", v.saturation);
  s.get("hue", v.hue);
  s.get("grayscale_p", v.grayscale_p);
  s.get("blur_p", v.blur_p);
  s.get("blur_sigma_min", v.blur_sigma_min);
  s.get("blur_sigma_max", v.blur_sigma_max);
  s.get("solarize_p", v.solarize_p);
  s.get("solarize_threshold", v.solarize_threshold);
  s.finish();
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace

ojson to_json(const AugmentationConfig& aug) {
  ojson enabled = ojson::object();
  for (AugOp op : kAllAugOps) enabled[std::string(to_string(op))] = aug.is_enabled(op);
  return ojson{{"output_size", aug.output_size},
               {"enabled", enabled},
               {"views", ojson::array({view_to_json(aug.views[0]), view_to_json(aug.views[1])})}};
}

ojson to_json(const TrainConfig& t) {
  return ojson{{"batch_size", t.batch_size},
               {"learning_rate", t.learning_rate},
               {"epochs_per_phase", t.epochs_per_phase},
               {"optimizer", t.optimizer},
               {"momentum", t.momentum},
               {"weight_decay_ssl", t.weight_decay_ssl},
               {"weight_decay_supervised", t.weight_decay_supervised},
               {"schedule", t.schedule},
               {"temperature", t.temperature},
               {"workers", t.workers},
               {"deterministic", t.deterministic},
               {"memory_capacity", t.memory_capacity},
               {"ce_weight", t.ce_weight},
               {"distill_weight", t.distill_weight}};
}

ojson to_json(const RunConfig& cfg) {
  ojson j;
  j["run_id"] = cfg.resolved_run_id();
  j["seed"] = cfg.seed;
  j["method"] = std::string(to_string(cfg.method));
  j["dataset"] = ojson{{"manifest", cfg.dataset.manifest},
                       {"features", cfg.dataset.features},
                       {"grouping", cfg.dataset.grouping}};
  j["plan"] = ojson{{"scheme", cfg.plan.scheme}, {"num_phases", cfg.plan.num_phases}, {"file", cfg.plan.file}};
  j["train"] = to_json(cfg.train);
  j["augmentation"] = to_json(cfg.augmentation);
  j["encoder"] = ojson{{"architecture", cfg.encoder.architecture},
                       {"feature_dim", cfg.encoder.feature_dim},
                       {"input_size", cfg.encoder.input_size}};
  j["projector"] = ojson{{"depth", cfg.projector.depth}, {"width", cfg.projector.width}, {"inherit", cfg.inherit_projector}};
  j["probe"] = ojson{{"epochs", cfg.probe.epochs},
                     {"batch_size", cfg.probe.batch_size},
                     {"learning_rate", cfg.probe.learning_rate},
                     {"momentum", cfg.probe.momentum},
                     {"weight_decay", cfg.probe.weight_decay},
                     {"feature_batch", cfg.probe.feature_batch}};
  const auto& ev = cfg.evaluation;
  j["evaluation"] = ojson{{"defer", ev.defer},
                          {"histograms", ev.histograms},
                          {"histogram_bins", ev.histogram.bins},
                          {"histogram_metric", std::string(to_string(ev.histogram.metric))},
                          {"histogram_range_max", ev.histogram.range_max},
                          {"histogram_samples", ev.histogram_samples}};
  j["output_dir"] = cfg.output_dir;
  j["ablation_cell"] = cfg.ablation_cell;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  Section root(j, "");
  root.get("run_id", cfg.run_id);
  root.get("seed", cfg.seed);
  std::string method = std::string(to_string(cfg.method));
  root.get("method", method);
  try {
    cfg.method = parse_method(method);
  } catch (const Error& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  if (const auto* d = root.child("dataset")) {
    Section s(*d, "dataset");
    s.get("manifest", cfg.dataset.manifest);
    s.get("features", cfg.dataset.features);
    s.get("grouping", cfg.dataset.grouping);
    s.finish();
  }
  if (const auto* p = root.child("plan")) {
    Section s(*p, "plan");
    s.get("scheme", cfg.plan.scheme);
    s.get("num_phases", cfg.plan.num_phases);
    s.get("file", cfg.plan.file);
    s.finish();
  }
  if (const auto* t = root.child("train")) {
    Section s(*t, "train");
    auto& tc = cfg.train;
    s.get("batch_size", tc.batch_size);
    s.get("learning_rate", tc.learning_rate);
    s.get("epochs_per_phase", tc.epochs_per_phase);
    s.get("optimizer", tc.optimizer);
    s.get("momentum", tc.momentum);
    s.get("weight_decay_ssl", tc.weight_decay_ssl);
    s.get("weight_decay_supervised", tc.weight_decay_supervised);
    s.get("schedule", tc.schedule);
    s.get("temperature", tc.temperature);
    s.get("workers", tc.workers);
    s.get("deterministic", tc.deterministic);
    s.get("memory_capacity", tc.memory_capacity);
    s.get("ce_weight", tc.ce_weight);
    s.get("distill_weight", tc.distill_weight);
    s.finish();
  }
  if (const auto* a = root.child("augmentation")) {
    Section s(*a, "augmentation");
    int size = cfg.augmentation.output_size;
    s.get("output_size", size);
    cfg.augmentation = byol_augmentation(size);
    if (const auto* en = s.child("enabled")) {
      Section e(*en, "augmentation.enabled");
      for (AugOp op : kAllAugOps) {
        bool on = true;
        e.get(std::string(to_string(op)).c_str(), on);
        cfg.augmentation.set_enabled(op, on);
      }
      e.finish();
    }
    if (const auto* views = s.child("views")) {
      if (!views->is_array() || views->size() != 2) {
        throw Error(Errc::invalid_config, "augmentation.views must list exactly two views");
      }
      for (std::size_t v = 0; v < 2; ++v) {
        view_from_json((*views)[v], "augmentation.views[" + std::to_string(v) + "]", cfg.augmentation.views[v]);
      }
    }
    s.finish();
  }
  if (const auto* e = root.child("encoder")) {
    Section s(*e, "encoder");
    s.get("architecture", cfg.encoder.architecture);
    s.get("feature_dim", cfg.encoder.feature_dim);
    s.get("input_size", cfg.encoder.input_size);
    s.finish();
  }
  if (const auto* p = root.child("projector")) {
    Section s(*p, "projector");
    s.get("depth", cfg.projector.depth);
    s.get("width", cfg.projector.width);
    s.get("inherit", cfg.inherit_projector);
    s.finish();
  }
  if (const auto* p = root.child("probe")) {
    Section s(*p, "probe");
    s.get("epochs", cfg.probe.epochs);
    s.get("batch_size", cfg.probe.batch_size);
    s.get("learning_rate", cfg.probe.learning_rate);
    s.get("momentum", cfg.probe.momentum);
    s.get("weight_decay", cfg.probe.weight_decay);
    s.get("feature_batch", cfg.probe.feature_batch);
    s.finish();
  }
  if (const auto* ev = root.child("evaluation")) {
    Section s(*ev, "evaluation");
    s.get("defer", cfg.evaluation.defer);
    s.get("histograms", cfg.evaluation.histograms);
    s.get("histogram_bins", cfg.evaluation.histogram.bins);
    std::string metric = std::string(to_string(cfg.evaluation.histogram.metric));
    s.get("histogram_metric", metric);
    cfg.evaluation.histogram.metric = parse_distance_metric(metric);
    s.get("histogram_range_max", cfg.evaluation.histogram.range_max);
    s.get("histogram_samples", cfg.evaluation.histogram_samples);
    s.finish();
  }
  root.get("output_dir", cfg.output_dir);
  root.get("ablation_cell", cfg.ablation_cell);
  root.finish();

  cfg.dataset.manifest = resolve(cfg.dataset.manifest, base_dir);
  cfg.dataset.features = resolve(cfg.dataset.features, base_dir);
  cfg.dataset.grouping = resolve(cfg.dataset.grouping, base_dir);
  cfg.plan.file = resolve(cfg.plan.file, base_dir);
  cfg.output_dir = resolve(cfg.output_dir, base_dir);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, path.string() + ": " + e.what());
  }
  return run_config_from_json(j, std::filesystem::absolute(path).parent_path());
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace sscil
