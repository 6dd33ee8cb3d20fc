#include "sscil/train/trainers.hpp"

#include <torch/torch.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"
#include "sscil/objectives/torch_bridge.hpp"
#include "sscil/train/loader.hpp"

namespace sscil {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::invalid_config, msg); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (epochs_per_phase < 1) fail("epochs_per_phase must be >= 1");
  if (optimizer != "sgd") fail("unknown optimizer '" + optimizer + "'");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (weight_decay_ssl < 0.0 || weight_decay_supervised < 0.0) fail("weight decay must be >= 0");
  if (schedule != "cosine" && schedule != "constant") fail("unknown schedule '" + schedule + "'");
  if (!(temperature > 0.0)) throw Error(Errc::invalid_temperature, "temperature must be > 0");
  if (workers < 1) fail("workers must be >= 1");
  if (memory_capacity < 0) fail("memory_capacity must be >= 0");
  if (ce_weight < 0.0 || distill_weight < 0.0) fail("loss weights must be >= 0");
}

double scheduled_lr(const TrainConfig& cfg, long step, long total) {
  if (cfg.schedule == "constant" || total <= 0) return cfg.learning_rate;
  const double progress = static_cast<double>(step) / static_cast<double>(total);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AugmentationConfig supervised_augmentation(const AugmentationConfig& base) {
  AugmentationConfig out = base;
  for (AugOp op : kAllAugOps) out.set_enabled(op, op == AugOp::crop || op == AugOp::flip ? base.is_enabled(op) : false);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kOrderTag = 0x6f72646572ULL;
constexpr std::uint64_t kHeadTag = 0x68656164ULL;

void check_phase(const ModelState& state, const PhaseData& data, const TrainConfig& cfg, const AugmentationConfig& aug) {
  cfg.validate();
  aug.validate();
  if (data.samples.empty()) throw Error(Errc::empty_phase, "phase " + std::to_string(data.phase_index) + " has no samples");
  if (state.phase_index != data.phase_index) {
    throw Error(Errc::invalid_config, "state belongs to phase " + std::to_string(state.phase_index) +
                                          ", data to phase " + std::to_string(data.phase_index));
  }
  if (aug.output_size != state.encoder_spec.input_size) {
    throw Error(Errc::invalid_config, "augmentation output size differs from the encoder input size");
  }
  for (const auto& s : data.samples) {
    if (data.retired.contains(s.sample_id)) {
      throw Error(Errc::leakage, "sample '" + s.sample_id + "' belongs to an earlier phase");
    }
  }
  if (cfg.deterministic) at::set_num_threads(1);
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int phase, int epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix(seed, kOrderTag, static_cast<std::uint64_t>(phase), static_cast<std::uint64_t>(epoch)));
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

// [begin, end) ranges; a trailing remainder of one sample is dropped since
// batch norm cannot train on it.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch) {
    const std::size_t e = std::min(n, b + batch);
    if (e - b >= 2 || out.empty()) out.emplace_back(b, e);
  }
  return out;
}

template <typename F>
void parallel_for(int workers, std::size_t n, F&& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += w) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

class SgdLoop {
 public:
  SgdLoop(std::vector<torch::Tensor> params, const TrainConfig& cfg, double weight_decay, long total_steps)
      : cfg_(cfg),
        total_(total_steps),
        opt_(std::move(params),
             torch::optim::SGDOptions(cfg.learning_rate).momentum(cfg.momentum).weight_decay(weight_decay)) {}

  void step(const torch::Tensor& loss) {
    const double lr = scheduled_lr(cfg_, step_, total_);
    for (auto& group : opt_.param_groups()) static_cast<torch::optim::SGDOptions&>(group.options()).lr(lr);
    opt_.zero_grad();
    loss.backward();
    opt_.step();
    ++step_;
  }

 private:
  const TrainConfig& cfg_;
  long total_;
  long step_ = 0;
  torch::optim::SGD opt_;
};

long count_steps(std::size_t n, const TrainConfig& cfg) {
  return static_cast<long>(batch_ranges(n, static_cast<std::size_t>(cfg.batch_size)).size()) * cfg.epochs_per_phase;
}

std::vector<int> new_classes_of(const std::vector<SampleRecord>& samples, const ClassifierHead& head) {
  std::vector<int> out;
  for (const auto& s : samples) {
    if (std::find(head.classes.begin(), head.classes.end(), s.class_id) == head.classes.end()) out.push_back(s.class_id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PhaseResult finish(Network& net, int phase, std::vector<double> trace, Clock::time_point start, const TrainConfig& cfg,
                   const AuditingLoader& loader) {
  PhaseResult result;
  net.train(false);
  result.state = net.export_state(phase);
  result.loss_trace = std::move(trace);
  result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  result.config = cfg;
  const auto served = loader.served();
  result.served_ids.assign(served.begin(), served.end());
  return result;
}

// Supervised loop shared by fine-tuning and iCaRL. `teacher` is null when
// there are no old classes to distil.
PhaseResult supervised_loop(const ModelState& state, ClassifierHead& head, const std::vector<SampleRecord>& samples,
                            AuditingLoader& loader, int phase, const TrainConfig& cfg, const AugmentationConfig& aug,
                            Network* teacher, const ClassifierHead* teacher_head) {
  const auto start = Clock::now();
  const AugmentationConfig sup_aug = supervised_augmentation(aug);
  Network net(state);
  net.train(true);
  head.weight = head.weight.detach().clone().set_requires_grad(true);
  head.bias = head.bias.detach().clone().set_requires_grad(true);
  auto params = net.encoder_parameters();
  params.push_back(head.weight);
  params.push_back(head.bias);
  SgdLoop sgd(params, cfg, cfg.weight_decay_supervised, count_steps(samples.size(), cfg));

  std::vector<double> trace;
  for (int epoch = 0; epoch < cfg.epochs_per_phase; ++epoch) {
    const auto order = epoch_order(cfg.seed, phase, epoch, samples.size());
    double sum = 0.0;
    int steps = 0;
    for (const auto& [b, e] : batch_ranges(samples.size(), static_cast<std::size_t>(cfg.batch_size))) {
      const std::size_t k = e - b;
      std::vector<Image> views(k);
      std::vector<int> labels(k);
      parallel_for(cfg.workers, k, [&](std::size_t i) {
        const SampleRecord& s = samples[order[b + i]];
        const auto key = augmentation_stream_key(cfg.seed, phase, epoch, s.sample_id);
        views[i] = augment_view(loader.fetch(s), sup_aug, 0, mix(key, 0));
      });
      for (std::size_t i = 0; i < k; ++i) labels[i] = head.column_of(samples[order[b + i]].class_id);
      const auto x = images_to_tensor(views);
      const auto logits = torch::addmm(head.bias, net.encode(x), head.weight.t());
      auto loss = cross_entropy(logits, labels) * cfg.ce_weight;
      if (teacher != nullptr && teacher_head != nullptr && teacher_head->size() > 0 && cfg.distill_weight > 0.0) {
        torch::Tensor probs;
        {
          torch::NoGradGuard guard;
          probs = torch::sigmoid(torch::addmm(teacher_head->bias, teacher->encode(x), teacher_head->weight.t()));
        }
        loss = loss + distillation(logits, probs) * cfg.distill_weight;
      }
      sgd.step(loss);
      sum += loss.item<double>();
      ++steps;
    }
    trace.push_back(sum / steps);
  }
  head.weight = head.weight.detach().clone();
  head.bias = head.bias.detach().clone();
  return finish(net, phase, std::move(trace), start, cfg, loader);
}

Eigen::MatrixXd normalized_features(Network& net, AuditingLoader& loader, const std::vector<SampleRecord>& samples,
                                    int batch) {
  torch::NoGradGuard guard;
  net.train(false);
  const int side = net.encoder_spec().input_size;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(samples.size()), net.encoder_spec().feature_dim);
  for (std::size_t b = 0; b < samples.size(); b += static_cast<std::size_t>(batch)) {
    const std::size_t e = std::min(samples.size(), b + static_cast<std::size_t>(batch));
    const auto h = to_matrix(net.encode(plain_batch(loader, std::span(samples).subspan(b, e - b), side)));
    out.middleRows(static_cast<Eigen::Index>(b), h.rows()) = h;
  }
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).norm();
    if (norm > 0.0) out.row(r) /= norm;
  }
  return out;
}

}  // namespace

PhaseResult train_sscil_phase(const ModelState& state, const PhaseData& data, const TrainConfig& cfg,
                              const AugmentationConfig& aug, ImageStore& images) {
  check_phase(state, data, cfg, aug);
  const auto start = Clock::now();
  const auto& samples = data.samples;
  AuditingLoader loader(images, id_set(samples));
  Network net(state);
  net.train(true);
  auto params = net.encoder_parameters();
  for (auto& p : net.projector_parameters()) params.push_back(p);
  SgdLoop sgd(params, cfg, cfg.weight_decay_ssl, count_steps(samples.size(), cfg));

  std::vector<double> trace;
  for (int epoch = 0; epoch < cfg.epochs_per_phase; ++epoch) {
    const auto order = epoch_order(cfg.seed, data.phase_index, epoch, samples.size());
    double sum = 0.0;
    int steps = 0;
    for (const auto& [b, e] : batch_ranges(samples.size(), static_cast<std::size_t>(cfg.batch_size))) {
      const std::size_t k = e - b;
      std::vector<Image> views(2 * k);
      parallel_for(cfg.workers, k, [&](std::size_t i) {
        const SampleRecord& s = samples[order[b + i]];
        auto pair = augment_pair(loader.fetch(s), aug,
                                 augmentation_stream_key(cfg.seed, data.phase_index, epoch, s.sample_id));
        views[i] = std::move(pair.view_i);
        views[k + i] = std::move(pair.view_j);
      });
      const auto z = net.project(net.encode(images_to_tensor(views)));
      const auto loss = nt_xent(z, cfg.temperature);
      sgd.step(loss);
      sum += loss.item<double>();
      ++steps;
    }
    trace.push_back(sum / steps);
  }
  return finish(net, data.phase_index, std::move(trace), start, cfg, loader);
}

PhaseResult train_finetune_phase(const ModelState& state, ClassifierHead& head, const PhaseData& data,
                                 const TrainConfig& cfg, const AugmentationConfig& aug, ImageStore& images) {
  check_phase(state, data, cfg, aug);
  head.grow(new_classes_of(data.samples, head), state.encoder_spec.feature_dim, mix(cfg.seed, kHeadTag));
  AuditingLoader loader(images, id_set(data.samples));
  return supervised_loop(state, head, data.samples, loader, data.phase_index, cfg, aug, nullptr, nullptr);
}

IcarlOutcome train_icarl_phase(const ModelState& state, ClassifierHead& head, const PhaseData& data,
                               const ExemplarMemory& memory, const DatasetManifest& manifest, const TrainConfig& cfg,
                               const AugmentationConfig& aug, ImageStore& images) {
  check_phase(state, data, cfg, aug);
  memory.validate();

  std::vector<SampleRecord> train_set = data.samples;
  for (const auto& id : memory.ids()) {
    const SampleRecord* rec = manifest.find(id);
    if (rec == nullptr) throw Error(Errc::integrity, "exemplar '" + id + "' is not in the manifest");
    train_set.push_back(*rec);
  }
  AuditingLoader loader(images, id_set(train_set));

  const ClassifierHead teacher_head = head.clone();
  Network teacher(state);
  teacher.train(false);

  head.grow(new_classes_of(data.samples, head), state.encoder_spec.feature_dim, mix(cfg.seed, kHeadTag));
  IcarlOutcome out;
  out.result = supervised_loop(state, head, train_set, loader, data.phase_index, cfg, aug,
                               teacher_head.size() > 0 ? &teacher : nullptr, &teacher_head);

  // Rebalance: shrink old lists, herd new classes with the trained encoder.
  out.memory.capacity = memory.capacity;
  const int per_class = head.size() > 0 ? memory.capacity / head.size() : 0;
  for (const auto& [cls, ids] : memory.exemplars) {
    auto kept = ids;
    kept.resize(std::min<std::size_t>(kept.size(), static_cast<std::size_t>(per_class)));
    if (!kept.empty()) out.memory.exemplars[cls] = std::move(kept);
  }
  Network trained(out.result.state);
  for (int cls : head.classes) {
    if (memory.exemplars.contains(cls)) continue;
    std::vector<SampleRecord> members;
    for (const auto& s : data.samples) {
      if (s.class_id == cls) members.push_back(s);
    }
    if (members.empty() || per_class == 0) continue;
    const int m = std::min(per_class, static_cast<int>(members.size()));
    const auto features = normalized_features(trained, loader, members, cfg.batch_size);
    std::vector<std::string> chosen;
    for (int idx : herding_select(features, m)) chosen.push_back(members[static_cast<std::size_t>(idx)].sample_id);
    out.memory.exemplars[cls] = std::move(chosen);
  }
  out.memory.validate();
  const auto served = loader.served();
  out.result.served_ids.assign(served.begin(), served.end());
  return out;
}

PhaseResult train_joint(const ModelState& fresh, const std::vector<SampleRecord>& samples, const TrainConfig& cfg,
                        const AugmentationConfig& aug, JointMode mode, ImageStore& images, ClassifierHead* head) {
  if (fresh.phase_index != 0) throw Error(Errc::invalid_config, "joint training starts from a fresh state");
  PhaseData data;
  data.phase_index = 1;
  data.samples = samples;
  const ModelState start = inherit_state(fresh, true, cfg.seed);
  if (mode == JointMode::self_supervised) return train_sscil_phase(start, data, cfg, aug, images);
  if (head == nullptr) throw Error(Errc::invalid_config, "supervised joint training needs a classifier head");
  return train_finetune_phase(start, *head, data, cfg, aug, images);
}

}  // namespace sscil
