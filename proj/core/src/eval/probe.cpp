#include "sscil/eval/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"
#include "sscil/eval/features.hpp"
#include "sscil/objectives/losses.hpp"

namespace sscil {

void ProbeConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || feature_batch < 1) throw Error(Errc::invalid_config, "probe sizes must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(Errc::invalid_config, "probe learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(Errc::invalid_config, "probe momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw Error(Errc::invalid_config, "probe weight_decay must be >= 0");
}

std::vector<int> ProbeResult::predict(const Eigen::MatrixXd& features) const {
  const Eigen::MatrixXd scores = (features * weight.transpose()).rowwise() + bias.transpose();
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double accuracy_of(const ProbeResult& probe, const Eigen::MatrixXd& features, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  const auto pred = probe.predict(features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

ProbeResult fit_probe(const Eigen::MatrixXd& features, std::span<const int> labels, const ProbeConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(Errc::input_shape, "probe features and labels differ in length");
  }
  ProbeResult result;
  result.classes.assign(labels.begin(), labels.end());
  std::sort(result.classes.begin(), result.classes.end());
  result.classes.erase(std::unique(result.classes.begin(), result.classes.end()), result.classes.end());
  if (result.classes.size() < 2) throw Error(Errc::degenerate_probe, "probe training data holds fewer than two classes");
  if (!features.allFinite()) throw Error(Errc::invalid_feature, "probe features contain non-finite values");

  const auto n = features.rows();
  const auto d = features.cols();
  const auto c = static_cast<Eigen::Index>(result.classes.size());
  std::vector<int> columns(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    columns[i] = static_cast<int>(std::lower_bound(result.classes.begin(), result.classes.end(), labels[i]) -
                                  result.classes.begin());
  }

  const Eigen::RowVectorXd mean = features.colwise().mean();
  Eigen::RowVectorXd scale = ((features.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n)).sqrt();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(scale(j) > 1e-12)) scale(j) = 1.0;
  }
  const Eigen::MatrixXd x = (features.rowwise() - mean).array().rowwise() / scale.array();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, c);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(c);
  Eigen::MatrixXd vw = Eigen::MatrixXd::Zero(d, c);
  Eigen::RowVectorXd vb = Eigen::RowVectorXd::Zero(c);

  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  const long steps_per_epoch = static_cast<long>((n + batch - 1) / batch);
  const long total = steps_per_epoch * cfg.epochs;
  long step = 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(mix(cfg.seed, 0x70726f6265ULL, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<Eigen::Index>(order));
    double sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min(batch, n - start);
      Eigen::MatrixXd xb(m, d);
      std::vector<int> yb(static_cast<std::size_t>(m));
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x.row(src);
        yb[static_cast<std::size_t>(i)] = columns[static_cast<std::size_t>(src)];
      }
      const Eigen::MatrixXd logits = (xb * w).rowwise() + b;
      const auto ce = cross_entropy_loss(logits, yb);
      sum += ce.loss * static_cast<double>(m);
      const Eigen::MatrixXd gw = xb.transpose() * ce.grad + cfg.weight_decay * w;
      const Eigen::RowVectorXd gb = ce.grad.colwise().sum();
      const double lr =
          cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)));
      vw = cfg.momentum * vw + gw;
      vb = cfg.momentum * vb + gb;
      w -= lr * vw;
      b -= lr * vb;
      ++step;
    }
    result.loss_trace.push_back(sum / static_cast<double>(n));
  }

  // Fold the standardization into the affine map.
  const Eigen::MatrixXd w_raw = w.array().colwise() / scale.transpose().array();
  result.weight = w_raw.transpose();
  result.bias = (b - mean * w_raw).transpose();
  result.train_count = static_cast<int>(n);
  result.accuracy = accuracy_of(result, features, labels);
  return result;
}

ProbeResult fit_linear_probe(const ModelState& frozen, std::span<const SampleRecord> train,
                             std::span<const SampleRecord> test, ImageStore& images, const ProbeConfig& cfg) {
  auto allowed = id_set(train);
  for (const auto& s : test) allowed.insert(s.sample_id);
  AuditingLoader loader(images, std::move(allowed));
  const auto train_features = extract_features(frozen, train, loader, Stage::encoder, cfg.feature_batch);
  std::vector<int> train_labels;
  for (const auto& s : train) train_labels.push_back(s.class_id);
  auto result = fit_probe(train_features.features, train_labels, cfg);
  if (!test.empty()) {
    const auto test_features = extract_features(frozen, test, loader, Stage::encoder, cfg.feature_batch);
    std::vector<int> test_labels;
    for (const auto& s : test) test_labels.push_back(s.class_id);
    result.accuracy = accuracy_of(result, test_features.features, test_labels);
    result.test_count = static_cast<int>(test.size());
  }
  return result;
}

}  // namespace sscil
