#include <cmath>
#include <memory>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "gtest_helpers.hpp"
#include "sscil/augment/image_io.hpp"
#include "sscil/data/phase_plan.hpp"
#include "sscil/eval/features.hpp"
#include "sscil/eval/histogram.hpp"
#include "sscil/eval/probe.hpp"
#include "sscil/eval/protocols.hpp"
#include "sscil/model/model_state.hpp"

using namespace sscil;

TEST(Probe, SeparableFeaturesReachFullAccuracy) {
  Rng rng(1);
  Eigen::MatrixXd x = toy::gaussian_matrix(90, 5, rng) * 0.3;
  std::vector<int> labels(90);
  for (int i = 0; i < 90; ++i) {
    labels[i] = i % 3;
    x(i, labels[i]) += 4.0;
  }
  const auto r = fit_probe(x, labels, {});
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.classes, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(r.train_count, 90);
  EXPECT_EQ(r.predict(x), labels);
  EXPECT_EQ(r.loss_trace.size(), 100U);
}

TEST(Probe, ShuffledLabelsSitAtChance) {
  Rng rng(2);
  const int n_train = 600, n_test = 2000, classes = 4;
  const Eigen::MatrixXd train = toy::gaussian_matrix(n_train, 8, rng);
  const Eigen::MatrixXd test = toy::gaussian_matrix(n_test, 8, rng);
  std::vector<int> ytr(n_train), yte(n_test);
  for (auto& y : ytr) y = static_cast<int>(rng.index(classes));
  for (auto& y : yte) y = static_cast<int>(rng.index(classes));
  ProbeConfig cfg;
  cfg.epochs = 30;
  const auto r = fit_probe(train, ytr, cfg);
  const double acc = accuracy_of(r, test, yte);
  const double sigma = std::sqrt(0.25 * 0.75 / n_test);
  EXPECT_NEAR(acc, 0.25, 3 * sigma);
}

TEST(Probe, DeterministicAndDegenerate) {
  Rng rng(3);
  const Eigen::MatrixXd x = toy::gaussian_matrix(40, 4, rng);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) y[i] = i % 2;
  ProbeConfig cfg;
  cfg.epochs = 10;
  const auto a = fit_probe(x, y, cfg);
  const auto b = fit_probe(x, y, cfg);
  EXPECT_EQ(a.weight, b.weight);
  EXPECT_EQ(a.bias, b.bias);
  std::vector<int> one(40, 3);
  EXPECT_SSCIL_ERROR(fit_probe(x, one, cfg), Errc::degenerate_probe);
}

TEST(Probe, TiesGoToLowestColumn) {
  ProbeResult r;
  r.classes = {4, 9};
  r.weight = Eigen::MatrixXd::Zero(2, 3);
  r.bias = Eigen::VectorXd::Zero(2);
  EXPECT_EQ(r.predict(Eigen::MatrixXd::Ones(2, 3)), (std::vector<int>{4, 4}));
}

TEST(Histogram, IdenticalInputsAtZero) {
  const Eigen::MatrixXd reps = Eigen::MatrixXd::Constant(5, 4, 0.7);
  const auto h = distance_histogram(reps, {});
  EXPECT_EQ(h.pairs, 10);
  EXPECT_EQ(h.counts.front(), 10);
  EXPECT_DOUBLE_EQ(h.concentration(), 1.0);
  EXPECT_EQ(h.edges.size(), 41U);
}

TEST(Histogram, MassOrderAndEuclidean) {
  Rng rng(4);
  Eigen::MatrixXd reps = toy::gaussian_matrix(30, 6, rng);
  const auto h = distance_histogram(reps, {});
  long total = 0;
  for (long c : h.counts) total += c;
  EXPECT_EQ(total, 30 * 29 / 2);
  Eigen::MatrixXd reversed = reps.colwise().reverse();
  EXPECT_EQ(distance_histogram(reversed, {}).counts, h.counts);

  HistogramConfig eu{10, DistanceMetric::euclidean, 1.0};
  const auto he = distance_histogram(reps, eu);
  // Gaussian rows in 6-d sit well beyond distance 1: all in the last bin.
  EXPECT_GT(he.counts.back(), 400);
  EXPECT_EQ(nlohmann::json::parse(he.to_json()).at("counts").size(), 10U);
}

TEST(Histogram, Errors) {
  EXPECT_SSCIL_ERROR(distance_histogram(Eigen::MatrixXd::Ones(1, 3), {}), Errc::insufficient_data);
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(3, 2);
  z.row(1).setZero();
  EXPECT_SSCIL_ERROR(distance_histogram(z, {}), Errc::undefined_similarity);
}

TEST(ForgettingGap, Identities) {
  EXPECT_EQ(forgetting_gap(0.55, 0.55), 0.0);
  EXPECT_NEAR(forgetting_gap(71.2, 79.8), 8.6, 1e-12);
  EXPECT_LT(forgetting_gap(0.9, 0.8), 0.0);
}

namespace {

class EvalData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = std::make_unique<toy::TempDir>("sscil-eval");
    manifest_ = load_manifest(toy::write_dataset(dir_->path(), toy::toy_classes(4, 10, 5, 16, 33)));
    state_ = init_model(toy::micro_encoder(), toy::small_projector(), 8);
  }
  static void TearDownTestSuite() { dir_.reset(); }

  static ProbeConfig quick_probe() {
    ProbeConfig p;
    p.epochs = 20;
    return p;
  }

  static inline std::unique_ptr<toy::TempDir> dir_;
  static inline DatasetManifest manifest_;
  static inline ModelState state_;
};

}  // namespace

TEST_F(EvalData, ProbeLeavesStateUntouched) {
  ImageStore images(manifest_.root);
  const auto before = state_.clone();
  const auto plan = split_random(manifest_, 2, 1);
  (void)eval_gep(state_, manifest_, images, quick_probe());
  (void)eval_lep(state_, plan, manifest_, 1, images, quick_probe());
  (void)pairwise_distance_histogram(state_, manifest_.split_samples(Split::test), Stage::projector, images, {});
  EXPECT_TRUE(bitwise_equal(before, state_));
}

TEST_F(EvalData, GepDetailPartitionIdentity) {
  ImageStore images(manifest_.root);
  const auto plan = split_random(manifest_, 2, 1);
  const auto gep = eval_gep(state_, manifest_, images, quick_probe());
  EXPECT_GE(gep.accuracy, 0.0);
  EXPECT_LE(gep.accuracy, 1.0);
  EXPECT_EQ(gep.test_ids.size(), 20U);
  const auto detail = gep_detail(gep, plan, manifest_);
  EXPECT_EQ(detail.count.at(1) + detail.count.at(2), 20);
  EXPECT_NEAR(detail.weighted_mean(), gep.accuracy, 1e-12);
}

TEST_F(EvalData, LepUsesSeenClassesOnly) {
  ImageStore images(manifest_.root);
  const auto plan = split_random(manifest_, 2, 1);
  ProbeConfig p = quick_probe();
  const double lep1 = eval_lep(state_, plan, manifest_, 1, images, p);
  EXPECT_GE(lep1, 0.0);
  EXPECT_LE(lep1, 1.0);
  // Same as a probe fitted directly on the phase-1 classes.
  const auto classes = classes_through(plan, 1);
  const auto direct = fit_linear_probe(state_, manifest_.samples_of_classes(classes, Split::train),
                                       manifest_.samples_of_classes(classes, Split::test), images, p);
  EXPECT_DOUBLE_EQ(lep1, direct.accuracy);
  EXPECT_EQ(direct.classes, classes);
}

TEST_F(EvalData, SampleLevelPlansRefuseLepAndDetail) {
  ImageStore images(manifest_.root);
  FeatureMatrix fm;
  const auto train = manifest_.split_samples(Split::train);
  fm.features.resize(static_cast<Eigen::Index>(train.size()), 1);
  for (std::size_t i = 0; i < train.size(); ++i) {
    fm.sample_ids.push_back(train[i].sample_id);
    fm.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i % 2);
  }
  const auto plan = split_cluster(manifest_, fm, 2, 0);
  EXPECT_SSCIL_ERROR(eval_lep(state_, plan, manifest_, 1, images, quick_probe()), Errc::lep_undefined);
  const auto gep = eval_gep(state_, manifest_, images, quick_probe());
  EXPECT_SSCIL_ERROR(gep_detail(gep, plan, manifest_), Errc::detail_undefined);
}

TEST_F(EvalData, ExportRoundTripAndWidths) {
  ImageStore images(manifest_.root);
  const auto samples = manifest_.split_samples(Split::test);
  const auto enc = export_embeddings(state_, samples, images, Stage::encoder, dir_->path() / "enc.bin");
  const auto proj = export_embeddings(state_, samples, images, Stage::projector, dir_->path() / "proj.bin");
  EXPECT_EQ(enc.rows(), static_cast<Eigen::Index>(samples.size()));
  EXPECT_EQ(enc.dim(), 64);
  EXPECT_EQ(proj.dim(), 32);
  const auto back = load_features(dir_->path() / "enc.bin");
  EXPECT_EQ(back.sample_ids, enc.sample_ids);
  EXPECT_EQ(back.features, enc.features);
  EXPECT_EQ(parse_stage("projector"), Stage::projector);
  EXPECT_SSCIL_ERROR(parse_stage("head"), Errc::usage);
}

TEST_F(EvalData, HistogramFromModelIsSymmetricInOrder) {
  ImageStore images(manifest_.root);
  auto samples = manifest_.split_samples(Split::test);
  const auto a = pairwise_distance_histogram(state_, samples, Stage::encoder, images, {});
  std::reverse(samples.begin(), samples.end());
  const auto b = pairwise_distance_histogram(state_, samples, Stage::encoder, images, {});
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.stage, "encoder");
  EXPECT_EQ(a.pairs, 190);
}
