#include <doctest.h>

#include <random>

#include "gpmil/common.hpp"
#include "gpmil/metrics.hpp"
#include "gpmil/predict.hpp"
#include "oracles.hpp"

using namespace gpmil;

namespace {

TrainedModel quick_model(const MilDataset& data, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.inducing = 8;
  cfg.max_epochs = 4;
  cfg.hyperopt_enabled = false;
  cfg.pred_samples = 100;
  cfg.seed = seed;
  return train(data, nullptr, KernelParams{}, GsmDensity::hyperbolic_secant(),
               cfg);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("auc on separable, reversed, and hand-checked rankings") {
  CHECK(auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  CHECK(auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
  // One inversion among 2x2 pairs: 3 wins of 4.
  CHECK(auc({0.1, 0.6, 0.4, 0.9}, {0, 0, 1, 1}) == 0.75);
  // All scores tied: chance level by mid-rank.
  CHECK(auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
}

TEST_CASE("auc tie handling matches the quadratic-time oracle") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coarse(0, 9);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> scores(60);
    std::vector<int> labels(60);
    bool has0 = false, has1 = false;
    for (int i = 0; i < 60; ++i) {
      scores[i] = coarse(rng) / 10.0;  // heavy ties
      labels[i] = coin(rng);
      (labels[i] == 1 ? has1 : has0) = true;
    }
    if (!has0 || !has1) continue;
    CHECK(auc(scores, labels) ==
          doctest::Approx(oracles::naive_auc(scores, labels)).epsilon(1e-13));
  }
}

TEST_CASE("auc input validation") {
  CHECK_THROWS_AS(auc({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.5}, {1}), std::invalid_argument);        // one class
  CHECK_THROWS_AS(auc({0.5, 0.2}, {1}), std::invalid_argument);   // mismatch
  CHECK_THROWS_AS(auc({0.5, 0.2}, {1, 2}), std::invalid_argument);
}

TEST_CASE("accuracy and f1 at the 0.5 threshold") {
  // scores: predictions {1, 1, 0, 0, 1}; labels {1, 0, 0, 1, 1}.
  const AccF1 r = accuracy_f1({0.9, 0.7, 0.2, 0.3, 0.5}, {1, 0, 0, 1, 1});
  // tp=2 (0.9, 0.5 on label 1), fp=1, fn=1, tn=1.
  CHECK(r.accuracy == doctest::Approx(3.0 / 5.0));
  CHECK(r.f1 == doctest::Approx(2.0 * 2 / (2.0 * 2 + 1 + 1)));

  // Threshold boundary: exactly 0.5 is positive.
  CHECK(accuracy_f1({0.5}, {1}).accuracy == 1.0);

  // No true positives: f1 defined as 0.
  const AccF1 none = accuracy_f1({0.1, 0.2}, {1, 1});
  CHECK(none.accuracy == 0.0);
  CHECK(none.f1 == 0.0);

  const AccF1 perfect = accuracy_f1({0.9, 0.1}, {1, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f1 == 1.0);

  // Custom threshold.
  CHECK(accuracy_f1({0.4}, {1}, 0.3).accuracy == 1.0);
}

TEST_CASE("evaluate populates bag and instance metrics deterministically") {
  SynthConfig scfg;
  scfg.num_bags = 16;
  scfg.bag_size = 4;
  scfg.dim = 2;
  scfg.seed = 5;
  const MilDataset data = gen_synth(scfg);
  const TrainedModel model = quick_model(data, 5);

  const EvalReport rep = evaluate(model, data, 200, 11);
  CHECK(rep.num_bags == 16);
  CHECK(rep.num_instances == 64);
  CHECK(rep.num_labeled_instances == 64);
  CHECK(rep.bag_auc >= 0.0);
  CHECK(rep.bag_auc <= 1.0);
  CHECK(rep.has_instance_metrics);
  REQUIRE(rep.instance_auc.has_value());
  CHECK(*rep.instance_auc >= 0.0);
  CHECK(*rep.instance_auc <= 1.0);

  const EvalReport again = evaluate(model, data, 200, 11);
  CHECK(rep.bag_auc == again.bag_auc);
  CHECK(rep.bag_accuracy == again.bag_accuracy);
  CHECK(*rep.instance_auc == *again.instance_auc);

  const EvalReport other_seed = evaluate(model, data, 200, 12);
  CHECK(rep.bag_auc == doctest::Approx(other_seed.bag_auc).epsilon(0.5));
}

TEST_CASE("evaluate without instance labels reports bag metrics only") {
  SynthConfig scfg;
  scfg.num_bags = 10;
  scfg.bag_size = 3;
  scfg.max_positives = 3;
  scfg.dim = 2;
  scfg.seed = 6;
  MilDataset data = gen_synth(scfg);
  const TrainedModel model = quick_model(data, 6);
  for (auto& y : data.y_true) y = -1;
  const EvalReport rep = evaluate(model, data, 100, 1);
  CHECK(rep.num_labeled_instances == 0);
  CHECK(!rep.has_instance_metrics);
  CHECK(!rep.instance_auc.has_value());
}

TEST_CASE("evaluate with single-class known instances omits instance auc") {
  SynthConfig scfg;
  scfg.num_bags = 10;
  scfg.bag_size = 3;
  scfg.max_positives = 3;
  scfg.dim = 2;
  scfg.seed = 7;
  MilDataset data = gen_synth(scfg);
  const TrainedModel model = quick_model(data, 7);
  // Keep labels only on negative instances.
  for (Eigen::Index i = 0; i < data.num_instances(); ++i) {
    if (data.y_true[i] == 1) data.y_true[i] = -1;
  }
  const EvalReport rep = evaluate(model, data, 100, 1);
  CHECK(rep.has_instance_metrics);
  CHECK(!rep.instance_auc.has_value());
  CHECK(rep.num_labeled_instances > 0);
}

}  // TEST_SUITE
