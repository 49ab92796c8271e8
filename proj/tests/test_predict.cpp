#include <doctest.h>

#include <cmath>
#include <random>

#include "gpmil/common.hpp"
#include "gpmil/predict.hpp"
#include "oracles.hpp"

using namespace gpmil;

namespace {

// Single inducing point at the query location: the latent moments collapse
// to (m0, S00) up to the factorization jitter.
TrainedModel point_model(double m0, double s00) {
  TrainedModel model;
  model.Z.resize(1, 1);
  model.Z << 0.0;
  model.m.resize(1);
  model.m << m0;
  model.S.resize(1, 1);
  model.S << s00;
  model.kernel.v = 1.0;
  model.kernel.l = 1.0;
  model.psi = GsmDensity::hyperbolic_secant();
  model.H = 100.0;
  model.dim = 1;
  return model;
}

TrainedModel trained_small(std::uint64_t seed) {
  SynthConfig scfg;
  scfg.num_bags = 12;
  scfg.bag_size = 4;
  scfg.dim = 2;
  scfg.seed = seed;
  const MilDataset data = gen_synth(scfg);
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

TEST_SUITE("predict") {

TEST_CASE("latent moments match the dense posterior formulas") {
  const TrainedModel model = trained_small(1);
  const Predictor pred(model);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(6, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) X(i, j) = normal(rng);

  const auto [mu, var] = pred.latent_batch(X);

  // Dense: mu = Kxz (Kzz + jI)^{-1} m,
  // var = v - kxz (Kzz + jI)^{-1} kxz^T + kxz (Kzz+jI)^{-1} S (Kzz+jI)^{-1} kxz^T.
  Eigen::MatrixXd Kzz = kernel_matrix(model.Z, model.Z, model.kernel);
  const PsdFactor f = PsdFactor::compute(Kzz);
  Kzz.diagonal().array() += f.jitter();
  const Eigen::MatrixXd A_inv = Kzz.inverse();
  const Eigen::MatrixXd Kxz = kernel_matrix(X, model.Z, model.kernel);
  for (int i = 0; i < 6; ++i) {
    const Eigen::VectorXd k = Kxz.row(i).transpose();
    const Eigen::VectorXd w = A_inv * k;
    CHECK(mu[i] == doctest::Approx(k.dot(A_inv * model.m)).epsilon(1e-9));
    const double want = model.kernel.v - k.dot(w) + w.dot(model.S * w);
    CHECK(var[i] == doctest::Approx(std::max(0.0, want)).epsilon(1e-8));
    const auto [mu1, var1] = pred.latent(X.row(i).transpose());
    CHECK(mu1 == mu[i]);
    CHECK(var1 == var[i]);
  }
  CHECK(var.minCoeff() >= 0.0);

  Eigen::MatrixXd wrong(2, 3);
  wrong.setZero();
  CHECK_THROWS_AS(pred.latent_batch(wrong), std::invalid_argument);
}

TEST_CASE("instance probability converges to the analytic expectation") {
  // Latent posterior at the query: mean 2, variance 1 (up to ~1e-10 jitter).
  const TrainedModel model = point_model(2.0, 1.0);
  Eigen::VectorXd x(1);
  x << 0.0;
  const auto [mu, var] = Predictor(model).latent(x);
  CHECK(mu == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-8));

  std::mt19937_64 rng(5);
  const InstancePrediction p = instance_predict(model, x, 200000, rng);
  // E[logistic(f)] for f ~ N(2, 1), by quadrature: 0.8445374814698765.
  CHECK(std::abs(p.prob - 0.8445374814698765) < 0.004);
  const double oracle = oracles::gauss_expect(
      mu, var, [](double f) { return logistic(f); });
  CHECK(oracle == doctest::Approx(0.8445374814698765).epsilon(1e-9));
  CHECK(p.prob_std > 0.0);
  CHECK(p.prob_std <= 0.5);
  CHECK(p.latent_mean == mu);
  CHECK(p.latent_var == var);
}

TEST_CASE("bag probability dominates every member and is reproducible") {
  const TrainedModel model = trained_small(2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd bag(5, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j) bag(i, j) = normal(rng);

  std::mt19937_64 r1(77), r2(77);
  const BagPrediction b1 = bag_predict(model, bag, 500, r1);
  const BagPrediction b2 = bag_predict(model, bag, 500, r2);
  CHECK(b1.prob == b2.prob);
  CHECK(b1.prob_std == b2.prob_std);
  REQUIRE(b1.instances.size() == 5);
  double max_inst = 0.0;
  for (const auto& inst : b1.instances) {
    CHECK(inst.prob >= 0.0);
    CHECK(inst.prob <= 1.0);
    max_inst = std::max(max_inst, inst.prob);
    CHECK(b2.instances[&inst - b1.instances.data()].prob == inst.prob);
  }
  CHECK(b1.prob >= max_inst - 1e-12);
  CHECK(b1.prob <= 1.0);
  CHECK(b1.prob_std >= 0.0);
}

TEST_CASE("a singleton bag reproduces the instance prediction") {
  const TrainedModel model = trained_small(3);
  Eigen::MatrixXd one(1, 2);
  one << 0.4, -1.1;
  std::mt19937_64 r1(9), r2(9);
  const BagPrediction bp = bag_predict(model, one, 300, r1);
  const InstancePrediction ip =
      instance_predict(model, one.row(0).transpose(), 300, r2);
  REQUIRE(bp.instances.size() == 1);
  // The instance row shares the draws, so it matches bitwise; the bag
  // probability goes through the log-space miss product, identical only up
  // to rounding.
  CHECK(bp.instances[0].prob == ip.prob);
  CHECK(bp.instances[0].prob_std == ip.prob_std);
  CHECK(bp.instances[0].latent_mean == ip.latent_mean);
  CHECK(bp.prob == doctest::Approx(ip.prob).epsilon(1e-12));
}

TEST_CASE("a larger latent mean raises the predicted probability") {
  const TrainedModel lo = point_model(-1.5, 0.4);
  const TrainedModel hi = point_model(1.5, 0.4);
  Eigen::VectorXd x(1);
  x << 0.0;
  std::mt19937_64 r1(1), r2(1);
  const double p_lo = instance_predict(lo, x, 4000, r1).prob;
  const double p_hi = instance_predict(hi, x, 4000, r2).prob;
  CHECK(p_lo < 0.5);
  CHECK(p_hi > 0.5);
  CHECK(p_hi > p_lo);
}

TEST_CASE("model_features applies stored pca and checks dimensions") {
  TrainedModel model = trained_small(4);

  // Without PCA: dimension must match exactly.
  Eigen::MatrixXd raw(3, 2);
  raw.setZero();
  CHECK((model_features(model, raw) - raw).cwiseAbs().maxCoeff() == 0.0);
  Eigen::MatrixXd bad(3, 5);
  bad.setZero();
  CHECK_THROWS_AS(model_features(model, bad), data_error);

  // With PCA: raw dimension is the transform's input side.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd train_raw(50, 4);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 4; ++j) train_raw(i, j) = normal(rng);
  model.pca = fit_pca(train_raw, 2);
  const Eigen::MatrixXd feats = model_features(model, train_raw);
  CHECK(feats.cols() == 2);
  CHECK((feats - apply_pca(*model.pca, train_raw)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK_THROWS_AS(model_features(model, raw), data_error);
}

TEST_CASE("predictor rejects inconsistent models and bad sample counts") {
  TrainedModel broken = point_model(0.0, 1.0);
  broken.m.resize(2);
  broken.m.setZero();
  CHECK_THROWS_AS(Predictor{broken}, std::invalid_argument);

  const TrainedModel ok = point_model(0.0, 1.0);
  Eigen::VectorXd x(1);
  x << 0.0;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(instance_predict(ok, x, 0, rng), std::invalid_argument);
  Eigen::MatrixXd empty(0, 1);
  CHECK_THROWS_AS(bag_predict(ok, empty, 10, rng), std::invalid_argument);
}

}  // TEST_SUITE
