#pragma once

#include <Eigen/Dense>
#include <random>
#include <utility>
#include <vector>

#include "gpmil/inference.hpp"

namespace gpmil {

struct InstancePrediction {
  double latent_mean = 0.0;
  double latent_var = 0.0;
  double prob = 0.0;      // mean of logistic(f) over latent samples
  double prob_std = 0.0;  // population std of the same samples, <= 0.5
};

struct BagPrediction {
  double prob = 0.0;  // mean of 1 - prod_n (1 - logistic(f_n)) over samples
  double prob_std = 0.0;
  std::vector<InstancePrediction> instances;
};

// Caches the inducing-point factor and weights of a trained model so that
// repeated predictions avoid refactorizing. Inputs must already live in the
// model's feature space (PCA applied upstream when the model carries one).
class Predictor {
 public:
  explicit Predictor(const TrainedModel& model);

  const TrainedModel& model() const { return model_; }

  // Latent predictive moments (mean, variance) at one point; variance is
  // clamped at 0 with a -1e-8 tolerance.
  std::pair<double, double> latent(
      const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Moments for a batch of rows.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> latent_batch(
      const Eigen::Ref<const Eigen::MatrixXd>& X) const;

  // Monte Carlo instance probability from num_samples latent draws.
  InstancePrediction predict_instance(const Eigen::Ref<const Eigen::VectorXd>& x,
                                      int num_samples,
                                      std::mt19937_64& rng) const;

  // Bag probability and per-instance probabilities from shared latent draws;
  // sharing makes bag_prob >= max instance prob hold deterministically.
  BagPrediction predict_bag(const Eigen::Ref<const Eigen::MatrixXd>& Xbag,
                            int num_samples, std::mt19937_64& rng) const;

 private:
  TrainedModel model_;
  PsdFactor kzz_;
  Eigen::VectorXd alpha_;  // Kzz^{-1} m
};

// Applies the model's PCA when present and checks the feature dimension.
Eigen::MatrixXd model_features(const TrainedModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& X_raw);

// Free-function forms; each constructs a Predictor internally.
std::pair<double, double> latent_predictive(
    const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
InstancePrediction instance_predict(const TrainedModel& model,
                                    const Eigen::Ref<const Eigen::VectorXd>& x,
                                    int num_samples, std::mt19937_64& rng);
BagPrediction bag_predict(const TrainedModel& model,
                          const Eigen::Ref<const Eigen::MatrixXd>& Xbag,
                          int num_samples, std::mt19937_64& rng);

}  // namespace gpmil
