#include "gpmil/predict.hpp"

#include <cmath>
#include <sstream>

#include "gpmil/common.hpp"

namespace gpmil {

Predictor::Predictor(const TrainedModel& model) : model_(model) {
  if (model_.Z.rows() != model_.m.size() ||
      model_.S.rows() != model_.S.cols() ||
      model_.S.rows() != model_.m.size()) {
    throw std::invalid_argument("Predictor: inconsistent model shapes");
  }
  Eigen::MatrixXd kzz = kernel_matrix(model_.Z, model_.Z, model_.kernel);
  kzz = 0.5 * (kzz + kzz.transpose()).eval();
  kzz_ = PsdFactor::compute(kzz);
  alpha_ = kzz_.solve(model_.m);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> Predictor::latent_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  if (X.cols() != model_.Z.cols()) {
    throw std::invalid_argument("Predictor: feature dimension mismatch");
  }
  const Eigen::MatrixXd kxz = kernel_matrix(X, model_.Z, model_.kernel);
  const Eigen::MatrixXd w = kzz_.solve(kxz.transpose());  // M x N
  const Eigen::MatrixXd sw = model_.S * w;                // M x N
  Eigen::VectorXd mu = kxz * alpha_;
  Eigen::VectorXd var(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    var[i] = model_.kernel.v - kxz.row(i).dot(w.col(i)) +
             w.col(i).dot(sw.col(i));
  }
  const double lo = var.size() > 0 ? var.minCoeff() : 0.0;
  if (lo < -1e-8) {
    std::ostringstream msg;
    msg << "Predictor: predictive variance " << lo << " below tolerance";
    throw numeric_error(msg.str());
  }
  var = var.cwiseMax(0.0);
  return {std::move(mu), std::move(var)};
}

std::pair<double, double> Predictor::latent(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  auto [mu, var] = latent_batch(x.transpose());
  return {mu[0], var[0]};
}

namespace {

InstancePrediction summarize_instance(double mu, double var,
                                      const Eigen::Ref<const Eigen::VectorXd>& probs) {
  InstancePrediction p;
  p.latent_mean = mu;
  p.latent_var = var;
  p.prob = probs.mean();
  p.prob_std = std::sqrt((probs.array() - p.prob).square().sum() /
                         static_cast<double>(probs.size()));
  return p;
}

}  // namespace

InstancePrediction Predictor::predict_instance(
    const Eigen::Ref<const Eigen::VectorXd>& x, int num_samples,
    std::mt19937_64& rng) const {
  if (num_samples < 1) {
    throw std::invalid_argument("predict_instance: num_samples must be >= 1");
  }
  const auto [mu, var] = latent(x);
  const double sd = std::sqrt(var);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd probs(num_samples);
  for (int s = 0; s < num_samples; ++s) {
    probs[s] = logistic(mu + sd * normal(rng));
  }
  return summarize_instance(mu, var, probs);
}

BagPrediction Predictor::predict_bag(
    const Eigen::Ref<const Eigen::MatrixXd>& Xbag, int num_samples,
    std::mt19937_64& rng) const {
  if (num_samples < 1) {
    throw std::invalid_argument("predict_bag: num_samples must be >= 1");
  }
  if (Xbag.rows() < 1) {
    throw std::invalid_argument("predict_bag: empty bag");
  }
  const auto [mu, var] = latent_batch(Xbag);
  const Eigen::Index nb = Xbag.rows();

  // Shared draws: instance-major sampling, identical to predict_instance for
  // a singleton bag. log(1 - p) accumulates the per-sample miss product.
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd probs(nb, num_samples);
  for (Eigen::Index i = 0; i < nb; ++i) {
    const double sd = std::sqrt(var[i]);
    for (int s = 0; s < num_samples; ++s) {
      probs(i, s) = logistic(mu[i] + sd * normal(rng));
    }
  }
  BagPrediction out;
  out.instances.reserve(static_cast<std::size_t>(nb));
  for (Eigen::Index i = 0; i < nb; ++i) {
    out.instances.push_back(
        summarize_instance(mu[i], var[i], probs.row(i).transpose()));
  }
  Eigen::VectorXd bag_probs(num_samples);
  for (int s = 0; s < num_samples; ++s) {
    double log_none = 0.0;
    for (Eigen::Index i = 0; i < nb; ++i) log_none += std::log1p(-probs(i, s));
    bag_probs[s] = 1.0 - std::exp(log_none);
  }
  out.prob = bag_probs.mean();
  out.prob_std = std::sqrt((bag_probs.array() - out.prob).square().sum() /
                           static_cast<double>(num_samples));
  return out;
}

Eigen::MatrixXd model_features(const TrainedModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& X_raw) {
  if (model.pca.has_value()) {
    if (X_raw.cols() != model.pca->mean.size()) {
      throw data_error("model expects " +
                       std::to_string(model.pca->mean.size()) +
                       " raw features, got " + std::to_string(X_raw.cols()));
    }
    return apply_pca(*model.pca, X_raw);
  }
  if (X_raw.cols() != model.dim) {
    throw data_error("model expects " + std::to_string(model.dim) +
                     " features, got " + std::to_string(X_raw.cols()));
  }
  return X_raw;
}

std::pair<double, double> latent_predictive(
    const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return Predictor(model).latent(x);
}

InstancePrediction instance_predict(const TrainedModel& model,
                                    const Eigen::Ref<const Eigen::VectorXd>& x,
                                    int num_samples, std::mt19937_64& rng) {
  return Predictor(model).predict_instance(x, num_samples, rng);
}

BagPrediction bag_predict(const TrainedModel& model,
                          const Eigen::Ref<const Eigen::MatrixXd>& Xbag,
                          int num_samples, std::mt19937_64& rng) {
  return Predictor(model).predict_bag(Xbag, num_samples, rng);
}

}  // namespace gpmil
