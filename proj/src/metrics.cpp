#include "gpmil/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpmil/common.hpp"
#include "gpmil/predict.hpp"

namespace gpmil {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("auc: scores and labels must match, non-empty");
  }
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) {
      throw std::invalid_argument("auc: labels must be 0 or 1");
    }
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n = labels.size();
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc: both classes must be present");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Mid-ranks: tied scores all receive the average of their rank block.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += mid_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

AccF1 accuracy_f1(const std::vector<double>& scores,
                  const std::vector<int>& labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument(
        "accuracy_f1: scores and labels must match, non-empty");
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = scores[i] >= threshold ? 1 : 0;
    if (pred == 1 && labels[i] == 1) ++tp;
    else if (pred == 1) ++fp;
    else if (labels[i] == 1) ++fn;
    else ++tn;
  }
  AccF1 out;
  out.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
  out.f1 = tp == 0 ? 0.0
                   : 2.0 * static_cast<double>(tp) /
                         static_cast<double>(2 * tp + fp + fn);
  return out;
}

EvalReport evaluate(const TrainedModel& model, const MilDataset& ds,
                    int num_samples, std::uint64_t seed) {
  ds.validate();
  const Predictor pred(model);
  const Eigen::MatrixXd X = model_features(model, ds.X);
  const int nb = ds.num_bags();

  std::vector<double> bag_scores(static_cast<std::size_t>(nb));
  std::vector<double> inst_probs(static_cast<std::size_t>(ds.num_instances()));
  // Bags are independent given their own RNG stream, so the loop may run in
  // any order or in parallel without changing a single digit.
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < nb; ++b) {
    const auto& members = ds.bags[b];
    Eigen::MatrixXd xb(members.size(), X.cols());
    for (std::size_t j = 0; j < members.size(); ++j) {
      xb.row(static_cast<Eigen::Index>(j)) = X.row(members[j]);
    }
    std::mt19937_64 rng(derive_seed(seed, 0xBA6, static_cast<std::uint64_t>(b)));
    const BagPrediction bp = pred.predict_bag(xb, num_samples, rng);
    bag_scores[static_cast<std::size_t>(b)] = bp.prob;
    for (std::size_t j = 0; j < members.size(); ++j) {
      inst_probs[static_cast<std::size_t>(members[j])] = bp.instances[j].prob;
    }
  }

  EvalReport rep;
  rep.num_bags = nb;
  rep.num_instances = static_cast<int>(ds.num_instances());
  rep.bag_auc = auc(bag_scores, ds.T);
  const AccF1 bag_af = accuracy_f1(bag_scores, ds.T);
  rep.bag_accuracy = bag_af.accuracy;
  rep.bag_f1 = bag_af.f1;

  std::vector<double> known_scores;
  std::vector<int> known_labels;
  for (Eigen::Index i = 0; i < ds.num_instances(); ++i) {
    if (ds.y_true[i] >= 0) {
      known_scores.push_back(inst_probs[static_cast<std::size_t>(i)]);
      known_labels.push_back(ds.y_true[i]);
    }
  }
  rep.num_labeled_instances = static_cast<int>(known_labels.size());
  if (!known_labels.empty()) {
    rep.has_instance_metrics = true;
    const AccF1 inst_af = accuracy_f1(known_scores, known_labels);
    rep.instance_accuracy = inst_af.accuracy;
    rep.instance_f1 = inst_af.f1;
    const bool both = std::any_of(known_labels.begin(), known_labels.end(),
                                  [](int y) { return y == 1; }) &&
                      std::any_of(known_labels.begin(), known_labels.end(),
                                  [](int y) { return y == 0; });
    if (both) rep.instance_auc = auc(known_scores, known_labels);
  }
  return rep;
}

}  // namespace gpmil
