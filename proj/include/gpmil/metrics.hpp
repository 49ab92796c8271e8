#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gpmil/inference.hpp"

namespace gpmil {

struct AccF1 {
  double accuracy = 0.0;
  double f1 = 0.0;
};

// Mann-Whitney AUC with mid-rank tie handling. labels in {0,1}; both classes
// must be present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Threshold scores at 0.5 (>= counts as positive). F1 is 0 when no true
// positive exists.
AccF1 accuracy_f1(const std::vector<double>& scores,
                  const std::vector<int>& labels, double threshold = 0.5);

struct EvalReport {
  int num_bags = 0;
  int num_instances = 0;
  int num_labeled_instances = 0;
  double bag_auc = 0.0;
  double bag_accuracy = 0.0;
  double bag_f1 = 0.0;
  // Present only when the dataset carries known instance labels.
  bool has_instance_metrics = false;
  double instance_accuracy = 0.0;
  double instance_f1 = 0.0;
  // AUC additionally needs both instance classes among the known labels.
  std::optional<double> instance_auc;
};

// Predicts every bag (num_samples latent draws, per-bag RNG streams keyed by
// (seed, bag index) so evaluation order does not matter) and scores the
// dataset. Requires both bag classes for the bag AUC.
EvalReport evaluate(const TrainedModel& model, const MilDataset& ds,
                    int num_samples, std::uint64_t seed);

}  // namespace gpmil
