#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gpmil {

// Weakly labeled dataset: instances with features, grouped into bags; only
// bag labels are required, instance labels may be unknown (-1).
struct MilDataset {
  Eigen::MatrixXd X;                   // N x D feature rows
  std::vector<int> bag_of;             // instance -> bag index
  std::vector<std::vector<int>> bags;  // bag -> instance indices (ascending)
  std::vector<int> T;                  // bag labels in {0, 1}
  std::vector<int> y_true;             // instance labels in {0, 1, -1}
  std::vector<std::string> bag_ids;    // original bag tokens

  Eigen::Index num_instances() const { return X.rows(); }
  int num_bags() const { return static_cast<int>(bags.size()); }
  Eigen::Index dim() const { return X.cols(); }
  bool has_instance_labels() const;

  // Checks the structural invariants (bags partition the instances, bags are
  // non-empty, labels are in range, T matches known instance labels when a
  // bag is fully labeled). Throws data_error on violation.
  void validate() const;

  // New dataset holding only the given bags, instances in original order.
  MilDataset select_bags(const std::vector<int>& bag_indices) const;
};

// CSV schema: header "bag_id,bag_label,instance_label,f0,..,f{D-1}"; one row
// per instance; rows of a bag need not be contiguous; instance_label -1
// means unknown. Malformed input raises data_error naming the line.
MilDataset load_csv(const std::string& path);
void save_csv(const std::string& path, const MilDataset& ds);

struct SynthConfig {
  int num_bags = 200;
  int bag_size = 10;
  int min_positives = 1;   // per positive bag
  int max_positives = 4;
  int dim = 5;
  double separation = 3.0;  // mean shift of positive instances along axis 0
  double positive_fraction = 0.5;
  std::uint64_t seed = 0;
};

// Negative instances ~ N(0, I); positive instances ~ N(separation * e0, I).
// Exactly round(num_bags * positive_fraction) bags are positive; positive
// bags carry between min_positives and max_positives positive instances.
MilDataset gen_synth(const SynthConfig& cfg);

struct PcaTransform {
  Eigen::VectorXd mean;                // D
  Eigen::MatrixXd components;          // D x k, orthonormal columns
  Eigen::VectorXd explained_variance;  // k, descending
};

// Principal axes of X via the covariance eigendecomposition; k <= D.
PcaTransform fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& X, int k);
Eigen::MatrixXd apply_pca(const PcaTransform& t,
                          const Eigen::Ref<const Eigen::MatrixXd>& X);

// Splits bags into train/test preserving the class mix: per class the test
// side receives round(test_fraction * count) bags, clamped so neither side
// is left empty when the class has at least two bags.
struct SplitResult {
  MilDataset train;
  MilDataset test;
};

SplitResult stratified_split(const MilDataset& ds, double test_fraction,
                             std::uint64_t seed);

}  // namespace gpmil
