#include "gpmil/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "gpmil/common.hpp"

namespace gpmil {

bool MilDataset::has_instance_labels() const {
  return std::any_of(y_true.begin(), y_true.end(),
                     [](int y) { return y >= 0; });
}

void MilDataset::validate() const {
  const auto n = static_cast<std::size_t>(X.rows());
  if (bag_of.size() != n || y_true.size() != n) {
    throw data_error("dataset: per-instance arrays disagree with X rows");
  }
  if (T.size() != bags.size() || bag_ids.size() != bags.size()) {
    throw data_error("dataset: per-bag arrays disagree with bag count");
  }
  std::vector<char> seen(n, 0);
  for (std::size_t b = 0; b < bags.size(); ++b) {
    if (bags[b].empty()) {
      throw data_error("dataset: bag " + std::to_string(b) + " is empty");
    }
    if (T[b] != 0 && T[b] != 1) {
      throw data_error("dataset: bag label must be 0 or 1");
    }
    bool all_known = true;
    int max_y = 0;
    for (int i : bags[b]) {
      if (i < 0 || static_cast<std::size_t>(i) >= n || seen[i]) {
        throw data_error("dataset: bags do not partition the instances");
      }
      seen[i] = 1;
      if (bag_of[i] != static_cast<int>(b)) {
        throw data_error("dataset: bag_of disagrees with bag membership");
      }
      if (y_true[i] < 0) {
        all_known = false;
      } else {
        max_y = std::max(max_y, y_true[i]);
      }
    }
    if (all_known && max_y != T[b]) {
      throw data_error("dataset: bag " + std::to_string(b) +
                       " label inconsistent with its instance labels");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      throw data_error("dataset: instance " + std::to_string(i) +
                       " belongs to no bag");
    }
    if (y_true[i] < -1 || y_true[i] > 1) {
      throw data_error("dataset: instance label must be -1, 0 or 1");
    }
  }
}

MilDataset MilDataset::select_bags(const std::vector<int>& bag_indices) const {
  std::vector<int> new_bag_of_old(bags.size(), -1);
  for (std::size_t k = 0; k < bag_indices.size(); ++k) {
    new_bag_of_old[bag_indices[k]] = static_cast<int>(k);
  }
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (new_bag_of_old[bag_of[i]] >= 0) keep.push_back(static_cast<int>(i));
  }
  MilDataset out;
  out.X.resize(static_cast<Eigen::Index>(keep.size()), X.cols());
  out.bag_of.resize(keep.size());
  out.y_true.resize(keep.size());
  out.bags.resize(bag_indices.size());
  out.T.resize(bag_indices.size());
  out.bag_ids.resize(bag_indices.size());
  for (std::size_t k = 0; k < bag_indices.size(); ++k) {
    out.T[k] = T[bag_indices[k]];
    out.bag_ids[k] = bag_ids[bag_indices[k]];
  }
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const int i = keep[j];
    out.X.row(static_cast<Eigen::Index>(j)) = X.row(i);
    out.bag_of[j] = new_bag_of_old[bag_of[i]];
    out.y_true[j] = y_true[i];
    out.bags[out.bag_of[j]].push_back(static_cast<int>(j));
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line_no,
                    const char* what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw data_error("line " + std::to_string(line_no) + ": " + what +
                     " is not a number: '" + s + "'");
  }
  return v;
}

int parse_label(const std::string& s, std::size_t line_no, const char* what,
                int lo, int hi) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < lo || v > hi) {
    throw data_error("line " + std::to_string(line_no) + ": " + what +
                     " must be an integer in [" + std::to_string(lo) + "," +
                     std::to_string(hi) + "], got '" + s + "'");
  }
  return v;
}

}  // namespace

MilDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw data_error("cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw data_error("'" + path + "' is empty");
  }
  const auto header = split_line(line);
  if (header.size() < 4 || header[0] != "bag_id" || header[1] != "bag_label" ||
      header[2] != "instance_label") {
    throw data_error("line 1: header must start with "
                     "'bag_id,bag_label,instance_label,f0,...'");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[3 + d] != "f" + std::to_string(d)) {
      throw data_error("line 1: feature column " + std::to_string(d) +
                       " must be named f" + std::to_string(d));
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> bag_of;
  std::vector<int> y_true;
  std::vector<int> bag_labels;
  std::vector<std::string> bag_ids;
  std::unordered_map<std::string, int> bag_index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw data_error("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    }
    const std::string& id = cells[0];
    const int t = parse_label(cells[1], line_no, "bag_label", 0, 1);
    const int y = parse_label(cells[2], line_no, "instance_label", -1, 1);
    auto it = bag_index.find(id);
    int b;
    if (it == bag_index.end()) {
      b = static_cast<int>(bag_ids.size());
      bag_index.emplace(id, b);
      bag_ids.push_back(id);
      bag_labels.push_back(t);
    } else {
      b = it->second;
      if (bag_labels[b] != t) {
        throw data_error("line " + std::to_string(line_no) + ": bag '" + id +
                         "' label " + std::to_string(t) +
                         " contradicts earlier label " +
                         std::to_string(bag_labels[b]));
      }
    }
    std::vector<double> feats(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      feats[d] = parse_double(cells[3 + d], line_no,
                              ("f" + std::to_string(d)).c_str());
    }
    rows.push_back(std::move(feats));
    bag_of.push_back(b);
    y_true.push_back(y);
  }
  if (rows.empty()) {
    throw data_error("'" + path + "' has a header but no instance rows");
  }

  MilDataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
          rows[i][d];
    }
  }
  ds.bag_of = std::move(bag_of);
  ds.y_true = std::move(y_true);
  ds.T = std::move(bag_labels);
  ds.bag_ids = std::move(bag_ids);
  ds.bags.resize(ds.T.size());
  for (std::size_t i = 0; i < ds.bag_of.size(); ++i) {
    ds.bags[ds.bag_of[i]].push_back(static_cast<int>(i));
  }
  ds.validate();
  return ds;
}

void save_csv(const std::string& path, const MilDataset& ds) {
  std::ofstream out(path);
  if (!out) {
    throw data_error("cannot write '" + path + "'");
  }
  out << "bag_id,bag_label,instance_label";
  for (Eigen::Index d = 0; d < ds.dim(); ++d) out << ",f" << d;
  out << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < ds.num_instances(); ++i) {
    const int b = ds.bag_of[i];
    out << ds.bag_ids[b] << ',' << ds.T[b] << ',' << ds.y_true[i];
    for (Eigen::Index d = 0; d < ds.dim(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.X(i, d));
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) {
    throw data_error("write to '" + path + "' failed");
  }
}

MilDataset gen_synth(const SynthConfig& cfg) {
  if (cfg.num_bags < 1 || cfg.bag_size < 1 || cfg.dim < 1) {
    throw std::invalid_argument("gen_synth: counts must be positive");
  }
  if (cfg.min_positives < 1 || cfg.max_positives < cfg.min_positives ||
      cfg.max_positives > cfg.bag_size) {
    throw std::invalid_argument("gen_synth: positive count range invalid");
  }
  if (cfg.positive_fraction < 0.0 || cfg.positive_fraction > 1.0) {
    throw std::invalid_argument("gen_synth: positive_fraction out of range");
  }
  const int num_pos =
      static_cast<int>(std::lround(cfg.num_bags * cfg.positive_fraction));

  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5E17));
  std::vector<int> bag_label(cfg.num_bags, 0);
  std::fill(bag_label.begin(), bag_label.begin() + num_pos, 1);
  std::shuffle(bag_label.begin(), bag_label.end(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pos_count(cfg.min_positives,
                                               cfg.max_positives);
  const Eigen::Index n =
      static_cast<Eigen::Index>(cfg.num_bags) * cfg.bag_size;
  MilDataset ds;
  ds.X.resize(n, cfg.dim);
  ds.bag_of.resize(n);
  ds.y_true.resize(n);
  ds.bags.resize(cfg.num_bags);
  ds.T = bag_label;
  ds.bag_ids.resize(cfg.num_bags);
  Eigen::Index row = 0;
  for (int b = 0; b < cfg.num_bags; ++b) {
    ds.bag_ids[b] = "b" + std::to_string(b);
    const int k = bag_label[b] == 1 ? pos_count(rng) : 0;
    for (int j = 0; j < cfg.bag_size; ++j, ++row) {
      const int y = j < k ? 1 : 0;
      for (int d = 0; d < cfg.dim; ++d) {
        ds.X(row, d) = normal(rng) + (y == 1 && d == 0 ? cfg.separation : 0.0);
      }
      ds.bag_of[row] = b;
      ds.y_true[row] = y;
      ds.bags[b].push_back(static_cast<int>(row));
    }
  }
  ds.validate();
  return ds;
}

PcaTransform fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& X, int k) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n < 2) throw std::invalid_argument("fit_pca: need at least 2 rows");
  if (k < 1 || k > d) throw std::invalid_argument("fit_pca: k out of range");
  PcaTransform t;
  t.mean = X.colwise().mean();
  const Eigen::MatrixXd C = X.rowwise() - t.mean.transpose();
  const Eigen::MatrixXd cov =
      C.transpose() * C / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw numeric_error("fit_pca: eigendecomposition failed");
  }
  // Eigenvalues ascend; take the top k in descending order, sign-fixed so
  // the largest-magnitude coordinate of each axis is positive.
  t.components.resize(d, k);
  t.explained_variance.resize(k);
  for (int j = 0; j < k; ++j) {
    const Eigen::Index src = d - 1 - j;
    Eigen::VectorXd axis = eig.eigenvectors().col(src);
    Eigen::Index imax = 0;
    axis.cwiseAbs().maxCoeff(&imax);
    if (axis[imax] < 0.0) axis = -axis;
    t.components.col(j) = axis;
    t.explained_variance[j] = std::max(0.0, eig.eigenvalues()[src]);
  }
  return t;
}

Eigen::MatrixXd apply_pca(const PcaTransform& t,
                          const Eigen::Ref<const Eigen::MatrixXd>& X) {
  if (X.cols() != t.mean.size()) {
    throw std::invalid_argument("apply_pca: dimension mismatch");
  }
  return (X.rowwise() - t.mean.transpose()) * t.components;
}

SplitResult stratified_split(const MilDataset& ds, double test_fraction,
                             std::uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("stratified_split: fraction must be in (0,1)");
  }
  std::vector<int> pos, neg;
  for (int b = 0; b < ds.num_bags(); ++b) {
    (ds.T[b] == 1 ? pos : neg).push_back(b);
  }
  if (pos.empty() || neg.empty()) {
    throw data_error("stratified_split: need at least one bag of each class");
  }
  std::mt19937_64 rng(derive_seed(seed, 0x5B17));
  std::vector<int> test_bags, train_bags;
  for (auto* cls : {&pos, &neg}) {
    std::shuffle(cls->begin(), cls->end(), rng);
    const int count = static_cast<int>(cls->size());
    int take = static_cast<int>(std::lround(test_fraction * count));
    if (count >= 2) take = std::clamp(take, 1, count - 1);
    for (int i = 0; i < count; ++i) {
      (i < take ? test_bags : train_bags).push_back((*cls)[i]);
    }
  }
  std::sort(test_bags.begin(), test_bags.end());
  std::sort(train_bags.begin(), train_bags.end());
  SplitResult out;
  out.train = ds.select_bags(train_bags);
  out.test = ds.select_bags(test_bags);
  return out;
}

}  // namespace gpmil
