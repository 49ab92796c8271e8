#include "gpmil/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "gpmil/common.hpp"

namespace gpmil {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw data_error(std::string("model file: ") + what +
                     " must be a non-empty 2-d array");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw data_error(std::string("model file: ragged rows in ") + what);
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw data_error(std::string("model file: ") + what +
                     " must be a non-empty array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

void save_model(const std::string& path, const TrainedModel& model) {
  json doc;
  doc["format"] = "gpmil-model";
  doc["format_version"] = model.format_version;
  doc["dim"] = model.dim;
  doc["H"] = model.H;
  doc["kernel"] = {
      {"v", model.kernel.v},
      {"l", model.kernel.l},
      {"norm_mode",
       model.kernel.norm_mode == NormMode::kSquared ? "squared" : "unsquared"}};
  if (model.psi.family() == GsmDensity::Family::kHyperbolicSecant) {
    doc["psi"] = {{"family", "hs"}};
  } else {
    doc["psi"] = {{"family", "gamma"},
                  {"alpha", model.psi.alpha()},
                  {"beta", model.psi.beta()}};
  }
  doc["Z"] = matrix_to_json(model.Z);
  doc["m"] = vector_to_json(model.m);
  doc["S"] = matrix_to_json(model.S);
  if (model.pca.has_value()) {
    doc["pca"] = {{"mean", vector_to_json(model.pca->mean)},
                  {"components", matrix_to_json(model.pca->components)},
                  {"explained_variance",
                   vector_to_json(model.pca->explained_variance)}};
  }
  doc["meta"] = {{"epochs_run", model.epochs_run},
                 {"best_epoch", model.best_epoch},
                 {"best_score", model.best_score},
                 {"monitor", model.monitor},
                 {"seed", model.seed}};
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
  if (!out) throw data_error("write to '" + path + "' failed");
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw data_error("model file '" + path + "': " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "gpmil-model") {
      throw data_error("model file '" + path + "': unrecognized format tag");
    }
    TrainedModel m;
    m.format_version = doc.at("format_version").get<int>();
    if (m.format_version != 1) {
      throw data_error("model file '" + path + "': unsupported version " +
                       std::to_string(m.format_version));
    }
    m.dim = doc.at("dim").get<int>();
    m.H = doc.at("H").get<double>();
    const json& k = doc.at("kernel");
    m.kernel.v = k.at("v").get<double>();
    m.kernel.l = k.at("l").get<double>();
    const std::string mode = k.at("norm_mode").get<std::string>();
    if (mode == "squared") {
      m.kernel.norm_mode = NormMode::kSquared;
    } else if (mode == "unsquared") {
      m.kernel.norm_mode = NormMode::kUnsquared;
    } else {
      throw data_error("model file '" + path + "': bad norm_mode '" + mode + "'");
    }
    const json& p = doc.at("psi");
    const std::string family = p.at("family").get<std::string>();
    if (family == "hs") {
      m.psi = GsmDensity::hyperbolic_secant();
    } else if (family == "gamma") {
      m.psi = GsmDensity::gamma_mix(p.at("alpha").get<double>(),
                                    p.at("beta").get<double>());
    } else {
      throw data_error("model file '" + path + "': bad psi family '" + family +
                       "'");
    }
    m.Z = matrix_from_json(doc.at("Z"), "Z");
    m.m = vector_from_json(doc.at("m"), "m");
    m.S = matrix_from_json(doc.at("S"), "S");
    if (doc.contains("pca")) {
      PcaTransform t;
      t.mean = vector_from_json(doc["pca"].at("mean"), "pca.mean");
      t.components =
          matrix_from_json(doc["pca"].at("components"), "pca.components");
      t.explained_variance = vector_from_json(
          doc["pca"].at("explained_variance"), "pca.explained_variance");
      m.pca = std::move(t);
    }
    if (doc.contains("meta")) {
      const json& meta = doc["meta"];
      m.epochs_run = meta.value("epochs_run", 0);
      m.best_epoch = meta.value("best_epoch", 0);
      m.best_score = meta.value("best_score", 0.0);
      m.monitor = meta.value("monitor", std::string());
      m.seed = meta.value("seed", std::uint64_t{0});
    }
    if (m.Z.rows() != m.m.size() || m.S.rows() != m.m.size() ||
        m.S.cols() != m.m.size()) {
      throw data_error("model file '" + path + "': inconsistent shapes");
    }
    return m;
  } catch (const json::exception& e) {
    throw data_error("model file '" + path + "': " + e.what());
  }
}

std::string report_to_json(const EvalReport& report) {
  json doc;
  doc["num_bags"] = report.num_bags;
  doc["num_instances"] = report.num_instances;
  doc["num_labeled_instances"] = report.num_labeled_instances;
  doc["bag"] = {{"auc", report.bag_auc},
                {"accuracy", report.bag_accuracy},
                {"f1", report.bag_f1}};
  if (report.has_instance_metrics) {
    doc["instance"] = {{"accuracy", report.instance_accuracy},
                       {"f1", report.instance_f1}};
    if (report.instance_auc.has_value()) {
      doc["instance"]["auc"] = *report.instance_auc;
    }
  }
  return doc.dump(2);
}

void save_report(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << report_to_json(report) << "\n";
  if (!out) throw data_error("write to '" + path + "' failed");
}

}  // namespace gpmil
