#pragma once

#include <string>

#include "gpmil/inference.hpp"
#include "gpmil/metrics.hpp"

namespace gpmil {

// Version-tagged JSON model file: kernel parameters with norm mode, density
// spec, H, Z/m/S as row-major arrays, optional PCA transform, and training
// metadata. Writing is deterministic for equal models.
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

// Evaluation report as JSON (instance block present only when instance
// labels were available).
void save_report(const std::string& path, const EvalReport& report);
std::string report_to_json(const EvalReport& report);

}  // namespace gpmil
