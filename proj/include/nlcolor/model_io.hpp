#pragma once

#include <string>
#include <variant>

#include "nlcolor/elastic_map.hpp"
#include "nlcolor/regressors.hpp"

namespace nlcolor {

using Model = std::variant<LinearModel, KernelModel, ForestModel, ElasticMap>;

/// Versioned text format ("nlcolor-model 1" header). Round-trips bit-exactly.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

double predict_model(const Model& m, const std::array<double, kNumPredictors>& p);
double predict_model(const Model& m, const Observation& o);
Band model_band(const Model& m);
std::string model_kind_label(const Model& m);

}  // namespace nlcolor
