#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "nlcolor/dataset.hpp"
#include "nlcolor/raster.hpp"

namespace nlcolor {

struct BandScores {
  double pearson_r = 0.0;
  double wmse = 0.0;
  long n = 0;
};

/// Sample Pearson correlation; throws on length mismatch, n < 2 or a
/// zero-variance argument.
double pearson(const std::vector<double>& actual, const std::vector<double>& predicted);

/// (1/n) sum (pred - actual)^2 / actual; every actual must be positive.
double wmse(const std::vector<double>& actual, const std::vector<double>& predicted);

/// Contrast term of the structural-similarity framework, averaged over valid
/// pixels: c = (2 s_x s_y + C2) / (s_x^2 + s_y^2 + C2) with local SDs over an
/// 11x11 Gaussian window (sigma 1.5), C2 = (0.03 * 255)^2. A pixel is valid
/// when both grids are non-nodata there; window statistics use only valid
/// pixels with renormalized weights.
double contrast_similarity(const RasterGrid& a, const RasterGrid& b);

enum class ConsistencyMode { Literal, MeanRatio };

/// Literal: sqrt[(mean_train/sd_train) * (mean_test/sd_test)] with sample SDs.
/// MeanRatio (diagnostic): geometric mean over matched pairs of min/max.
double consistency(const std::vector<double>& values_train,
                   const std::vector<double>& values_test,
                   ConsistencyMode mode = ConsistencyMode::Literal);

struct ScoreRow {
  std::string train_city;
  std::string test_city;   // equals train_city for training-set scores
  std::string model;       // e.g. "ols", "elmap[0.05]"
  Band band = Band::R;
  bool training = false;
  BandScores scores;
  double contrast = std::numeric_limits<double>::quiet_NaN();
  std::string error;       // non-empty when this cell failed
};

struct ConsistencyRow {
  std::string model;
  Band band = Band::R;
  std::string measure;     // "pearson" | "wmse" | "contrast"
  double literal = std::numeric_limits<double>::quiet_NaN();
  double mean_ratio = std::numeric_limits<double>::quiet_NaN();
  std::string literal_error;
};

struct EvaluationReport {
  std::vector<ScoreRow> rows;
  std::vector<ConsistencyRow> consistency;
};

void write_report_csv(const EvaluationReport& rep, const std::string& path);
EvaluationReport read_report_csv(const std::string& path);
void write_consistency_csv(const EvaluationReport& rep, const std::string& path);
/// Plain-text table in the per-train-city layout of the evaluation design.
void write_report_table(const EvaluationReport& rep, const std::string& path);

/// Fills the consistency rows from the score rows (both modes, per model,
/// band and measure over the train/test populations).
void compute_consistency(EvaluationReport& rep);

enum class ModelKind { Ols, Kernel, Forest, ElasticMap };
ModelKind parse_model_kind(const std::string& s);
std::string model_kind_name(ModelKind k);

/// Refits the model with and without the dropped predictors on the pooled
/// dataset and returns r(full) - r(reduced), both evaluated on that dataset.
double factor_contribution(const Dataset& ds_all, Band band, ModelKind kind,
                           const std::vector<int>& predictors_to_drop,
                           std::uint64_t seed = 0);

}  // namespace nlcolor
