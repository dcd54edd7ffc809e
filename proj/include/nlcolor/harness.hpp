#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlcolor/elastic_map.hpp"
#include "nlcolor/metrics.hpp"
#include "nlcolor/model_io.hpp"

namespace nlcolor {

struct CityConfig {
  std::string name;
  std::string dataset_csv;           // either a prebuilt dataset...
  std::string alan, hbase;           // ...or raw rasters (hbase at native resolution)
  std::string red, green, blue;
  std::string mask;
};

struct ExperimentConfig {
  std::vector<CityConfig> cities;
  std::vector<Band> bands = {Band::R, Band::G, Band::B};
  std::vector<ModelKind> models = {ModelKind::Ols, ModelKind::Kernel, ModelKind::Forest,
                                   ModelKind::ElasticMap};
  double tail_fraction = 0.01;
  int elmap_g1 = 12, elmap_g2 = 12;
  std::vector<double> elmap_penalties{kBendPenaltySweep.begin(), kBendPenaltySweep.end()};
  int elmap_max_iter = 100;
  double elmap_tol = 1e-4;
  int kernel_folds = 5;
  int forest_trees = 32;
  int forest_min_leaf = 5;
  std::uint64_t seed = 0;
  std::string out_dir = "nlcolor-run";
  bool write_images = true;
};

/// Key = value lines plus [city NAME] sections; '#' starts a comment.
ExperimentConfig parse_config(const std::string& path);

/// Loads a city's dataset either from its CSV or by the full raster pipeline
/// (aggregate HBASE and bands to the ALAN geometry, derive features).
Dataset load_city(const CityConfig& city, RasterGrid* geometry_out = nullptr);

/// Cross-city experiment: per city and band, filter outliers, fit every
/// model, score on the training city and on every other city. Writes
/// reports, serialized models and predicted rasters under cfg.out_dir.
EvaluationReport run_experiment(const ExperimentConfig& cfg);

/// Predict all three bands for a panchromatic scene; clamps to [0,255],
/// writes per-band grids and a composite PPM under out_dir.
void colorize(const Model& model_r, const Model& model_g, const Model& model_b,
              const RasterGrid& alan, const RasterGrid& hbase_mean, const RasterGrid& hbase_sd,
              const std::string& out_dir, const std::string& stem = "colorized");

}  // namespace nlcolor
