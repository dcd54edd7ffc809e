#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlcolor/raster.hpp"

namespace nlcolor {

enum class Band { R, G, B };

inline char band_letter(Band b) { return b == Band::R ? 'R' : (b == Band::G ? 'G' : 'B'); }
Band parse_band(const std::string& s);

constexpr int kNumPredictors = 5;
extern const std::array<std::string, kNumPredictors> kPredictorNames;

/// One grid cell: five predictors plus up to three band responses.
struct Observation {
  int row = 0;
  int col = 0;
  double alan = 0.0;
  double alan_mean_diff = 0.0;
  double alan_max_diff = 0.0;
  double hbase_mean = 0.0;
  double hbase_sd = 0.0;
  std::optional<double> red, green, blue;

  std::array<double, kNumPredictors> predictors() const {
    return {alan, alan_mean_diff, alan_max_diff, hbase_mean, hbase_sd};
  }
  const std::optional<double>& band(Band b) const {
    return b == Band::R ? red : (b == Band::G ? green : blue);
  }
  std::optional<double>& band(Band b) {
    return b == Band::R ? red : (b == Band::G ? green : blue);
  }
};

struct Dataset {
  std::string name;
  std::vector<Observation> observations;

  size_t size() const { return observations.size(); }
  bool has_band(Band b) const;
};

/// Per-cell differences against the 8-neighborhood: v - mean(neighbors) and
/// max_j (v - n_j). Boundary cells use whichever neighbors exist; a cell with
/// no valid neighbor (or itself nodata) is nodata in both outputs.
std::pair<RasterGrid, RasterGrid> neighborhood_diffs(const RasterGrid& grid);

/// One Observation per cell where alan, both diffs and both HBASE stats are
/// valid and the mask (if given) admits the cell. Mask cells that are nodata
/// or zero exclude the cell. Band grids are optional responses.
Dataset assemble(const RasterGrid& alan, const RasterGrid& hbase_mean,
                 const RasterGrid& hbase_sd,
                 const RasterGrid* band_r, const RasterGrid* band_g, const RasterGrid* band_b,
                 const RasterGrid* mask, const std::string& name = "");

Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace nlcolor
