#pragma once

#include <array>
#include <string>
#include <vector>

#include "nlcolor/dataset.hpp"

namespace nlcolor {

// Percentile-based exclusion rules. A variable index 0..4 is a predictor,
// index 5 the band response.
enum class OutlierRule { PredictorTail = 1, ResponseTail = 2, OppositeTails = 3, SameTails = 4 };

struct RemovedRecord {
  int row = 0;
  int col = 0;
  OutlierRule rule;                 // first rule that fired, in order i..iv
  int predictor = -1;               // predictor involved, -1 for rule ii
  std::vector<OutlierRule> all_rules;
};

/// Cutoffs and association signs computed once on the full input dataset.
struct OutlierCutoffs {
  double tail_fraction = 0.01;
  std::array<double, 6> lower{};    // 5 predictors + response
  std::array<double, 6> upper{};
  std::array<int, 5> corr_sign{};   // sign of Pearson r(predictor, response); 0 if degenerate
};

struct OutlierReport {
  Dataset kept;
  std::vector<RemovedRecord> removed;
  double fraction_removed = 0.0;
  OutlierCutoffs cutoffs;
};

/// Linearly interpolated empirical quantile (type-7). q in [0,1].
double quantile_type7(std::vector<double> sorted_ascending_ok, double q);

OutlierCutoffs compute_cutoffs(const Dataset& ds, Band band, double tail_fraction);

/// Applies rules i-iv with precomputed cutoffs; does not recompute quantiles.
OutlierReport filter_with_cutoffs(const Dataset& ds, Band band, const OutlierCutoffs& cutoffs);

OutlierReport filter_outliers(const Dataset& ds, Band band, double tail_fraction = 0.01);

void write_removed_csv(const std::vector<RemovedRecord>& removed, const std::string& path);

}  // namespace nlcolor
