#include "nlcolor/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace nlcolor {

double quantile_type7(std::vector<double> v, double q) {
  if (v.empty()) throw Error("quantile of empty sample");
  std::sort(v.begin(), v.end());
  if (q <= 0) return v.front();
  if (q >= 1) return v.back();
  double h = q * (static_cast<double>(v.size()) - 1.0);
  size_t lo = static_cast<size_t>(std::floor(h));
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

namespace {

double variable(const Observation& o, Band band, int idx) {
  if (idx < kNumPredictors) return o.predictors()[idx];
  return *o.band(band);
}

int pearson_sign(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0;  // degenerate variable: rules iii/iv never fire
  return sxy > 0 ? 1 : (sxy < 0 ? -1 : 0);
}

}  // namespace

OutlierCutoffs compute_cutoffs(const Dataset& ds, Band band, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 0.5))
    throw Error("tail_fraction must lie in (0, 0.5)");
  if (!ds.has_band(band))
    throw Error(std::string("band ") + band_letter(band) + " is not populated in the dataset");
  if (ds.observations.empty()) throw Error("empty dataset");

  OutlierCutoffs cut;
  cut.tail_fraction = tail_fraction;
  std::vector<double> col(ds.size());
  std::vector<double> response(ds.size());
  for (size_t i = 0; i < ds.size(); ++i) response[i] = *ds.observations[i].band(band);

  for (int v = 0; v < 6; ++v) {
    for (size_t i = 0; i < ds.size(); ++i) col[i] = variable(ds.observations[i], band, v);
    cut.lower[v] = quantile_type7(col, tail_fraction);
    cut.upper[v] = quantile_type7(col, 1.0 - tail_fraction);
    if (v < kNumPredictors) cut.corr_sign[v] = pearson_sign(col, response);
  }
  return cut;
}

OutlierReport filter_with_cutoffs(const Dataset& ds, Band band, const OutlierCutoffs& cut) {
  if (!ds.has_band(band))
    throw Error(std::string("band ") + band_letter(band) + " is not populated in the dataset");

  OutlierReport rep;
  rep.cutoffs = cut;
  rep.kept.name = ds.name;

  auto below = [&](int v, double x) { return x < cut.lower[v]; };
  auto above = [&](int v, double x) { return x > cut.upper[v]; };
  auto beyond = [&](int v, double x) { return below(v, x) || above(v, x); };

  for (const auto& o : ds.observations) {
    double y = *o.band(band);
    auto p = o.predictors();
    bool y_beyond = beyond(5, y);
    int first_pred_beyond = -1;
    bool any_pred_beyond = false;
    for (int v = 0; v < kNumPredictors; ++v) {
      if (beyond(v, p[v])) {
        any_pred_beyond = true;
        if (first_pred_beyond < 0) first_pred_beyond = v;
      }
    }

    RemovedRecord rec;
    rec.row = o.row;
    rec.col = o.col;

    // (i) predictor tail, response within the usual interval
    if (any_pred_beyond && !y_beyond) {
      rec.all_rules.push_back(OutlierRule::PredictorTail);
      if (rec.predictor < 0) rec.predictor = first_pred_beyond;
    }
    // (ii) response tail, all predictors within
    if (y_beyond && !any_pred_beyond)
      rec.all_rules.push_back(OutlierRule::ResponseTail);
    // (iii) opposite tails under positive association
    // (iv) same-side tails under negative association
    for (int v = 0; v < kNumPredictors; ++v) {
      bool pu = above(v, p[v]), pl = below(v, p[v]);
      bool yu = above(5, y), yl = below(5, y);
      if (cut.corr_sign[v] > 0 && ((pu && yl) || (pl && yu))) {
        rec.all_rules.push_back(OutlierRule::OppositeTails);
        if (rec.predictor < 0) rec.predictor = v;
      }
      if (cut.corr_sign[v] < 0 && ((pu && yu) || (pl && yl))) {
        rec.all_rules.push_back(OutlierRule::SameTails);
        if (rec.predictor < 0) rec.predictor = v;
      }
    }

    if (rec.all_rules.empty()) {
      rep.kept.observations.push_back(o);
    } else {
      rec.rule = rec.all_rules.front();
      if (rec.rule == OutlierRule::ResponseTail) rec.predictor = -1;
      rep.removed.push_back(std::move(rec));
    }
  }
  rep.fraction_removed =
      ds.observations.empty() ? 0.0
                              : static_cast<double>(rep.removed.size()) /
                                    static_cast<double>(ds.observations.size());
  return rep;
}

OutlierReport filter_outliers(const Dataset& ds, Band band, double tail_fraction) {
  return filter_with_cutoffs(ds, band, compute_cutoffs(ds, band, tail_fraction));
}

void write_removed_csv(const std::vector<RemovedRecord>& removed, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << "row,col,rule,predictor\n";
  for (const auto& r : removed) {
    out << r.row << ',' << r.col << ',' << static_cast<int>(r.rule) << ',';
    if (r.predictor >= 0) out << kPredictorNames[r.predictor];
    out << '\n';
  }
}

}  // namespace nlcolor
