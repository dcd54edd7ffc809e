#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "nlcolor/elastic_map.hpp"
#include "nlcolor/metrics.hpp"
#include "nlcolor/regressors.hpp"

namespace nlcolor {

double pearson(const std::vector<double>& actual, const std::vector<double>& predicted) {
  if (actual.size() != predicted.size()) throw Error("pearson: length mismatch");
  size_t n = actual.size();
  if (n < 2) throw Error("pearson: need at least 2 values");
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) { mx += actual[i]; my += predicted[i]; }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (actual[i] - mx) * (predicted[i] - my);
    sxx += (actual[i] - mx) * (actual[i] - mx);
    syy += (predicted[i] - my) * (predicted[i] - my);
  }
  if (sxx == 0 || syy == 0) throw Error("pearson: zero-variance argument, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

double wmse(const std::vector<double>& actual, const std::vector<double>& predicted) {
  if (actual.size() != predicted.size()) throw Error("wmse: length mismatch");
  if (actual.empty()) throw Error("wmse: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) {
    if (!(actual[i] > 0)) throw Error("wmse: nonpositive actual value at index " + std::to_string(i));
    double e = predicted[i] - actual[i];
    acc += e * e / actual[i];
  }
  return acc / static_cast<double>(actual.size());
}

double contrast_similarity(const RasterGrid& a, const RasterGrid& b) {
  if (!a.same_geometry(b)) throw Error("contrast_similarity: geometry mismatch");

  constexpr int kHalf = 5;  // 11x11 window
  constexpr double kSigma = 1.5;
  constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

  double w[2 * kHalf + 1][2 * kHalf + 1];
  for (int dy = -kHalf; dy <= kHalf; ++dy)
    for (int dx = -kHalf; dx <= kHalf; ++dx)
      w[dy + kHalf][dx + kHalf] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));

  double sum_c = 0.0;
  long count = 0;
  for (int r = 0; r < a.nrows; ++r) {
    for (int c = 0; c < a.ncols; ++c) {
      if (a.is_nodata(r, c) || b.is_nodata(r, c)) continue;
      double sw = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
      for (int dy = -kHalf; dy <= kHalf; ++dy) {
        int rr = r + dy;
        if (rr < 0 || rr >= a.nrows) continue;
        for (int dx = -kHalf; dx <= kHalf; ++dx) {
          int cc = c + dx;
          if (cc < 0 || cc >= a.ncols) continue;
          if (a.is_nodata(rr, cc) || b.is_nodata(rr, cc)) continue;
          double weight = w[dy + kHalf][dx + kHalf];
          double va = a.at(rr, cc), vb = b.at(rr, cc);
          sw += weight;
          sa += weight * va;
          sb += weight * vb;
          saa += weight * va * va;
          sbb += weight * vb * vb;
        }
      }
      double ma = sa / sw, mb = sb / sw;
      double var_a = std::max(0.0, saa / sw - ma * ma);
      double var_b = std::max(0.0, sbb / sw - mb * mb);
      double sda = std::sqrt(var_a), sdb = std::sqrt(var_b);
      sum_c += (2.0 * sda * sdb + kC2) / (var_a + var_b + kC2);
      ++count;
    }
  }
  if (count == 0) throw Error("contrast_similarity: no valid pixels");
  return sum_c / static_cast<double>(count);
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) throw Error("consistency: need at least 2 values per list");
  double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

double consistency(const std::vector<double>& train, const std::vector<double>& test,
                   ConsistencyMode mode) {
  if (train.empty() || test.empty()) throw Error("consistency: empty list");
  if (mode == ConsistencyMode::Literal) {
    double sd_tr = sample_sd(train), sd_te = sample_sd(test);
    if (sd_tr == 0 || sd_te == 0)
      throw Error("consistency: zero SD, literal mode undefined");
    return std::sqrt((mean_of(train) / sd_tr) * (mean_of(test) / sd_te));
  }
  // MeanRatio: matched pairs
  if (train.size() != test.size())
    throw Error("consistency: mean-ratio mode needs matched lists of equal length");
  double log_acc = 0.0;
  for (size_t i = 0; i < train.size(); ++i) {
    double lo = std::min(std::abs(train[i]), std::abs(test[i]));
    double hi = std::max(std::abs(train[i]), std::abs(test[i]));
    if (hi == 0) throw Error("consistency: zero value in mean-ratio mode");
    log_acc += std::log(lo / hi);
  }
  return std::exp(log_acc / static_cast<double>(train.size()));
}

void compute_consistency(EvaluationReport& rep) {
  rep.consistency.clear();
  std::set<std::pair<std::string, Band>> groups;
  for (const auto& r : rep.rows)
    if (r.error.empty()) groups.insert({r.model, r.band});

  for (const auto& [model, band] : groups) {
    for (const std::string& measure : {"pearson", "wmse", "contrast"}) {
      std::vector<double> train, test, matched_train, matched_test;
      auto value_of = [&](const ScoreRow& r) {
        if (measure == "pearson") return r.scores.pearson_r;
        if (measure == "wmse") return r.scores.wmse;
        return r.contrast;
      };
      for (const auto& r : rep.rows) {
        if (r.model != model || r.band != band || !r.error.empty()) continue;
        double v = value_of(r);
        if (std::isnan(v)) continue;
        if (r.training) {
          train.push_back(v);
        } else {
          test.push_back(v);
          // pair the testing score with its own training-city score
          for (const auto& tr : rep.rows) {
            if (tr.training && tr.model == model && tr.band == band &&
                tr.train_city == r.train_city && tr.error.empty() && !std::isnan(value_of(tr))) {
              matched_train.push_back(value_of(tr));
              matched_test.push_back(v);
              break;
            }
          }
        }
      }
      if (train.empty() || test.empty()) continue;
      ConsistencyRow row;
      row.model = model;
      row.band = band;
      row.measure = measure;
      try {
        row.literal = consistency(train, test, ConsistencyMode::Literal);
      } catch (const Error& e) {
        row.literal_error = e.what();
      }
      if (!matched_train.empty())
        row.mean_ratio = consistency(matched_train, matched_test, ConsistencyMode::MeanRatio);
      rep.consistency.push_back(std::move(row));
    }
  }
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "ols" || s == "linear") return ModelKind::Ols;
  if (s == "kernel") return ModelKind::Kernel;
  if (s == "forest" || s == "rf") return ModelKind::Forest;
  if (s == "elmap" || s == "elastic" || s == "elasticmap") return ModelKind::ElasticMap;
  throw Error("unknown model kind '" + s + "' (expected ols, kernel, forest or elmap)");
}

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Ols: return "ols";
    case ModelKind::Kernel: return "kernel";
    case ModelKind::Forest: return "forest";
    default: return "elmap";
  }
}

namespace {

std::vector<double> fit_predict(const Dataset& ds, Band band, ModelKind kind,
                                const std::vector<int>& active, std::uint64_t seed) {
  std::vector<double> pred(ds.size());
  switch (kind) {
    case ModelKind::Ols: {
      LinearModel m = fit_ols(ds, band, active);
      for (size_t i = 0; i < ds.size(); ++i) pred[i] = predict(m, ds.observations[i]);
      break;
    }
    case ModelKind::Kernel: {
      KernelModel m = fit_kernel(ds, band, 5, nullptr, seed, active);
      for (size_t i = 0; i < ds.size(); ++i) pred[i] = predict(m, ds.observations[i]);
      break;
    }
    case ModelKind::Forest: {
      ForestModel m = fit_forest(ds, band, 32, 5, seed, true, active);
      for (size_t i = 0; i < ds.size(); ++i) pred[i] = predict(m, ds.observations[i]);
      break;
    }
    case ModelKind::ElasticMap: {
      // excluded predictors are flattened to their mean: they carry no
      // information and contribute nothing to projection distances
      Dataset flattened = ds;
      std::vector<int> dropped;
      for (int p = 0; p < kNumPredictors; ++p)
        if (std::find(active.begin(), active.end(), p) == active.end()) dropped.push_back(p);
      for (int p : dropped) {
        double mean = 0;
        for (const auto& o : ds.observations) mean += o.predictors()[p];
        mean /= static_cast<double>(ds.size());
        for (auto& o : flattened.observations) {
          switch (p) {
            case 0: o.alan = mean; break;
            case 1: o.alan_mean_diff = mean; break;
            case 2: o.alan_max_diff = mean; break;
            case 3: o.hbase_mean = mean; break;
            default: o.hbase_sd = mean; break;
          }
        }
      }
      ElasticMap m = fit_map(init_map(flattened, band), flattened);
      for (size_t i = 0; i < ds.size(); ++i)
        pred[i] = project_impute(m, flattened.observations[i]);
      break;
    }
  }
  return pred;
}

}  // namespace

double factor_contribution(const Dataset& ds_all, Band band, ModelKind kind,
                           const std::vector<int>& predictors_to_drop, std::uint64_t seed) {
  if (predictors_to_drop.size() >= kNumPredictors)
    throw Error("factor_contribution: cannot drop every predictor");
  std::vector<int> reduced;
  for (int p = 0; p < kNumPredictors; ++p)
    if (std::find(predictors_to_drop.begin(), predictors_to_drop.end(), p) ==
        predictors_to_drop.end())
      reduced.push_back(p);

  std::vector<double> actual(ds_all.size());
  for (size_t i = 0; i < ds_all.size(); ++i) actual[i] = *ds_all.observations[i].band(band);

  double r_full = pearson(actual, fit_predict(ds_all, band, kind, all_predictors(), seed));
  double r_reduced = pearson(actual, fit_predict(ds_all, band, kind, reduced, seed));
  return r_full - r_reduced;
}

// ---------------------------------------------------------------------------
// report serialization

namespace {

std::string nan_or(double v) { return std::isnan(v) ? "" : format_double(v); }

}  // namespace

void write_report_csv(const EvaluationReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << "train_city,test_city,model,band,phase,n,pearson,wmse,contrast,error\n";
  for (const auto& r : rep.rows) {
    out << r.train_city << ',' << r.test_city << ',' << r.model << ',' << band_letter(r.band)
        << ',' << (r.training ? "train" : "test") << ',';
    if (r.error.empty()) {
      out << r.scores.n << ',' << format_double(r.scores.pearson_r) << ','
          << format_double(r.scores.wmse) << ',' << nan_or(r.contrast) << ',';
    } else {
      out << ",,,," << r.error;
    }
    out << '\n';
  }
}

EvaluationReport read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report file: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("train_city,test_city,model,band,phase,n,pearson,wmse,contrast", 0) != 0)
    throw Error(path + ": not a report CSV");
  EvaluationReport rep;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') { f.push_back(cur); cur.clear(); }
      else if (ch != '\r') cur.push_back(ch);
    }
    f.push_back(cur);
    if (f.size() < 10) throw Error(path + ":" + std::to_string(line_no) + ": too few fields");
    ScoreRow r;
    r.train_city = f[0];
    r.test_city = f[1];
    r.model = f[2];
    r.band = parse_band(f[3]);
    r.training = f[4] == "train";
    if (!f[9].empty() && f[5].empty()) {
      r.error = f[9];
    } else {
      r.scores.n = std::stol(f[5]);
      r.scores.pearson_r = std::stod(f[6]);
      r.scores.wmse = std::stod(f[7]);
      if (!f[8].empty()) r.contrast = std::stod(f[8]);
    }
    rep.rows.push_back(std::move(r));
  }
  compute_consistency(rep);
  return rep;
}

void write_consistency_csv(const EvaluationReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << "model,band,measure,literal,mean_ratio,literal_error\n";
  for (const auto& c : rep.consistency) {
    out << c.model << ',' << band_letter(c.band) << ',' << c.measure << ','
        << nan_or(c.literal) << ',' << nan_or(c.mean_ratio) << ',' << c.literal_error << '\n';
  }
}

void write_report_table(const EvaluationReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);

  std::vector<std::string> train_cities;
  for (const auto& r : rep.rows)
    if (std::find(train_cities.begin(), train_cities.end(), r.train_city) == train_cities.end())
      train_cities.push_back(r.train_city);

  char buf[256];
  for (const auto& city : train_cities) {
    out << "Trained on " << city << "\n";
    std::snprintf(buf, sizeof(buf), "  %-14s %-16s %-5s %-6s %10s %10s %10s\n", "tested on",
                  "model", "band", "phase", "r", "WMSE", "Csim");
    out << buf;
    for (const auto& r : rep.rows) {
      if (r.train_city != city) continue;
      if (!r.error.empty()) {
        std::snprintf(buf, sizeof(buf), "  %-14s %-16s %-5c %-6s failed: %s\n",
                      r.test_city.c_str(), r.model.c_str(), band_letter(r.band),
                      r.training ? "train" : "test", r.error.c_str());
        out << buf;
        continue;
      }
      char csim[24];
      if (std::isnan(r.contrast))
        std::snprintf(csim, sizeof(csim), "-");
      else
        std::snprintf(csim, sizeof(csim), "%.4f", r.contrast);
      std::snprintf(buf, sizeof(buf), "  %-14s %-16s %-5c %-6s %10.4f %10.4f %10s\n",
                    r.test_city.c_str(), r.model.c_str(), band_letter(r.band),
                    r.training ? "train" : "test", r.scores.pearson_r, r.scores.wmse, csim);
      out << buf;
    }
    out << "\n";
  }

  if (!rep.consistency.empty()) {
    out << "Consistency (per model, band, measure)\n";
    std::snprintf(buf, sizeof(buf), "  %-16s %-5s %-9s %12s %12s\n", "model", "band", "measure",
                  "literal", "mean-ratio");
    out << buf;
    for (const auto& c : rep.consistency) {
      std::snprintf(buf, sizeof(buf), "  %-16s %-5c %-9s %12s %12s\n", c.model.c_str(),
                    band_letter(c.band), c.measure.c_str(), nan_or(c.literal).substr(0, 12).c_str(),
                    nan_or(c.mean_ratio).substr(0, 12).c_str());
      out << buf;
    }
  }
}

}  // namespace nlcolor
