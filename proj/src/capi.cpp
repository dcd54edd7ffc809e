#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nlcolor.h"
#include "nlcolor/harness.hpp"
#include "nlcolor/outliers.hpp"

using namespace nlcolor;

struct nlc_grid {
  RasterGrid grid;
};
struct nlc_dataset {
  Dataset ds;
};
struct nlc_model {
  Model model;
};

namespace {

thread_local std::string g_last_error;

nlc_status fail(nlc_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

nlc_status classify(const std::exception& e) {
  std::string what = e.what();
  if (what.find("cannot open") != std::string::npos ||
      what.find("cannot write") != std::string::npos ||
      what.find("write failed") != std::string::npos)
    return fail(NLC_ERR_IO, what);
  if (what.find("mismatch") != std::string::npos || what.find("malformed") != std::string::npos ||
      what.find("non-numeric") != std::string::npos ||
      what.find("missing required column") != std::string::npos ||
      what.find("model file") != std::string::npos)
    return fail(NLC_ERR_FORMAT, what);
  return fail(NLC_ERR_INVALID, what);
}

template <typename Fn>
nlc_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NLC_OK;
  } catch (const Error& e) {
    return classify(e);
  } catch (const std::exception& e) {
    return fail(NLC_ERR_INTERNAL, e.what());
  }
}

nlc_status require(bool cond, const char* msg) {
  return cond ? NLC_OK : fail(NLC_ERR_INVALID, msg);
}

std::map<std::string, std::string> parse_options(const char* options) {
  std::map<std::string, std::string> out;
  if (!options) return out;
  std::stringstream ss(options);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error("bad option '" + tok + "' (expected key=value)");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

std::vector<int> active_from_drop(const std::string& drop) {
  std::vector<int> active = all_predictors();
  std::stringstream ss(drop);
  std::string name;
  while (std::getline(ss, name, '|')) {
    bool found = false;
    for (int p = 0; p < kNumPredictors; ++p) {
      if (name == kPredictorNames[p]) {
        std::erase(active, p);
        found = true;
      }
    }
    if (!found) throw Error("unknown predictor '" + name + "'");
  }
  if (active.empty()) throw Error("cannot drop every predictor");
  return active;
}

std::vector<int> drop_list(const std::string& drop) {
  std::vector<int> dropped;
  std::stringstream ss(drop);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    bool found = false;
    for (int p = 0; p < kNumPredictors; ++p)
      if (name == kPredictorNames[p]) {
        dropped.push_back(p);
        found = true;
      }
    if (!found) throw Error("unknown predictor '" + name + "'");
  }
  return dropped;
}

}  // namespace

extern "C" {

const char* nlc_last_error(void) { return g_last_error.c_str(); }
const char* nlc_version(void) { return "1.0.0"; }

/* grids */

nlc_status nlc_grid_read(const char* path, nlc_grid** out) {
  if (require(path && out, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] { *out = new nlc_grid{read_ascii_grid(path)}; });
}

nlc_status nlc_grid_write(const nlc_grid* grid, const char* path) {
  if (require(grid && path, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] { write_ascii_grid(grid->grid, path); });
}

void nlc_grid_free(nlc_grid* grid) { delete grid; }
int nlc_grid_ncols(const nlc_grid* grid) { return grid ? grid->grid.ncols : 0; }
int nlc_grid_nrows(const nlc_grid* grid) { return grid ? grid->grid.nrows : 0; }

nlc_status nlc_grid_aggregate(const nlc_grid* src, const nlc_grid* target, nlc_grid** mean_out,
                              nlc_grid** sd_out) {
  if (require(src && target && mean_out && sd_out, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    auto [mean, sd] = aggregate_to_grid(src->grid, target->grid);
    *mean_out = new nlc_grid{std::move(mean)};
    *sd_out = new nlc_grid{std::move(sd)};
  });
}

nlc_status nlc_grid_neighborhood_diffs(const nlc_grid* grid, nlc_grid** mean_diff_out,
                                       nlc_grid** max_diff_out) {
  if (require(grid && mean_diff_out && max_diff_out, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    auto [mean_d, max_d] = neighborhood_diffs(grid->grid);
    *mean_diff_out = new nlc_grid{std::move(mean_d)};
    *max_diff_out = new nlc_grid{std::move(max_d)};
  });
}

nlc_status nlc_write_rgb_ppm(const nlc_grid* r, const nlc_grid* g, const nlc_grid* b,
                             const char* path) {
  if (require(r && g && b && path, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] { write_rgb_ppm(r->grid, g->grid, b->grid, path); });
}

/* datasets */

nlc_status nlc_dataset_read_csv(const char* path, nlc_dataset** out) {
  if (require(path && out, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] { *out = new nlc_dataset{read_dataset_csv(path)}; });
}

nlc_status nlc_dataset_write_csv(const nlc_dataset* ds, const char* path) {
  if (require(ds && path, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] { write_dataset_csv(ds->ds, path); });
}

void nlc_dataset_free(nlc_dataset* ds) { delete ds; }
size_t nlc_dataset_size(const nlc_dataset* ds) { return ds ? ds->ds.size() : 0; }

nlc_status nlc_assemble(const nlc_grid* alan, const nlc_grid* hbase_mean,
                        const nlc_grid* hbase_sd, const nlc_grid* red, const nlc_grid* green,
                        const nlc_grid* blue, const nlc_grid* mask, nlc_dataset** out) {
  if (require(alan && hbase_mean && hbase_sd && out, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    *out = new nlc_dataset{assemble(alan->grid, hbase_mean->grid, hbase_sd->grid,
                                    red ? &red->grid : nullptr, green ? &green->grid : nullptr,
                                    blue ? &blue->grid : nullptr, mask ? &mask->grid : nullptr)};
  });
}

nlc_status nlc_ingest(const char* alan_path, const char* hbase_path, const char* red_path,
                      const char* green_path, const char* blue_path, const char* mask_path,
                      const char* out_csv) {
  if (require(alan_path && hbase_path && out_csv, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    CityConfig city;
    city.name = std::filesystem::path(out_csv).stem().string();
    city.alan = alan_path;
    city.hbase = hbase_path;
    if (red_path) city.red = red_path;
    if (green_path) city.green = green_path;
    if (blue_path) city.blue = blue_path;
    if (mask_path) city.mask = mask_path;
    write_dataset_csv(load_city(city), out_csv);
  });
}

/* outliers */

nlc_status nlc_filter_outliers(const char* in_csv, char band, double tail_fraction,
                               const char* kept_csv, const char* removed_csv,
                               double* fraction_removed_out) {
  if (require(in_csv && kept_csv && removed_csv, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    Dataset ds = read_dataset_csv(in_csv);
    OutlierReport rep = filter_outliers(ds, parse_band(std::string(1, band)), tail_fraction);
    write_dataset_csv(rep.kept, kept_csv);
    write_removed_csv(rep.removed, removed_csv);
    if (fraction_removed_out) *fraction_removed_out = rep.fraction_removed;
  });
}

/* models */

nlc_status nlc_fit(const char* model_kind, const char* in_csv, char band, const char* options,
                   uint64_t seed, const char* out_model_path) {
  if (require(model_kind && in_csv && out_model_path, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    Dataset ds = read_dataset_csv(in_csv);
    Band b = parse_band(std::string(1, band));
    ModelKind kind = parse_model_kind(model_kind);
    auto opt = parse_options(options);
    auto get = [&](const char* key, double fallback) {
      auto it = opt.find(key);
      return it == opt.end() ? fallback : std::stod(it->second);
    };
    std::vector<int> active = all_predictors();
    if (auto it = opt.find("drop"); it != opt.end()) active = active_from_drop(it->second);

    Model model;
    switch (kind) {
      case ModelKind::Ols:
        model = fit_ols(ds, b, active);
        break;
      case ModelKind::Kernel:
        model = fit_kernel(ds, b, static_cast<int>(get("folds", 5)), nullptr, seed, active);
        break;
      case ModelKind::Forest:
        model = fit_forest(ds, b, static_cast<int>(get("trees", 32)),
                           static_cast<int>(get("min_leaf", 5)), seed,
                           get("bootstrap", 1) != 0, active);
        break;
      case ModelKind::ElasticMap: {
        int g1 = 12, g2 = 12;
        if (auto it = opt.find("dims"); it != opt.end()) {
          if (std::sscanf(it->second.c_str(), "%dx%d", &g1, &g2) != 2)
            throw Error("bad dims option (expected e.g. 12x12)");
        }
        ElasticMap map = init_map(ds, b, g1, g2, get("bend", 0.05), get("stretch", 0.0));
        model = fit_map(std::move(map), ds, static_cast<int>(get("max_iter", 100)),
                        get("tol", 1e-4));
        break;
      }
    }
    save_model(model, out_model_path);
  });
}

nlc_status nlc_model_load(const char* path, nlc_model** out) {
  if (require(path && out, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] { *out = new nlc_model{load_model(path)}; });
}

void nlc_model_free(nlc_model* m) { delete m; }

nlc_status nlc_model_predict(const nlc_model* m, const double predictors[5], double* out) {
  if (require(m && predictors && out, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    std::array<double, kNumPredictors> p;
    std::memcpy(p.data(), predictors, sizeof(double) * kNumPredictors);
    *out = predict_model(m->model, p);
  });
}

nlc_status nlc_predict_csv(const char* model_path, const char* in_csv, const char* out_csv) {
  if (require(model_path && in_csv && out_csv, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    Model model = load_model(model_path);
    Dataset ds = read_dataset_csv(in_csv);
    std::ofstream out(out_csv);
    if (!out) throw Error("cannot write file: " + std::string(out_csv));
    out << "row,col,alan,alan_mean_diff,alan_max_diff,hbase_mean,hbase_sd,red,green,blue,"
           "predicted\n";
    for (const auto& o : ds.observations) {
      out << o.row << ',' << o.col << ',' << format_double(o.alan) << ','
          << format_double(o.alan_mean_diff) << ',' << format_double(o.alan_max_diff) << ','
          << format_double(o.hbase_mean) << ',' << format_double(o.hbase_sd) << ',';
      if (o.red) out << format_double(*o.red);
      out << ',';
      if (o.green) out << format_double(*o.green);
      out << ',';
      if (o.blue) out << format_double(*o.blue);
      out << ',' << format_double(predict_model(model, o)) << '\n';
    }
  });
}

nlc_status nlc_sweep(const char* in_csv, char band, const char* penalties, const char* out_dir) {
  if (require(in_csv && out_dir, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    Dataset ds = read_dataset_csv(in_csv);
    Band b = parse_band(std::string(1, band));
    std::vector<double> pens(kBendPenaltySweep.begin(), kBendPenaltySweep.end());
    if (penalties) {
      pens.clear();
      std::stringstream ss(penalties);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) pens.push_back(std::stod(tok));
      if (pens.empty()) throw Error("empty penalty list");
    }
    auto sweep = penalty_sweep(ds, b, pens);
    std::filesystem::create_directories(out_dir);
    std::ofstream table(std::string(out_dir) + "/sweep.csv");
    table << "mu_bend,fvu,converged\n";
    for (const auto& entry : sweep) {
      table << format_double(entry.mu_bend) << ',' << format_double(entry.fvu) << ','
            << (entry.map.converged ? 1 : 0) << '\n';
      std::ostringstream name;
      name << out_dir << "/elmap_" << band << "_" << entry.mu_bend << ".model";
      save_model(entry.map, name.str());
    }
  });
}

/* harness */

nlc_status nlc_run_experiment(const char* config_path, const char* out_dir, int write_json) {
  if (require(config_path, "null argument")) return NLC_ERR_INVALID;
  return guarded([&] {
    ExperimentConfig cfg = parse_config(config_path);
    if (out_dir) cfg.out_dir = out_dir;
    EvaluationReport rep = run_experiment(cfg);
    if (write_json) {
      nlohmann::ordered_json j;
      j["rows"] = nlohmann::ordered_json::array();
      for (const auto& r : rep.rows) {
        nlohmann::ordered_json o{{"train_city", r.train_city}, {"test_city", r.test_city},
                                 {"model", r.model},           {"band", std::string(1, band_letter(r.band))},
                                 {"phase", r.training ? "train" : "test"}};
        if (r.error.empty()) {
          o["n"] = r.scores.n;
          o["pearson"] = r.scores.pearson_r;
          o["wmse"] = r.scores.wmse;
          if (!std::isnan(r.contrast)) o["contrast"] = r.contrast;
        } else {
          o["error"] = r.error;
        }
        j["rows"].push_back(std::move(o));
      }
      j["consistency"] = nlohmann::ordered_json::array();
      for (const auto& c : rep.consistency) {
        nlohmann::ordered_json o{{"model", c.model},
                                 {"band", std::string(1, band_letter(c.band))},
                                 {"measure", c.measure}};
        if (c.literal_error.empty()) o["literal"] = c.literal;
        else o["literal_error"] = c.literal_error;
        if (!std::isnan(c.mean_ratio)) o["mean_ratio"] = c.mean_ratio;
        j["consistency"].push_back(std::move(o));
      }
      std::ofstream out(cfg.out_dir + "/report.json");
      out << j.dump(2) << '\n';
    }
  });
}

nlc_status nlc_colorize(const char* model_r_path, const char* model_g_path,
                        const char* model_b_path, const char* alan_path, const char* hbase_path,
                        const char* out_dir) {
  if (require(model_r_path && model_g_path && model_b_path && alan_path && hbase_path && out_dir,
              "null argument"))
    return NLC_ERR_INVALID;
  return guarded([&] {
    Model mr = load_model(model_r_path);
    Model mg = load_model(model_g_path);
    Model mb = load_model(model_b_path);
    RasterGrid alan = read_ascii_grid(alan_path);
    RasterGrid hbase = read_ascii_grid(hbase_path);
    RasterGrid hmean, hsd;
    if (hbase.same_geometry(alan)) {
      hmean = hbase;
      hsd = hbase;
      for (auto& v : hsd.values)
        if (v != hsd.nodata_value) v = 0.0;  // single contributor per cell
    } else {
      std::tie(hmean, hsd) = aggregate_to_grid(hbase, alan);
    }
    colorize(mr, mg, mb, alan, hmean, hsd, out_dir);
  });
}

nlc_status nlc_factor_contribution(const char* in_csv, char band, const char* model_kind,
                                   const char* drop, uint64_t seed, double* delta_r_out) {
  if (require(in_csv && model_kind && drop && delta_r_out, "null argument"))
    return NLC_ERR_INVALID;
  return guarded([&] {
    Dataset ds = read_dataset_csv(in_csv);
    std::vector<int> dropped = drop_list(drop);
    if (dropped.empty()) throw Error("empty drop list");
    *delta_r_out = factor_contribution(ds, parse_band(std::string(1, band)),
                                       parse_model_kind(model_kind), dropped, seed);
  });
}

nlc_status nlc_report_tables(const char* report_csv, const char* consistency_csv,
                             const char* out_txt) {
  if (require(report_csv && out_txt, "null argument")) return NLC_ERR_INVALID;
  (void)consistency_csv;  // consistency is recomputed from the score rows
  return guarded([&] {
    EvaluationReport rep = read_report_csv(report_csv);
    write_report_table(rep, out_txt);
  });
}

}  // extern "C"
