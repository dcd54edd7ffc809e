// Command-line front end; links only the C API.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlcolor.h"

namespace {

int report_error(nlc_status st) {
  std::fprintf(stderr, "error [%d]: %s\n", static_cast<int>(st), nlc_last_error());
  return 1;
}

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::string default_out_dir() {
  const char* env = std::getenv("NLCOLOR_OUT");
  return env ? env : "nlcolor-out";
}

struct GridHandle {
  nlc_grid* g = nullptr;
  ~GridHandle() { nlc_grid_free(g); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlcolor: predict RGB nighttime-light rasters from panchromatic ALAN imagery"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --seed appear after the subcommand name too
  unsigned long long seed = 0;
  app.add_option("--seed", seed, "master RNG seed")->capture_default_str();

  std::string in, out, band = "R", model = "ols", config;
  double tail = 0.01;

  auto* ingest = app.add_subcommand("ingest", "rasters -> dataset CSV (aggregate + features)");
  std::string alan, hbase, red, green, blue, mask;
  ingest->add_option("--alan", alan, "panchromatic ALAN grid")->required();
  ingest->add_option("--hbase", hbase, "HBASE grid at native resolution")->required();
  ingest->add_option("--red", red, "red band grid");
  ingest->add_option("--green", green, "green band grid");
  ingest->add_option("--blue", blue, "blue band grid");
  ingest->add_option("--mask", mask, "study-area mask grid (0/nodata excludes)");
  ingest->add_option("--out", out, "output dataset CSV")->required();

  auto* features = app.add_subcommand("features", "already-aggregated grids -> dataset CSV");
  std::string hbase_mean, hbase_sd;
  features->add_option("--alan", alan, "ALAN grid at target geometry")->required();
  features->add_option("--hbase-mean", hbase_mean, "HBASE mean grid")->required();
  features->add_option("--hbase-sd", hbase_sd, "HBASE SD grid")->required();
  features->add_option("--red", red, "red band grid");
  features->add_option("--green", green, "green band grid");
  features->add_option("--blue", blue, "blue band grid");
  features->add_option("--mask", mask, "mask grid");
  features->add_option("--out", out, "output dataset CSV")->required();

  auto* outliers = app.add_subcommand("outliers", "four-rule percentile outlier filter");
  std::string kept_csv, removed_csv;
  outliers->add_option("--in", in, "dataset CSV")->required();
  outliers->add_option("--band", band, "response band (R, G or B)")->required();
  outliers->add_option("--tail", tail, "tail fraction per side")->capture_default_str();
  outliers->add_option("--out-kept", kept_csv, "kept rows CSV (default kept.csv)");
  outliers->add_option("--out-removed", removed_csv, "removed rows CSV (default removed.csv)");

  auto* fit = app.add_subcommand("fit", "fit one model and serialize it");
  double bend = 0.05, stretch = 0.0, tol = 1e-4;
  int trees = 32, min_leaf = 5, folds = 5, max_iter = 100;
  std::string dims = "12x12", drop;
  fit->add_option("--model", model, "ols | kernel | forest | elmap")->required();
  fit->add_option("--in", in, "training dataset CSV")->required();
  fit->add_option("--band", band, "response band")->required();
  fit->add_option("--out", out, "output model file")->required();
  fit->add_option("--bend", bend, "elastic-map bending penalty")->capture_default_str();
  fit->add_option("--stretch", stretch, "elastic-map stretching penalty")->capture_default_str();
  fit->add_option("--dims", dims, "elastic-map grid, e.g. 12x12")->capture_default_str();
  fit->add_option("--max-iter", max_iter, "elastic-map iteration cap")->capture_default_str();
  fit->add_option("--tol", tol, "elastic-map convergence tolerance")->capture_default_str();
  fit->add_option("--trees", trees, "forest size")->capture_default_str();
  fit->add_option("--min-leaf", min_leaf, "minimum leaf size")->capture_default_str();
  fit->add_option("--folds", folds, "kernel CV folds")->capture_default_str();
  fit->add_option("--drop", drop, "predictors to exclude, separated by '|'");

  auto* predict = app.add_subcommand("predict", "apply a saved model to a dataset CSV");
  std::string model_file;
  predict->add_option("--model-file", model_file, "serialized model")->required();
  predict->add_option("--in", in, "dataset CSV")->required();
  predict->add_option("--out", out, "output CSV with predicted column")->required();

  auto* colorize = app.add_subcommand("colorize", "panchromatic scene -> RGB grids + image");
  std::string model_r, model_g, model_b;
  colorize->add_option("--model-r", model_r, "red-band model file")->required();
  colorize->add_option("--model-g", model_g, "green-band model file")->required();
  colorize->add_option("--model-b", model_b, "blue-band model file")->required();
  colorize->add_option("--alan", alan, "panchromatic ALAN grid")->required();
  colorize->add_option("--hbase", hbase, "HBASE grid")->required();
  colorize->add_option("--out", out, "output directory");

  auto* evaluate = app.add_subcommand("evaluate", "run the cross-city experiment");
  bool json = false;
  evaluate->add_option("--config", config, "experiment config file")->required();
  evaluate->add_option("--out", out, "override output directory");
  evaluate->add_flag("--json", json, "also write report.json");

  auto* contribute = app.add_subcommand("contribute", "predictor-exclusion r change");
  contribute->add_option("--in", in, "pooled dataset CSV")->required();
  contribute->add_option("--band", band, "response band")->required();
  contribute->add_option("--model", model, "model kind")->capture_default_str();
  contribute->add_option("--drop", drop, "predictors to drop, comma separated")->required();

  auto* sweep = app.add_subcommand("sweep", "elastic-map bending penalty sweep");
  std::string penalties;
  sweep->add_option("--in", in, "dataset CSV")->required();
  sweep->add_option("--band", band, "response band")->required();
  sweep->add_option("--penalties", penalties, "comma-separated penalties (default: standard nine)");
  sweep->add_option("--out", out, "output directory");

  auto* report = app.add_subcommand("report", "render report CSV as text tables");
  std::string report_csv, consistency_csv;
  report->add_option("--report", report_csv, "report.csv from evaluate")->required();
  report->add_option("--consistency", consistency_csv, "consistency.csv (optional)");
  report->add_option("--out", out, "output text file")->required();

  if (argc <= 1) {
    std::puts(app.help().c_str());
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  nlc_status st = NLC_OK;

  if (*ingest) {
    st = nlc_ingest(alan.c_str(), hbase.c_str(), opt_cstr(red), opt_cstr(green), opt_cstr(blue),
                    opt_cstr(mask), out.c_str());
  } else if (*features) {
    GridHandle ga, gm, gs, gr, gg, gb, gmask;
    auto load = [&](const std::string& path, GridHandle& h) {
      return path.empty() ? NLC_OK : nlc_grid_read(path.c_str(), &h.g);
    };
    st = nlc_grid_read(alan.c_str(), &ga.g);
    if (!st) st = nlc_grid_read(hbase_mean.c_str(), &gm.g);
    if (!st) st = nlc_grid_read(hbase_sd.c_str(), &gs.g);
    if (!st) st = load(red, gr);
    if (!st) st = load(green, gg);
    if (!st) st = load(blue, gb);
    if (!st) st = load(mask, gmask);
    nlc_dataset* ds = nullptr;
    if (!st) st = nlc_assemble(ga.g, gm.g, gs.g, gr.g, gg.g, gb.g, gmask.g, &ds);
    if (!st) st = nlc_dataset_write_csv(ds, out.c_str());
    nlc_dataset_free(ds);
  } else if (*outliers) {
    if (kept_csv.empty()) kept_csv = "kept.csv";
    if (removed_csv.empty()) removed_csv = "removed.csv";
    double fraction = 0.0;
    st = nlc_filter_outliers(in.c_str(), band[0], tail, kept_csv.c_str(), removed_csv.c_str(),
                             &fraction);
    if (!st) std::printf("removed fraction: %.6f\n", fraction);
  } else if (*fit) {
    char options[256];
    std::snprintf(options, sizeof(options),
                  "bend=%g,stretch=%g,dims=%s,max_iter=%d,tol=%g,trees=%d,min_leaf=%d,folds=%d%s%s",
                  bend, stretch, dims.c_str(), max_iter, tol, trees, min_leaf, folds,
                  drop.empty() ? "" : ",drop=", drop.c_str());
    st = nlc_fit(model.c_str(), in.c_str(), band[0], options, seed, out.c_str());
    if (!st) std::printf("model written to %s\n", out.c_str());
  } else if (*predict) {
    st = nlc_predict_csv(model_file.c_str(), in.c_str(), out.c_str());
  } else if (*colorize) {
    if (out.empty()) out = default_out_dir();
    st = nlc_colorize(model_r.c_str(), model_g.c_str(), model_b.c_str(), alan.c_str(),
                      hbase.c_str(), out.c_str());
  } else if (*evaluate) {
    st = nlc_run_experiment(config.c_str(), opt_cstr(out), json ? 1 : 0);
  } else if (*contribute) {
    double delta_r = 0.0;
    st = nlc_factor_contribution(in.c_str(), band[0], model.c_str(), drop.c_str(), seed,
                                 &delta_r);
    if (!st) std::printf("delta r: %.6f\n", delta_r);
  } else if (*sweep) {
    if (out.empty()) out = default_out_dir();
    st = nlc_sweep(in.c_str(), band[0], opt_cstr(penalties), out.c_str());
  } else if (*report) {
    st = nlc_report_tables(report_csv.c_str(), opt_cstr(consistency_csv), out.c_str());
  }

  return st == NLC_OK ? 0 : report_error(st);
}
