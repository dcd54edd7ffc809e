#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nlcolor/harness.hpp"
#include "nlcolor/outliers.hpp"

namespace fs = std::filesystem;

namespace nlcolor {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  try {
    size_t pos;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw Error("config: bad numeric value '" + s + "' for " + key);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);

  ExperimentConfig cfg;
  CityConfig* city = nullptr;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(path + ":" + std::to_string(line_no) + ": unterminated section header");
      auto inner = trim(line.substr(1, line.size() - 2));
      if (inner.rfind("city", 0) != 0)
        throw Error(path + ":" + std::to_string(line_no) + ": unknown section '" + inner + "'");
      std::string name = trim(inner.substr(4));
      if (name.empty())
        throw Error(path + ":" + std::to_string(line_no) + ": city section needs a name");
      cfg.cities.push_back({});
      city = &cfg.cities.back();
      city->name = name;
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (city) {
      if (key == "dataset") city->dataset_csv = value;
      else if (key == "alan") city->alan = value;
      else if (key == "hbase") city->hbase = value;
      else if (key == "red") city->red = value;
      else if (key == "green") city->green = value;
      else if (key == "blue") city->blue = value;
      else if (key == "mask") city->mask = value;
      else throw Error(path + ":" + std::to_string(line_no) + ": unknown city key '" + key + "'");
      continue;
    }

    if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "out") cfg.out_dir = value;
    else if (key == "tail") cfg.tail_fraction = to_double(value, key);
    else if (key == "bands") {
      cfg.bands.clear();
      for (const auto& b : split(value, ',')) cfg.bands.push_back(parse_band(b));
    } else if (key == "models") {
      cfg.models.clear();
      for (const auto& m : split(value, ',')) cfg.models.push_back(parse_model_kind(m));
    } else if (key == "elmap_dims") {
      auto parts = split(value, 'x');
      if (parts.size() != 2) throw Error("config: elmap_dims must look like 12x12");
      cfg.elmap_g1 = std::stoi(parts[0]);
      cfg.elmap_g2 = std::stoi(parts[1]);
    } else if (key == "elmap_penalties") {
      cfg.elmap_penalties.clear();
      for (const auto& p : split(value, ',')) cfg.elmap_penalties.push_back(to_double(p, key));
    } else if (key == "elmap_max_iter") cfg.elmap_max_iter = std::stoi(value);
    else if (key == "elmap_tol") cfg.elmap_tol = to_double(value, key);
    else if (key == "kernel_folds") cfg.kernel_folds = std::stoi(value);
    else if (key == "forest_trees") cfg.forest_trees = std::stoi(value);
    else if (key == "forest_min_leaf") cfg.forest_min_leaf = std::stoi(value);
    else if (key == "write_images") cfg.write_images = value != "0" && value != "false";
    else throw Error(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
  }

  if (cfg.cities.size() < 2) throw Error("config: need at least 2 cities for cross-testing");
  return cfg;
}

Dataset load_city(const CityConfig& city, RasterGrid* geometry_out) {
  if (!city.dataset_csv.empty()) {
    Dataset ds = read_dataset_csv(city.dataset_csv);
    ds.name = city.name;
    return ds;
  }
  if (city.alan.empty() || city.hbase.empty())
    throw Error("city '" + city.name + "': need either dataset= or alan= plus hbase=");

  RasterGrid alan = read_ascii_grid(city.alan);
  RasterGrid hbase = read_ascii_grid(city.hbase);
  auto [hmean, hsd] = aggregate_to_grid(hbase, alan);

  auto load_band = [&](const std::string& p) -> std::optional<RasterGrid> {
    if (p.empty()) return std::nullopt;
    RasterGrid g = read_ascii_grid(p);
    if (g.same_geometry(alan)) return g;
    return aggregate_to_grid(g, alan).first;
  };
  auto r = load_band(city.red);
  auto g = load_band(city.green);
  auto b = load_band(city.blue);
  std::optional<RasterGrid> mask;
  if (!city.mask.empty()) {
    mask = read_ascii_grid(city.mask);
    if (!mask->same_geometry(alan))
      throw Error("city '" + city.name + "': mask grid must share the ALAN geometry");
  }

  if (geometry_out) *geometry_out = alan;
  Dataset ds = assemble(alan, hmean, hsd, r ? &*r : nullptr, g ? &*g : nullptr,
                        b ? &*b : nullptr, mask ? &*mask : nullptr, city.name);
  if (ds.observations.empty()) throw Error("city '" + city.name + "': no valid cells");
  return ds;
}

namespace {

struct FittedEntry {
  std::string label;  // "ols", "kernel", "forest", "elmap[0.05]"
  Model model;
};

RasterGrid grid_from_cells(const Dataset& ds, const RasterGrid* geom,
                           const std::vector<double>* values, Band band) {
  int nrows = 0, ncols = 0;
  if (geom) {
    nrows = geom->nrows;
    ncols = geom->ncols;
  } else {
    for (const auto& o : ds.observations) {
      nrows = std::max(nrows, o.row + 1);
      ncols = std::max(ncols, o.col + 1);
    }
  }
  RasterGrid g(ncols, nrows);
  if (geom) {
    g.xll = geom->xll;
    g.yll = geom->yll;
    g.cellsize = geom->cellsize;
  }
  g.nodata_value = -9999.0;
  std::fill(g.values.begin(), g.values.end(), g.nodata_value);
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto& o = ds.observations[i];
    g.at(o.row, o.col) = values ? (*values)[i] : *o.band(band);
  }
  return g;
}

std::string penalty_label(double mu) {
  std::ostringstream ss;
  ss << "elmap[" << mu << "]";
  return ss.str();
}

}  // namespace

EvaluationReport run_experiment(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  fs::create_directories(cfg.out_dir + "/models");
  fs::create_directories(cfg.out_dir + "/grids");
  if (cfg.write_images) fs::create_directories(cfg.out_dir + "/images");
  std::ofstream log(cfg.out_dir + "/run.log");

  struct CityData {
    CityConfig cfg;
    Dataset full;
    RasterGrid geometry;
    bool has_geometry = false;
    std::map<char, Dataset> kept;  // per band after outlier filtering
    std::map<char, double> removed_fraction;
  };
  std::vector<CityData> cities;
  for (const auto& cc : cfg.cities) {
    CityData cd;
    cd.cfg = cc;
    RasterGrid geom;
    cd.full = load_city(cc, &geom);
    if (!cc.alan.empty()) {
      cd.geometry = geom;
      cd.has_geometry = true;
    }
    for (Band band : cfg.bands) {
      OutlierReport rep = filter_outliers(cd.full, band, cfg.tail_fraction);
      write_removed_csv(rep.removed, cfg.out_dir + "/" + cc.name + "_" +
                                         std::string(1, band_letter(band)) + "_removed.csv");
      cd.kept[band_letter(band)] = std::move(rep.kept);
      cd.removed_fraction[band_letter(band)] = rep.fraction_removed;
      log << cc.name << " band " << band_letter(band) << ": " << cd.full.size()
          << " observations, removed fraction " << format_double(rep.fraction_removed) << "\n";
    }
    cities.push_back(std::move(cd));
  }

  EvaluationReport report;

  auto score_cell = [&](const std::string& train_name, const CityData& test_city,
                        const std::string& label, Band band, bool training, const Model& model) {
    ScoreRow row;
    row.train_city = train_name;
    row.test_city = test_city.cfg.name;
    row.model = label;
    row.band = band;
    row.training = training;
    try {
      const Dataset& ds = test_city.kept.at(band_letter(band));
      if (ds.observations.empty()) throw Error("empty dataset after outlier filtering");
      std::vector<double> actual(ds.size()), pred(ds.size());
      for (size_t i = 0; i < ds.size(); ++i) {
        actual[i] = *ds.observations[i].band(band);
        pred[i] = predict_model(model, ds.observations[i]);
      }
      row.scores.n = static_cast<long>(ds.size());
      row.scores.pearson_r = pearson(actual, pred);
      row.scores.wmse = wmse(actual, pred);
      const RasterGrid* geom = test_city.has_geometry ? &test_city.geometry : nullptr;
      RasterGrid actual_grid = grid_from_cells(ds, geom, nullptr, band);
      RasterGrid pred_grid = grid_from_cells(ds, geom, &pred, band);
      row.contrast = contrast_similarity(actual_grid, pred_grid);
    } catch (const Error& e) {
      row.error = e.what();
      log << "FAILED " << train_name << "->" << row.test_city << " " << label << " "
          << band_letter(band) << ": " << e.what() << "\n";
    }
    report.rows.push_back(std::move(row));
  };

  for (const auto& train : cities) {
    for (Band band : cfg.bands) {
      const Dataset& tds = train.kept.at(band_letter(band));
      std::vector<FittedEntry> fitted;
      for (ModelKind kind : cfg.models) {
        try {
          switch (kind) {
            case ModelKind::Ols:
              fitted.push_back({"ols", fit_ols(tds, band)});
              break;
            case ModelKind::Kernel:
              fitted.push_back(
                  {"kernel", fit_kernel(tds, band, cfg.kernel_folds, nullptr, cfg.seed)});
              break;
            case ModelKind::Forest:
              fitted.push_back({"forest", fit_forest(tds, band, cfg.forest_trees,
                                                     cfg.forest_min_leaf, cfg.seed)});
              break;
            case ModelKind::ElasticMap: {
              auto sweep = penalty_sweep(tds, band, cfg.elmap_penalties, cfg.elmap_g1,
                                         cfg.elmap_g2, cfg.elmap_max_iter, cfg.elmap_tol);
              for (auto& entry : sweep)
                fitted.push_back({penalty_label(entry.mu_bend), std::move(entry.map)});
              break;
            }
          }
        } catch (const Error& e) {
          ScoreRow row;
          row.train_city = train.cfg.name;
          row.test_city = train.cfg.name;
          row.model = model_kind_name(kind);
          row.band = band;
          row.training = true;
          row.error = std::string("fit failed: ") + e.what();
          report.rows.push_back(std::move(row));
          log << "FIT FAILED " << train.cfg.name << " " << model_kind_name(kind) << " "
              << band_letter(band) << ": " << e.what() << "\n";
        }
      }

      for (const auto& f : fitted) {
        save_model(f.model, cfg.out_dir + "/models/" + train.cfg.name + "_" +
                                std::string(1, band_letter(band)) + "_" + f.label + ".model");
        score_cell(train.cfg.name, train, f.label, band, true, f.model);
        for (const auto& test : cities) {
          if (&test == &train) continue;
          score_cell(train.cfg.name, test, f.label, band, false, f.model);
        }
      }

      // predicted band rasters for visual comparison
      for (const auto& f : fitted) {
        for (const auto& test : cities) {
          const Dataset& ds = test.kept.at(band_letter(band));
          if (ds.observations.empty()) continue;
          std::vector<double> pred(ds.size());
          for (size_t i = 0; i < ds.size(); ++i)
            pred[i] = std::clamp(predict_model(f.model, ds.observations[i]), 0.0, 255.0);
          const RasterGrid* geom = test.has_geometry ? &test.geometry : nullptr;
          RasterGrid grid = grid_from_cells(ds, geom, &pred, band);
          write_ascii_grid(grid, cfg.out_dir + "/grids/" + train.cfg.name + "_to_" +
                                     test.cfg.name + "_" + f.label + "_" +
                                     std::string(1, band_letter(band)) + ".asc");
        }
      }
    }
  }

  // composite images per (train, test, model) when all three bands were run
  if (cfg.write_images && cfg.bands.size() == 3) {
    std::vector<std::string> labels;
    for (const auto& r : report.rows)
      if (std::find(labels.begin(), labels.end(), r.model) == labels.end())
        labels.push_back(r.model);
    for (const auto& train : cities) {
      for (const auto& test : cities) {
        for (const auto& label : labels) {
          std::array<RasterGrid, 3> bands_grids;
          bool ok = true;
          for (int bi = 0; bi < 3 && ok; ++bi) {
            std::string p = cfg.out_dir + "/grids/" + train.cfg.name + "_to_" + test.cfg.name +
                            "_" + label + "_" + std::string(1, "RGB"[bi]) + ".asc";
            if (!fs::exists(p)) ok = false;
            else bands_grids[static_cast<size_t>(bi)] = read_ascii_grid(p);
          }
          if (!ok) continue;
          write_rgb_ppm(bands_grids[0], bands_grids[1], bands_grids[2],
                        cfg.out_dir + "/images/" + train.cfg.name + "_to_" + test.cfg.name + "_" +
                            label + ".ppm");
        }
      }
    }
    for (const auto& test : cities) {
      bool ok = true;
      std::array<RasterGrid, 3> actual;
      for (int bi = 0; bi < 3 && ok; ++bi) {
        Band band = bi == 0 ? Band::R : (bi == 1 ? Band::G : Band::B);
        auto it = test.kept.find(band_letter(band));
        if (it == test.kept.end() || it->second.observations.empty() ||
            !it->second.has_band(band)) {
          ok = false;
          break;
        }
        actual[static_cast<size_t>(bi)] = grid_from_cells(
            it->second, test.has_geometry ? &test.geometry : nullptr, nullptr, band);
      }
      if (ok)
        write_rgb_ppm(actual[0], actual[1], actual[2],
                      cfg.out_dir + "/images/actual_" + test.cfg.name + ".ppm");
    }
  }

  compute_consistency(report);
  write_report_csv(report, cfg.out_dir + "/report.csv");
  write_consistency_csv(report, cfg.out_dir + "/consistency.csv");
  write_report_table(report, cfg.out_dir + "/tables.txt");
  return report;
}

void colorize(const Model& model_r, const Model& model_g, const Model& model_b,
              const RasterGrid& alan, const RasterGrid& hbase_mean, const RasterGrid& hbase_sd,
              const std::string& out_dir, const std::string& stem) {
  if (model_band(model_r) != Band::R || model_band(model_g) != Band::G ||
      model_band(model_b) != Band::B)
    throw Error("colorize: models must target bands R, G and B respectively");

  Dataset ds = assemble(alan, hbase_mean, hbase_sd, nullptr, nullptr, nullptr, nullptr);
  std::array<const Model*, 3> models = {&model_r, &model_g, &model_b};
  std::array<RasterGrid, 3> grids;
  for (int bi = 0; bi < 3; ++bi) {
    RasterGrid g(alan.ncols, alan.nrows);
    g.xll = alan.xll;
    g.yll = alan.yll;
    g.cellsize = alan.cellsize;
    g.nodata_value = -9999.0;
    std::fill(g.values.begin(), g.values.end(), g.nodata_value);
    for (const auto& o : ds.observations)
      g.at(o.row, o.col) = std::clamp(predict_model(*models[static_cast<size_t>(bi)], o), 0.0, 255.0);
    grids[static_cast<size_t>(bi)] = std::move(g);
  }

  fs::create_directories(out_dir);
  write_ascii_grid(grids[0], out_dir + "/" + stem + "_R.asc");
  write_ascii_grid(grids[1], out_dir + "/" + stem + "_G.asc");
  write_ascii_grid(grids[2], out_dir + "/" + stem + "_B.asc");
  write_rgb_ppm(grids[0], grids[1], grids[2], out_dir + "/" + stem + ".ppm");
}

}  // namespace nlcolor
