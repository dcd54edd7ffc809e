#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "nlcolor/harness.hpp"
#include "nlcolor/outliers.hpp"
#include "test_support.hpp"

using namespace nlcolor;
using nlcolor::test::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::stringstream ss;
  ss << std::ifstream(path, std::ios::binary).rdbuf();
  return ss.str();
}

// Two-city experiment over CSV datasets; band R only, small elastic maps.
ExperimentConfig small_config(TempDir& tmp, const std::string& out_dir, std::uint64_t seed) {
  std::mt19937_64 rng(91);
  Dataset a = nlcolor::test::random_dataset(rng, 140, 8.0, "ac");
  Dataset b = nlcolor::test::random_dataset(rng, 130, 8.0, "bc");
  write_dataset_csv(a, tmp.file("a.csv"));
  write_dataset_csv(b, tmp.file("b.csv"));

  ExperimentConfig cfg;
  cfg.cities.push_back({"ac", tmp.file("a.csv"), "", "", "", "", "", ""});
  cfg.cities.push_back({"bc", tmp.file("b.csv"), "", "", "", "", "", ""});
  cfg.bands = {Band::R};
  cfg.elmap_g1 = 6;
  cfg.elmap_g2 = 6;
  cfg.elmap_penalties = {0.01, 0.1};
  cfg.seed = seed;
  cfg.out_dir = tmp.file(out_dir);
  cfg.write_images = false;
  return cfg;
}

}  // namespace

TEST_CASE("parse_config reads keys, sections and comments") {
  TempDir tmp("harness");
  std::ofstream(tmp.file("exp.cfg")) <<
      "# experiment setup\n"
      "seed = 42\n"
      "out = results  # trailing comment\n"
      "tail = 0.02\n"
      "bands = R, G\n"
      "models = ols, forest\n"
      "elmap_dims = 8x10\n"
      "elmap_penalties = 0.01, 0.5\n"
      "kernel_folds = 4\n"
      "forest_trees = 16\n"
      "write_images = false\n"
      "\n"
      "[city alpha]\n"
      "dataset = alpha.csv\n"
      "[city beta]\n"
      "alan = beta_alan.asc\n"
      "hbase = beta_hbase.asc\n"
      "mask = beta_mask.asc\n";
  auto cfg = parse_config(tmp.file("exp.cfg"));
  CHECK(cfg.seed == 42);
  CHECK(cfg.out_dir == "results");
  CHECK(cfg.tail_fraction == 0.02);
  CHECK(cfg.bands == std::vector<Band>{Band::R, Band::G});
  CHECK(cfg.models == std::vector<ModelKind>{ModelKind::Ols, ModelKind::Forest});
  CHECK(cfg.elmap_g1 == 8);
  CHECK(cfg.elmap_g2 == 10);
  CHECK(cfg.elmap_penalties == std::vector<double>{0.01, 0.5});
  CHECK(cfg.kernel_folds == 4);
  CHECK(cfg.forest_trees == 16);
  CHECK(!cfg.write_images);
  REQUIRE(cfg.cities.size() == 2);
  CHECK(cfg.cities[0].name == "alpha");
  CHECK(cfg.cities[0].dataset_csv == "alpha.csv");
  CHECK(cfg.cities[1].name == "beta");
  CHECK(cfg.cities[1].alan == "beta_alan.asc");
  CHECK(cfg.cities[1].mask == "beta_mask.asc");
}

TEST_CASE("parse_config errors") {
  TempDir tmp("harness");
  std::ofstream(tmp.file("one.cfg")) << "[city solo]\ndataset = x.csv\n";
  CHECK_THROWS_WITH_AS(parse_config(tmp.file("one.cfg")), doctest::Contains("at least 2"), Error);

  std::ofstream(tmp.file("bad.cfg")) << "not a key value line\n";
  CHECK_THROWS_WITH_AS(parse_config(tmp.file("bad.cfg")), doctest::Contains("key = value"), Error);

  std::ofstream(tmp.file("key.cfg")) << "wibble = 3\n[city a]\n[city b]\n";
  CHECK_THROWS_WITH_AS(parse_config(tmp.file("key.cfg")), doctest::Contains("unknown key"), Error);

  std::ofstream(tmp.file("sec.cfg")) << "[region x]\n";
  CHECK_THROWS_WITH_AS(parse_config(tmp.file("sec.cfg")), doctest::Contains("unknown section"),
                       Error);
}

TEST_CASE("load_city: CSV path, name attached") {
  TempDir tmp("harness");
  std::mt19937_64 rng(92);
  Dataset ds = nlcolor::test::random_dataset(rng, 25, 5.0);
  write_dataset_csv(ds, tmp.file("c.csv"));
  CityConfig cc{"mycity", tmp.file("c.csv"), "", "", "", "", "", ""};
  Dataset loaded = load_city(cc);
  CHECK(loaded.name == "mycity");
  CHECK(loaded.size() == 25);
}

TEST_CASE("load_city: raster pipeline aggregates HBASE onto the ALAN grid") {
  TempDir tmp("harness");
  RasterGrid alan(4, 4);
  alan.cellsize = 2.0;
  for (size_t i = 0; i < alan.values.size(); ++i) alan.values[i] = 10.0 + static_cast<double>(i);
  RasterGrid hbase(8, 8);
  hbase.cellsize = 1.0;
  for (size_t i = 0; i < hbase.values.size(); ++i) hbase.values[i] = static_cast<double>(i);
  RasterGrid red(4, 4, 120.0);
  red.cellsize = 2.0;
  write_ascii_grid(alan, tmp.file("alan.asc"));
  write_ascii_grid(hbase, tmp.file("hbase.asc"));
  write_ascii_grid(red, tmp.file("red.asc"));

  CityConfig cc{"rast", "", tmp.file("alan.asc"), tmp.file("hbase.asc"),
                tmp.file("red.asc"), "", "", ""};
  RasterGrid geom;
  Dataset ds = load_city(cc, &geom);
  CHECK(geom.same_geometry(alan));
  REQUIRE(ds.size() == 16);
  // cell (0,0) covers hbase values {0,1,8,9}
  const auto& o = ds.observations[0];
  CHECK(o.row == 0);
  CHECK(o.col == 0);
  CHECK(o.alan == 10.0);
  CHECK(o.hbase_mean == doctest::Approx(4.5));
  CHECK(o.red == 120.0);

  CityConfig broken{"x", "", tmp.file("alan.asc"), "", "", "", "", ""};
  CHECK_THROWS_WITH_AS(load_city(broken), doctest::Contains("alan= plus hbase="), Error);

  RasterGrid mask(8, 8, 1.0);  // wrong geometry for the mask
  write_ascii_grid(mask, tmp.file("mask.asc"));
  CityConfig badmask = cc;
  badmask.mask = tmp.file("mask.asc");
  CHECK_THROWS_WITH_AS(load_city(badmask), doctest::Contains("mask"), Error);
}

TEST_CASE("run_experiment: full score matrix, artifacts on disk") {
  TempDir tmp("harness");
  auto cfg = small_config(tmp, "run", 5);
  auto report = run_experiment(cfg);

  // 5 labels x 2 train cities x (1 train + 1 test) rows
  const std::set<std::string> labels{"ols", "kernel", "forest", "elmap[0.01]", "elmap[0.1]"};
  CHECK(report.rows.size() == 20);
  std::set<std::string> seen;
  int train_rows = 0;
  for (const auto& r : report.rows) {
    CHECK(r.error.empty());
    seen.insert(r.model);
    if (r.training) {
      ++train_rows;
      CHECK(r.train_city == r.test_city);
    } else {
      CHECK(r.train_city != r.test_city);
    }
    CHECK(r.scores.pearson_r > 0.5);  // strongly linear synthetic cities
    CHECK(r.scores.wmse >= 0.0);
  }
  CHECK(seen == labels);
  CHECK(train_rows == 10);

  for (const auto* f : {"report.csv", "consistency.csv", "tables.txt", "run.log",
                        "ac_R_removed.csv", "bc_R_removed.csv"})
    CHECK(fs::exists(fs::path(cfg.out_dir) / f));

  size_t n_models = 0, n_grids = 0;
  for (auto& e : fs::directory_iterator(cfg.out_dir + "/models")) { (void)e; ++n_models; }
  for (auto& e : fs::directory_iterator(cfg.out_dir + "/grids")) { (void)e; ++n_grids; }
  CHECK(n_models == 10);  // 5 labels x 2 train cities
  CHECK(n_grids == 20);   // 5 labels x 2 train x 2 test

  // saved models reproduce the reported training scores
  Model ols = load_model(cfg.out_dir + "/models/ac_R_ols.model");
  Dataset a = load_city(cfg.cities[0]);
  auto kept = filter_outliers(a, Band::R, cfg.tail_fraction).kept;
  std::vector<double> actual, pred;
  for (const auto& o : kept.observations) {
    actual.push_back(*o.red);
    pred.push_back(predict_model(ols, o));
  }
  double r = pearson(actual, pred);
  for (const auto& row : report.rows)
    if (row.model == "ols" && row.train_city == "ac" && row.training)
      CHECK(row.scores.pearson_r == doctest::Approx(r).epsilon(1e-12));

  // report round-trips through its CSV
  auto back = read_report_csv(cfg.out_dir + "/report.csv");
  CHECK(back.rows.size() == report.rows.size());
  CHECK(!report.consistency.empty());
}

TEST_CASE("run_experiment is deterministic for a fixed seed") {
  TempDir tmp("harness");
  auto cfg1 = small_config(tmp, "d1", 9);
  auto cfg2 = small_config(tmp, "d2", 9);
  run_experiment(cfg1);
  run_experiment(cfg2);
  CHECK(slurp(cfg1.out_dir + "/report.csv") == slurp(cfg2.out_dir + "/report.csv"));
  CHECK(slurp(cfg1.out_dir + "/models/ac_R_forest.model") ==
        slurp(cfg2.out_dir + "/models/ac_R_forest.model"));
  CHECK(slurp(cfg1.out_dir + "/models/ac_R_kernel.model") ==
        slurp(cfg2.out_dir + "/models/ac_R_kernel.model"));
}

TEST_CASE("colorize writes clamped band grids and a composite image") {
  TempDir tmp("harness");
  std::mt19937_64 rng(93);
  Dataset ds = nlcolor::test::random_dataset(rng, 150, 6.0);
  Model mr = fit_ols(ds, Band::R);
  Model mg = fit_ols(ds, Band::G);
  Model mb = fit_ols(ds, Band::B);

  RasterGrid alan(6, 5);
  std::uniform_real_distribution<double> unif(5.0, 60.0);
  for (auto& v : alan.values) v = unif(rng);
  alan.set_nodata(2, 3);
  RasterGrid hmean(6, 5, 40.0), hsd(6, 5, 10.0);

  colorize(mr, mg, mb, alan, hmean, hsd, tmp.file("col"), "scene");
  for (const auto* f : {"scene_R.asc", "scene_G.asc", "scene_B.asc", "scene.ppm"})
    CHECK(fs::exists(fs::path(tmp.file("col")) / f));

  RasterGrid out = read_ascii_grid(tmp.file("col") + "/scene_R.asc");
  CHECK(out.same_geometry(alan));
  CHECK(out.is_nodata(2, 3));
  for (int r = 0; r < out.nrows; ++r)
    for (int c = 0; c < out.ncols; ++c)
      if (!out.is_nodata(r, c)) {
        CHECK(out.at(r, c) >= 0.0);
        CHECK(out.at(r, c) <= 255.0);
      }

  std::string ppm = slurp(tmp.file("col") + "/scene.ppm");
  CHECK(ppm.size() == std::string("P6\n6 5\n255\n").size() + 3u * 6u * 5u);

  CHECK_THROWS_WITH_AS(colorize(mg, mg, mb, alan, hmean, hsd, tmp.file("col")),
                       doctest::Contains("bands R, G and B"), Error);
}
