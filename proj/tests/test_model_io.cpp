#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "nlcolor/model_io.hpp"
#include "test_support.hpp"

using namespace nlcolor;
using nlcolor::test::TempDir;

namespace {

std::string slurp(const std::string& path) {
  std::stringstream ss;
  ss << std::ifstream(path, std::ios::binary).rdbuf();
  return ss.str();
}

// Round-trips a model and checks predictions agree bit for bit on probes.
void check_roundtrip(const Model& m, const Dataset& probes, const std::string& path) {
  save_model(m, path);
  Model back = load_model(path);
  CHECK(model_kind_label(back) == model_kind_label(m));
  CHECK(model_band(back) == model_band(m));
  for (const auto& o : probes.observations)
    CHECK(predict_model(back, o) == predict_model(m, o));
}

}  // namespace

TEST_CASE("all four model kinds round-trip with identical predictions") {
  TempDir tmp("model_io");
  std::mt19937_64 rng(81);
  Dataset ds = nlcolor::test::random_dataset(rng, 150, 8.0);
  Dataset probes = nlcolor::test::random_dataset(rng, 30, 8.0);

  check_roundtrip(fit_ols(ds, Band::R), probes, tmp.file("ols.model"));
  check_roundtrip(fit_kernel(ds, Band::G, 5, nullptr, 3), probes, tmp.file("kernel.model"));
  check_roundtrip(fit_forest(ds, Band::B, 8, 5, 7), probes, tmp.file("forest.model"));
  check_roundtrip(fit_map(init_map(ds, Band::R, 6, 6, 0.05), ds), probes, tmp.file("elmap.model"));
}

TEST_CASE("saving twice produces identical bytes") {
  TempDir tmp("model_io");
  std::mt19937_64 rng(82);
  Dataset ds = nlcolor::test::random_dataset(rng, 100, 10.0);
  Model m = fit_forest(ds, Band::R, 4, 5, 11);
  save_model(m, tmp.file("a.model"));
  save_model(m, tmp.file("b.model"));
  CHECK(slurp(tmp.file("a.model")) == slurp(tmp.file("b.model")));
  // a reloaded model re-serializes identically too
  save_model(load_model(tmp.file("a.model")), tmp.file("c.model"));
  CHECK(slurp(tmp.file("a.model")) == slurp(tmp.file("c.model")));
}

TEST_CASE("linear metadata survives the round trip exactly") {
  TempDir tmp("model_io");
  std::mt19937_64 rng(83);
  Dataset ds = nlcolor::test::random_dataset(rng, 80, 6.0);
  LinearModel m = fit_ols(ds, Band::G);
  save_model(m, tmp.file("m.model"));
  auto back = std::get<LinearModel>(load_model(tmp.file("m.model")));
  CHECK(back.b0 == m.b0);
  CHECK(back.coef == m.coef);
  CHECK(back.t_stats == m.t_stats);
  CHECK(back.vif == m.vif);
  CHECK(back.r2 == m.r2);
  CHECK(back.resid_var == m.resid_var);
  CHECK(back.n_train == m.n_train);
  CHECK(back.active == m.active);
}

TEST_CASE("elastic map metadata survives the round trip exactly") {
  TempDir tmp("model_io");
  std::mt19937_64 rng(84);
  Dataset ds = nlcolor::test::random_dataset(rng, 120, 10.0);
  ElasticMap m = fit_map(init_map(ds, Band::B, 5, 7, 0.1), ds);
  save_model(m, tmp.file("m.model"));
  auto back = std::get<ElasticMap>(load_model(tmp.file("m.model")));
  CHECK(back.topology.g1 == 5);
  CHECK(back.topology.g2 == 7);
  CHECK(back.mu_bend == m.mu_bend);
  CHECK(back.fvu == m.fvu);
  CHECK(back.fitted == m.fitted);
  CHECK(back.converged == m.converged);
  CHECK(back.node_positions == m.node_positions);
  for (int j = 0; j < kMapDims; ++j) {
    CHECK(back.mean[j] == m.mean[j]);
    CHECK(back.sd[j] == m.sd[j]);
  }
}

TEST_CASE("format errors are rejected") {
  TempDir tmp("model_io");
  CHECK_THROWS_AS(load_model(tmp.file("missing.model")), Error);

  std::ofstream(tmp.file("junk.model")) << "something else entirely\n";
  CHECK_THROWS_AS(load_model(tmp.file("junk.model")), Error);

  std::ofstream(tmp.file("vers.model")) << "nlcolor-model 99\nkind ols\n";
  CHECK_THROWS_WITH_AS(load_model(tmp.file("vers.model")),
                       doctest::Contains("unsupported format version"), Error);

  std::ofstream(tmp.file("kind.model")) << "nlcolor-model 1\nkind perceptron\n";
  CHECK_THROWS_WITH_AS(load_model(tmp.file("kind.model")), doctest::Contains("unknown kind"),
                       Error);

  std::ofstream(tmp.file("trunc.model"))
      << "nlcolor-model 1\nkind ols\nband R\nactive 5 0 1 2 3 4\nb0 1.5\ncoef 5 1 2 3\n";
  CHECK_THROWS_AS(load_model(tmp.file("trunc.model")), Error);
}
