#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "nlcolor/metrics.hpp"
#include "test_support.hpp"

using namespace nlcolor;
using nlcolor::test::TempDir;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = unif(rng);
  return v;
}

// Brute-force windowed-SD sweep, written as a direct two-pass transcription of
// the contrast formula.
double contrast_oracle(const RasterGrid& a, const RasterGrid& b) {
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double acc = 0.0;
  long cnt = 0;
  for (int r = 0; r < a.nrows; ++r)
    for (int c = 0; c < a.ncols; ++c) {
      if (a.is_nodata(r, c) || b.is_nodata(r, c)) continue;
      double sw = 0, ma = 0, mb = 0;
      for (int rr = r - 5; rr <= r + 5; ++rr)
        for (int cc = c - 5; cc <= c + 5; ++cc) {
          if (rr < 0 || rr >= a.nrows || cc < 0 || cc >= a.ncols) continue;
          if (a.is_nodata(rr, cc) || b.is_nodata(rr, cc)) continue;
          double g = std::exp(-((rr - r) * (rr - r) + (cc - c) * (cc - c)) / 4.5);
          sw += g;
          ma += g * a.at(rr, cc);
          mb += g * b.at(rr, cc);
        }
      ma /= sw;
      mb /= sw;
      double va = 0, vb = 0;
      for (int rr = r - 5; rr <= r + 5; ++rr)
        for (int cc = c - 5; cc <= c + 5; ++cc) {
          if (rr < 0 || rr >= a.nrows || cc < 0 || cc >= a.ncols) continue;
          if (a.is_nodata(rr, cc) || b.is_nodata(rr, cc)) continue;
          double g = std::exp(-((rr - r) * (rr - r) + (cc - c) * (cc - c)) / 4.5);
          va += g * (a.at(rr, cc) - ma) * (a.at(rr, cc) - ma);
          vb += g * (b.at(rr, cc) - mb) * (b.at(rr, cc) - mb);
        }
      va /= sw;
      vb /= sw;
      acc += (2.0 * std::sqrt(va) * std::sqrt(vb) + c2) / (va + vb + c2);
      ++cnt;
    }
  return acc / static_cast<double>(cnt);
}

RasterGrid random_image(std::mt19937_64& rng, int side) {
  RasterGrid g(side, side);
  std::uniform_real_distribution<double> unif(0.0, 255.0);
  for (auto& v : g.values) v = unif(rng);
  return g;
}

}  // namespace

TEST_CASE("pearson: identity, reflection, frozen hand value") {
  std::vector<double> a{1, 2, 3, 4};
  CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> neg{4, 3, 2, 1};
  CHECK(pearson(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(pearson(a, {1, 2, 3, 10}) == doctest::Approx(0.8854377448471463).epsilon(1e-12));
}

TEST_CASE("pearson: invariant under positive affine transforms") {
  std::mt19937_64 rng(71);
  auto a = random_vec(rng, 50, 0, 100);
  auto b = random_vec(rng, 50, 0, 100);
  double base = pearson(a, b);
  auto scaled = b;
  for (auto& x : scaled) x = 3.5 * x + 12.0;
  CHECK(pearson(a, scaled) == doctest::Approx(base).epsilon(1e-12));
  auto flipped = b;
  for (auto& x : flipped) x = -2.0 * x + 7.0;
  CHECK(pearson(a, flipped) == doctest::Approx(-base).epsilon(1e-12));
}

TEST_CASE("pearson errors") {
  CHECK_THROWS_AS(pearson({1, 2}, {1}), Error);
  CHECK_THROWS_AS(pearson({1}, {1}), Error);
  CHECK_THROWS_WITH_AS(pearson({1, 2, 3}, {5, 5, 5}), doctest::Contains("zero-variance"), Error);
}

TEST_CASE("wmse: zero at equality, 2/3 worked case, scaling law") {
  std::vector<double> a{1, 2, 4};
  CHECK(wmse(a, a) == 0.0);
  CHECK(wmse(a, {2, 2, 2}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  std::mt19937_64 rng(72);
  auto x = random_vec(rng, 40, 1, 50);
  auto y = random_vec(rng, 40, 1, 50);
  double base = wmse(x, y);
  const double s = 3.25;
  auto xs = x, ys = y;
  for (auto& v : xs) v *= s;
  for (auto& v : ys) v *= s;
  CHECK(wmse(xs, ys) == doctest::Approx(s * base).epsilon(1e-12));

  CHECK_THROWS_AS(wmse({1, 0, 2}, {1, 1, 1}), Error);
  CHECK_THROWS_AS(wmse({}, {}), Error);
  CHECK_THROWS_AS(wmse({1}, {1, 2}), Error);
}

TEST_CASE("contrast: identical and mean-shifted images score 1") {
  std::mt19937_64 rng(73);
  auto a = random_image(rng, 16);
  CHECK(contrast_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  auto shifted = a;
  for (auto& v : shifted.values) v += 40.0;
  CHECK(contrast_similarity(a, shifted) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("contrast: matches brute-force window oracle, symmetric, in (0,1]") {
  std::mt19937_64 rng(74);
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_image(rng, 16);
    auto b = random_image(rng, 16);
    if (trial % 2 == 1) {  // punch some shared nodata holes
      for (int k = 0; k < 20; ++k) {
        int r = static_cast<int>(rng() % 16), c = static_cast<int>(rng() % 16);
        a.set_nodata(r, c);
      }
    }
    double v = contrast_similarity(a, b);
    CHECK(v == doctest::Approx(contrast_oracle(a, b)).epsilon(1e-8));
    CHECK(contrast_similarity(b, a) == doctest::Approx(v).epsilon(1e-12));
    CHECK(v > 0.0);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("contrast errors") {
  RasterGrid a(4, 4, 1.0), b(5, 4, 1.0);
  CHECK_THROWS_WITH_AS(contrast_similarity(a, b), doctest::Contains("geometry"), Error);
  RasterGrid c(4, 4), d(4, 4);
  for (auto& v : c.values) v = c.nodata_value;
  CHECK_THROWS_AS(contrast_similarity(c, d), Error);
}

TEST_CASE("consistency: literal worked values and scaling invariance") {
  CHECK(consistency({1, 2, 3}, {2, 4, 6}) == doctest::Approx(2.0).epsilon(1e-12));
  // identical lists: mean/SD of the list
  std::vector<double> v{1, 2, 3, 4};
  double m = 2.5, sd = std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0);
  CHECK(consistency(v, v) == doctest::Approx(m / sd).epsilon(1e-12));

  std::mt19937_64 rng(75);
  auto tr = random_vec(rng, 20, 1, 10);
  auto te = random_vec(rng, 15, 1, 10);
  double base = consistency(tr, te);
  auto trs = tr, tes = te;
  for (auto& x : trs) x *= 7.0;
  for (auto& x : tes) x *= 7.0;
  CHECK(consistency(trs, tes) == doctest::Approx(base).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(consistency({2, 2, 2}, {1, 2, 3}), doctest::Contains("zero SD"), Error);
  CHECK_THROWS_AS(consistency({}, {1.0}), Error);
}

TEST_CASE("consistency: mean-ratio mode on matched pairs") {
  CHECK(consistency({2}, {8}, ConsistencyMode::MeanRatio) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(consistency({2, 3}, {8, 3}, ConsistencyMode::MeanRatio) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(consistency({1, 2}, {1}, ConsistencyMode::MeanRatio), Error);
  CHECK_THROWS_AS(consistency({0}, {0}, ConsistencyMode::MeanRatio), Error);
}

TEST_CASE("compute_consistency aggregates train vs test scores per group") {
  EvaluationReport rep;
  auto add = [&](const std::string& train, const std::string& test, bool training, double r,
                 double w) {
    ScoreRow row;
    row.train_city = train;
    row.test_city = test;
    row.model = "ols";
    row.band = Band::R;
    row.training = training;
    row.scores.pearson_r = r;
    row.scores.wmse = w;
    row.scores.n = 10;
    rep.rows.push_back(row);
  };
  add("A", "A", true, 0.9, 1.0);
  add("B", "B", true, 0.8, 2.0);
  add("A", "B", false, 0.7, 3.0);
  add("B", "A", false, 0.6, 4.0);
  compute_consistency(rep);

  REQUIRE(rep.consistency.size() == 2);  // pearson and wmse; contrast is all-NaN
  const auto& p = rep.consistency[0];
  CHECK(p.measure == "pearson");
  CHECK(p.literal == doctest::Approx(10.511898020814321).epsilon(1e-10));
  CHECK(p.mean_ratio == doctest::Approx(0.7637626158259734).epsilon(1e-10));
}

TEST_CASE("report CSV round-trips including error rows") {
  TempDir tmp("metrics");
  EvaluationReport rep;
  ScoreRow ok;
  ok.train_city = "alpha";
  ok.test_city = "beta";
  ok.model = "elmap[0.05]";
  ok.band = Band::G;
  ok.training = false;
  ok.scores = {0.8123456789012345, 12.5, 420};
  ok.contrast = 0.75;
  rep.rows.push_back(ok);
  ScoreRow bad;
  bad.train_city = "alpha";
  bad.test_city = "alpha";
  bad.model = "kernel";
  bad.band = Band::B;
  bad.training = true;
  bad.error = "zero-variance argument";
  rep.rows.push_back(bad);

  write_report_csv(rep, tmp.file("report.csv"));
  auto back = read_report_csv(tmp.file("report.csv"));
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].model == "elmap[0.05]");
  CHECK(back.rows[0].band == Band::G);
  CHECK(back.rows[0].scores.pearson_r == ok.scores.pearson_r);
  CHECK(back.rows[0].scores.wmse == ok.scores.wmse);
  CHECK(back.rows[0].scores.n == 420);
  CHECK(back.rows[0].contrast == 0.75);
  CHECK(back.rows[1].error == "zero-variance argument");

  std::ofstream(tmp.file("junk.csv")) << "not,a,report\n";
  CHECK_THROWS_AS(read_report_csv(tmp.file("junk.csv")), Error);
}

TEST_CASE("table and consistency outputs carry the expected labels") {
  TempDir tmp("metrics");
  EvaluationReport rep;
  ScoreRow row;
  row.train_city = "alpha";
  row.test_city = "beta";
  row.model = "ols";
  row.band = Band::R;
  row.training = false;
  row.scores = {0.91, 3.25, 100};
  rep.rows.push_back(row);
  row.test_city = "alpha";
  row.training = true;
  row.scores = {0.95, 2.0, 100};
  rep.rows.push_back(row);
  compute_consistency(rep);

  write_report_table(rep, tmp.file("tables.txt"));
  std::stringstream ss;
  ss << std::ifstream(tmp.file("tables.txt")).rdbuf();
  std::string text = ss.str();
  CHECK(text.find("Trained on alpha") != std::string::npos);
  CHECK(text.find("beta") != std::string::npos);
  CHECK(text.find("Consistency") != std::string::npos);

  write_consistency_csv(rep, tmp.file("cons.csv"));
  std::stringstream cs;
  cs << std::ifstream(tmp.file("cons.csv")).rdbuf();
  CHECK(cs.str().find("model,band,measure,literal,mean_ratio") == 0);
  CHECK(cs.str().find("ols,R,pearson") != std::string::npos);
}

TEST_CASE("model kind names round-trip") {
  for (auto k : {ModelKind::Ols, ModelKind::Kernel, ModelKind::Forest, ModelKind::ElasticMap})
    CHECK(parse_model_kind(model_kind_name(k)) == k);
  CHECK(parse_model_kind("rf") == ModelKind::Forest);
  CHECK_THROWS_AS(parse_model_kind("svm"), Error);
}

TEST_CASE("factor contribution: irrelevant predictor ~0, dominant predictor > 0") {
  std::mt19937_64 rng(76);
  Dataset ds;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    Observation o;
    o.alan = 20 + 10 * gauss(rng);
    o.alan_mean_diff = gauss(rng);
    o.alan_max_diff = o.alan_mean_diff + std::abs(gauss(rng));
    o.hbase_mean = 50 + 10 * gauss(rng);
    o.hbase_sd = 10 + 2 * gauss(rng);  // no effect on the response
    o.red = 100 + 3.0 * o.alan + 5.0 * gauss(rng);
    ds.observations.push_back(o);
  }
  double d_noise = factor_contribution(ds, Band::R, ModelKind::Ols, {4});
  CHECK(std::abs(d_noise) < 0.01);
  double d_alan = factor_contribution(ds, Band::R, ModelKind::Ols, {0});
  CHECK(d_alan > 0.3);
  CHECK_THROWS_AS(factor_contribution(ds, Band::R, ModelKind::Ols, {0, 1, 2, 3, 4}), Error);
}
