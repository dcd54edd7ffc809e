#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "nlcolor/regressors.hpp"
#include "test_support.hpp"

using namespace nlcolor;

namespace {

// Deterministic integer-arithmetic dataset whose fit was frozen from an
// independent least-squares computation.
Dataset frozen_dataset() {
  Dataset ds;
  for (int i = 0; i < 30; ++i) {
    Observation o;
    o.row = i;
    o.alan = i;
    o.alan_mean_diff = (i * i) % 7;
    o.alan_max_diff = o.alan_mean_diff + (i % 4);
    o.hbase_mean = (3 * i) % 11;
    o.hbase_sd = (5 * i + 1) % 13;
    o.red = 10.0 + 1.5 * o.alan - 2.0 * o.alan_mean_diff + 0.5 * o.alan_max_diff +
            0.25 * o.hbase_mean - 0.75 * o.hbase_sd + ((i % 5) - 2);
    ds.observations.push_back(o);
  }
  return ds;
}

}  // namespace

TEST_CASE("exact linear data recovered with R^2 = 1") {
  Dataset ds;
  for (int i = 0; i < 10; ++i) {
    Observation o;
    o.alan = i;
    o.red = 3.0 + 2.0 * i;
    ds.observations.push_back(o);
  }
  auto m = fit_ols(ds, Band::R, {0});
  CHECK(m.b0 == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(m.coef[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(m.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.resid_var == doctest::Approx(0.0).scale(1.0).epsilon(1e-18));
  CHECK(m.vif[0] == 1.0);
  CHECK(predict(m, ds.observations[7]) == doctest::Approx(17.0).epsilon(1e-10));
}

TEST_CASE("frozen five-predictor fit matches independent solver") {
  auto m = fit_ols(frozen_dataset(), Band::R);
  const double beta[6] = {9.200692117654672,   1.5235733535334728, -1.8631353802903834,
                          0.4886171463958947,  0.3403413990980785, -0.7866631646579103};
  const double t[5] = {46.94204716091343, -5.540642463323978, 1.935461175584498,
                       3.7765170069394447, -10.495680510893186};
  const double vif[5] = {1.0276117066379271, 2.9790920427944227, 2.8953663853894755,
                         1.0998359740412316, 1.0306597823968924};
  CHECK(m.b0 == doctest::Approx(beta[0]).epsilon(1e-8));
  for (int j = 0; j < 5; ++j) {
    CHECK(m.coef[j] == doctest::Approx(beta[j + 1]).epsilon(1e-8));
    CHECK(m.t_stats[j] == doctest::Approx(t[j]).epsilon(1e-8));
    CHECK(m.vif[j] == doctest::Approx(vif[j]).epsilon(1e-8));
  }
  CHECK(m.r2 == doctest::Approx(0.9903570267999918).epsilon(1e-10));
  CHECK(m.resid_var == doctest::Approx(2.303951557130193).epsilon(1e-8));
}

TEST_CASE("agrees with normal equations; residuals orthogonal and centered") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Dataset ds = nlcolor::test::random_dataset(rng, 200, 8.0);
    auto m = fit_ols(ds, Band::R);

    Eigen::MatrixXd xp = predictor_matrix(ds, all_predictors());
    Eigen::VectorXd y = band_vector(ds, Band::R);
    Eigen::MatrixXd design(xp.rows(), 6);
    design.col(0).setOnes();
    design.rightCols(5) = xp;
    Eigen::VectorXd beta =
        (design.transpose() * design).ldlt().solve(design.transpose() * y);

    CHECK(m.b0 == doctest::Approx(beta[0]).epsilon(1e-8));
    for (int j = 0; j < 5; ++j) CHECK(m.coef[j] == doctest::Approx(beta[j + 1]).epsilon(1e-8));

    Eigen::VectorXd resid(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
      resid[i] = y[i] - predict(m, ds.observations[static_cast<size_t>(i)]);
    double scale = y.norm();
    CHECK(std::abs(resid.sum()) / scale < 1e-9);
    Eigen::VectorXd ortho = design.transpose() * resid;
    for (Eigen::Index j = 0; j < ortho.size(); ++j) CHECK(std::abs(ortho[j]) / scale < 1e-6);
  }
}

TEST_CASE("properties: R^2 in [0,1], VIF >= 1, subset fit never beats full R^2") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    Dataset ds = nlcolor::test::random_dataset(rng, 120, 25.0);
    auto full = fit_ols(ds, Band::G);
    CHECK(full.r2 >= 0.0);
    CHECK(full.r2 <= 1.0);
    for (double v : full.vif) CHECK(v >= 1.0 - 1e-12);
    auto sub = fit_ols(ds, Band::G, {0, 3});
    CHECK(sub.r2 <= full.r2 + 1e-12);
  }
}

TEST_CASE("collinear predictors are rejected by name") {
  Dataset ds;
  for (int i = 0; i < 20; ++i) {
    Observation o;
    o.alan = i;
    o.alan_mean_diff = 2.0 * i + 1.0;  // exact linear function of alan
    o.red = i;
    ds.observations.push_back(o);
  }
  CHECK_THROWS_WITH_AS(fit_ols(ds, Band::R, {0, 1}),
                       doctest::Contains("alan_mean_diff"), Error);
}

TEST_CASE("too few observations is an error") {
  Dataset ds;
  for (int i = 0; i < 6; ++i) {
    Observation o;
    o.alan = i;
    o.red = i;
    ds.observations.push_back(o);
  }
  CHECK_THROWS_AS(fit_ols(ds, Band::R), Error);  // needs >= 7 for 5 predictors
  CHECK_NOTHROW(fit_ols(ds, Band::R, {0}));
}
