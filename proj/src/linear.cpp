#include <cmath>

#include "nlcolor/regressors.hpp"

namespace nlcolor {

Eigen::VectorXd band_vector(const Dataset& ds, Band band) {
  if (!ds.has_band(band))
    throw Error(std::string("band ") + band_letter(band) + " is not populated in the dataset");
  Eigen::VectorXd y(static_cast<Eigen::Index>(ds.size()));
  for (size_t i = 0; i < ds.size(); ++i) y[static_cast<Eigen::Index>(i)] = *ds.observations[i].band(band);
  return y;
}

Eigen::MatrixXd predictor_matrix(const Dataset& ds, const std::vector<int>& active) {
  if (active.empty()) throw Error("no predictors selected");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(active.size()));
  for (size_t i = 0; i < ds.size(); ++i) {
    auto p = ds.observations[i].predictors();
    for (size_t j = 0; j < active.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p[active[j]];
  }
  return x;
}

LinearModel fit_ols(const Dataset& ds, Band band, const std::vector<int>& active) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  const auto k = static_cast<Eigen::Index>(active.size());
  if (n < k + 2) throw Error("fit_ols: need at least " + std::to_string(k + 2) + " observations");

  Eigen::VectorXd y = band_vector(ds, band);
  Eigen::MatrixXd xp = predictor_matrix(ds, active);
  Eigen::MatrixXd design(n, k + 1);
  design.col(0).setOnes();
  design.rightCols(k) = xp;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k + 1) {
    std::string msg = "fit_ols: design matrix is rank deficient; collinear predictors among {";
    for (size_t j = 0; j < active.size(); ++j) {
      if (j) msg += ", ";
      msg += kPredictorNames[active[j]];
    }
    throw Error(msg + "}");
  }
  Eigen::VectorXd beta = qr.solve(y);
  Eigen::VectorXd resid = y - design * beta;
  double rss = resid.squaredNorm();
  double tss = (y.array() - y.mean()).matrix().squaredNorm();

  LinearModel m;
  m.band = band;
  m.active = active;
  m.n_train = static_cast<size_t>(n);
  m.b0 = beta[0];
  m.coef.assign(beta.data() + 1, beta.data() + 1 + k);
  m.resid_var = rss / static_cast<double>(n - (k + 1));
  m.r2 = tss > 0 ? 1.0 - rss / tss : 1.0;

  Eigen::MatrixXd xtx_inv = (design.transpose() * design).inverse();
  m.t_stats.resize(static_cast<size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    double se = std::sqrt(m.resid_var * xtx_inv(j + 1, j + 1));
    m.t_stats[static_cast<size_t>(j)] = se > 0 ? beta[j + 1] / se : 0.0;
  }

  // VIF: regress each predictor on the remaining ones
  m.vif.resize(static_cast<size_t>(k));
  if (k == 1) {
    m.vif[0] = 1.0;
  } else {
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::MatrixXd dj(n, k);  // intercept + the other predictors
      dj.col(0).setOnes();
      Eigen::Index col = 1;
      for (Eigen::Index jj = 0; jj < k; ++jj)
        if (jj != j) dj.col(col++) = xp.col(jj);
      Eigen::VectorXd yj = xp.col(j);
      Eigen::VectorXd bj = dj.colPivHouseholderQr().solve(yj);
      double rssj = (yj - dj * bj).squaredNorm();
      double tssj = (yj.array() - yj.mean()).matrix().squaredNorm();
      double r2j = tssj > 0 ? 1.0 - rssj / tssj : 0.0;
      m.vif[static_cast<size_t>(j)] = r2j < 1.0 ? 1.0 / (1.0 - r2j) : std::numeric_limits<double>::infinity();
    }
  }
  return m;
}

double predict(const LinearModel& m, const std::array<double, kNumPredictors>& p) {
  double v = m.b0;
  for (size_t j = 0; j < m.active.size(); ++j) v += m.coef[j] * p[m.active[j]];
  return v;
}

double predict(const LinearModel& m, const Observation& o) { return predict(m, o.predictors()); }

}  // namespace nlcolor
