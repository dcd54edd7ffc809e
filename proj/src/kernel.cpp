#include <cmath>
#include <numeric>
#include <random>

#include "nlcolor/regressors.hpp"

namespace nlcolor {

KernelGrid default_kernel_grid(size_t n) {
  KernelGrid g;
  double base = std::sqrt(static_cast<double>(kNumPredictors));
  for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) g.sigmas.push_back(f * base);
  for (double f : {1e-4, 1e-2, 1.0, 10.0}) g.lambdas.push_back(f * static_cast<double>(n));
  return g;
}

std::vector<int> cv_fold_assignment(size_t n, int folds, std::uint64_t seed) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i) {  // Fisher-Yates; avoids distribution portability issues
    size_t j = static_cast<size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<int> fold(n, 0);
  for (size_t pos = 0; pos < n; ++pos)
    fold[order[pos]] = static_cast<int>(pos * static_cast<size_t>(folds) / n);
  return fold;
}

namespace {

Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  double denom = 2.0 * sigma * sigma;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = std::exp(-(a.row(i) - b.row(j)).squaredNorm() / denom);
  return k;
}

Eigen::VectorXd solve_dual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma,
                           double lambda) {
  Eigen::MatrixXd k = gaussian_kernel(x, x, sigma);
  k.diagonal().array() += lambda;
  return Eigen::LDLT<Eigen::MatrixXd>(k).solve(y);
}

}  // namespace

KernelModel fit_kernel(const Dataset& ds, Band band, int cv_folds, const KernelGrid* grid,
                       std::uint64_t seed, const std::vector<int>& active) {
  const size_t n = ds.size();
  if (cv_folds < 2) throw Error("fit_kernel: need at least 2 folds");
  if (n < 2 * static_cast<size_t>(cv_folds))
    throw Error("fit_kernel: need at least " + std::to_string(2 * cv_folds) + " observations");

  KernelGrid defaults;
  if (!grid) {
    defaults = default_kernel_grid(n);
    grid = &defaults;
  }
  if (grid->sigmas.empty() || grid->lambdas.empty())
    throw Error("fit_kernel: empty hyperparameter grid");

  KernelModel m;
  m.band = band;
  m.active = active;
  m.seed = seed;

  Eigen::MatrixXd raw = predictor_matrix(ds, active);
  Eigen::VectorXd y_raw = band_vector(ds, band);

  m.mean.resize(active.size());
  m.sd.resize(active.size());
  Eigen::MatrixXd x = raw;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    double mean = raw.col(j).mean();
    double var = (raw.col(j).array() - mean).square().mean();
    double sd = var > 0 ? std::sqrt(var) : 1.0;
    m.mean[static_cast<size_t>(j)] = mean;
    m.sd[static_cast<size_t>(j)] = sd;
    x.col(j) = (raw.col(j).array() - mean) / sd;
  }
  m.y_mean = y_raw.mean();
  Eigen::VectorXd y = y_raw.array() - m.y_mean;

  std::vector<int> fold = cv_fold_assignment(n, cv_folds, seed);

  double best_mse = std::numeric_limits<double>::infinity();
  for (double sigma : grid->sigmas) {
    for (double lambda : grid->lambdas) {
      double sse = 0.0;
      for (int f = 0; f < cv_folds; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (size_t i = 0; i < n; ++i)
          (fold[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
        if (te.empty() || tr.empty()) throw Error("fit_kernel: empty CV fold");
        Eigen::MatrixXd xtr(tr.size(), x.cols()), xte(te.size(), x.cols());
        Eigen::VectorXd ytr(tr.size());
        for (size_t i = 0; i < tr.size(); ++i) {
          xtr.row(static_cast<Eigen::Index>(i)) = x.row(tr[i]);
          ytr[static_cast<Eigen::Index>(i)] = y[tr[i]];
        }
        for (size_t i = 0; i < te.size(); ++i) xte.row(static_cast<Eigen::Index>(i)) = x.row(te[i]);
        Eigen::VectorXd alpha = solve_dual(xtr, ytr, sigma, lambda);
        Eigen::VectorXd pred = gaussian_kernel(xte, xtr, sigma) * alpha;
        for (size_t i = 0; i < te.size(); ++i) {
          double e = pred[static_cast<Eigen::Index>(i)] - y[te[i]];
          sse += e * e;
        }
      }
      double mse = sse / static_cast<double>(n);
      m.cv_table.push_back({sigma, lambda, mse});
      if (mse < best_mse) {
        best_mse = mse;
        m.sigma = sigma;
        m.lambda = lambda;
      }
    }
  }

  m.train_x = std::move(x);
  m.alpha = solve_dual(m.train_x, y, m.sigma, m.lambda);
  return m;
}

double predict(const KernelModel& m, const std::array<double, kNumPredictors>& p) {
  Eigen::RowVectorXd q(static_cast<Eigen::Index>(m.active.size()));
  for (size_t j = 0; j < m.active.size(); ++j)
    q[static_cast<Eigen::Index>(j)] = (p[m.active[j]] - m.mean[j]) / m.sd[j];
  double denom = 2.0 * m.sigma * m.sigma;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.train_x.rows(); ++i)
    acc += m.alpha[i] * std::exp(-(q - m.train_x.row(i)).squaredNorm() / denom);
  return acc + m.y_mean;
}

double predict(const KernelModel& m, const Observation& o) { return predict(m, o.predictors()); }

}  // namespace nlcolor
