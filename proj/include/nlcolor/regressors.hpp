#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nlcolor/dataset.hpp"

namespace nlcolor {

inline std::vector<int> all_predictors() { return {0, 1, 2, 3, 4}; }

// ---------------------------------------------------------------------------
// OLS linear regression

struct LinearModel {
  Band band = Band::R;
  std::vector<int> active;       // predictor indices entering the model
  double b0 = 0.0;
  std::vector<double> coef;      // aligned with `active`
  std::vector<double> t_stats;
  std::vector<double> vif;
  double r2 = 0.0;
  double resid_var = 0.0;        // RSS / (n - p - 1)
  size_t n_train = 0;
};

LinearModel fit_ols(const Dataset& ds, Band band,
                    const std::vector<int>& active = all_predictors());
double predict(const LinearModel& m, const std::array<double, kNumPredictors>& p);
double predict(const LinearModel& m, const Observation& o);

// ---------------------------------------------------------------------------
// Gaussian kernel ridge regression with k-fold CV hyperparameter selection

struct KernelCvCell {
  double sigma = 0.0;
  double lambda = 0.0;
  double mse = 0.0;
};

struct KernelGrid {
  std::vector<double> sigmas;
  std::vector<double> lambdas;
};

/// sigma in {0.25,0.5,1,2,4}*sqrt(5) on standardized predictors,
/// lambda in {1e-4,1e-2,1,10}*n.
KernelGrid default_kernel_grid(size_t n);

/// Deterministic fold labels: seeded Fisher-Yates shuffle, contiguous blocks.
std::vector<int> cv_fold_assignment(size_t n, int folds, std::uint64_t seed);

struct KernelModel {
  Band band = Band::R;
  std::vector<int> active;
  Eigen::MatrixXd train_x;       // standardized, n x p
  Eigen::VectorXd alpha;         // dual weights
  double sigma = 1.0;
  double lambda = 1.0;
  std::vector<double> mean, sd;  // standardization per active predictor
  double y_mean = 0.0;           // target centered before the dual solve
  std::vector<KernelCvCell> cv_table;
  std::uint64_t seed = 0;
};

KernelModel fit_kernel(const Dataset& ds, Band band, int cv_folds = 5,
                       const KernelGrid* grid = nullptr, std::uint64_t seed = 0,
                       const std::vector<int>& active = all_predictors());
double predict(const KernelModel& m, const std::array<double, kNumPredictors>& p);
double predict(const KernelModel& m, const Observation& o);

// ---------------------------------------------------------------------------
// Random forest of CART regression trees

struct TreeNode {
  int var = -1;            // split predictor position within `active`; -1 = leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;      // leaf mean
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestModel {
  Band band = Band::R;
  std::vector<int> active;
  std::vector<Tree> trees;
  int min_leaf = 5;
  std::uint64_t seed = 0;
  bool bootstrap = true;
};

ForestModel fit_forest(const Dataset& ds, Band band, int n_trees = 32, int min_leaf = 5,
                       std::uint64_t seed = 0, bool bootstrap = true,
                       const std::vector<int>& active = all_predictors());
double predict_tree(const Tree& t, const std::vector<double>& x);
double predict(const ForestModel& m, const std::array<double, kNumPredictors>& p);
double predict(const ForestModel& m, const Observation& o);

// ---------------------------------------------------------------------------

/// Training responses for one band; throws if the band is absent anywhere.
Eigen::VectorXd band_vector(const Dataset& ds, Band band);

/// n x active.size() raw predictor matrix.
Eigen::MatrixXd predictor_matrix(const Dataset& ds, const std::vector<int>& active);

}  // namespace nlcolor
