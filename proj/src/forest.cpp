#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nlcolor/regressors.hpp"

namespace nlcolor {

namespace {

struct SplitChoice {
  bool found = false;
  int var = -1;          // position within active set
  double threshold = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

// Best split over all candidate predictors, minimizing the summed child SSE.
// Ties resolve to the lowest predictor index, then the lowest threshold.
SplitChoice best_split(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                       const std::vector<int>& idx, int min_leaf) {
  const size_t n = idx.size();
  SplitChoice best;
  if (n < 2 * static_cast<size_t>(min_leaf)) return best;

  std::vector<int> order(idx);
  std::vector<double> ys(n);
  for (size_t v = 0; v < x.size(); ++v) {
    const auto& col = x[v];
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (col[a] != col[b]) return col[a] < col[b];
      return a < b;
    });
    for (size_t i = 0; i < n; ++i) ys[i] = y[order[i]];

    // prefix sums for O(1) SSE of each side
    double total = 0.0, total_sq = 0.0;
    for (double t : ys) { total += t; total_sq += t * t; }
    double lsum = 0.0, lsq = 0.0;
    for (size_t i = 0; i + 1 < n; ++i) {
      double t = ys[i];
      lsum += t;
      lsq += t * t;
      size_t nl = i + 1, nr = n - nl;
      if (nl < static_cast<size_t>(min_leaf) || nr < static_cast<size_t>(min_leaf)) continue;
      double a = col[order[i]], b = col[order[i + 1]];
      if (a == b) continue;  // cannot separate equal values
      double rsum = total - lsum, rsq = total_sq - lsq;
      double sse = (lsq - lsum * lsum / static_cast<double>(nl)) +
                   (rsq - rsum * rsum / static_cast<double>(nr));
      double thr = a + 0.5 * (b - a);
      // scan order is ascending (var, threshold), so keeping the first
      // strict improvement realizes the lowest-index tie-break
      if (sse < best.sse) {
        best.found = true;
        best.var = static_cast<int>(v);
        best.threshold = thr;
        best.sse = sse;
      }
    }
  }
  return best;
}

int grow(Tree& tree, const std::vector<std::vector<double>>& x, const std::vector<double>& y,
         std::vector<int> idx, int min_leaf) {
  double mean = 0.0;
  for (int i : idx) mean += y[i];
  mean /= static_cast<double>(idx.size());

  int node_id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes[node_id].value = mean;

  bool pure = std::all_of(idx.begin(), idx.end(), [&](int i) { return y[i] == y[idx[0]]; });
  if (pure) return node_id;

  SplitChoice s = best_split(x, y, idx, min_leaf);
  if (!s.found) return node_id;

  std::vector<int> left, right;
  for (int i : idx) (x[s.var][i] <= s.threshold ? left : right).push_back(i);
  idx.clear();
  idx.shrink_to_fit();

  tree.nodes[node_id].var = s.var;
  tree.nodes[node_id].threshold = s.threshold;
  int l = grow(tree, x, y, std::move(left), min_leaf);
  int r = grow(tree, x, y, std::move(right), min_leaf);
  tree.nodes[node_id].left = l;
  tree.nodes[node_id].right = r;
  return node_id;
}

// splitmix64: decorrelates per-tree streams derived from the master seed
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

ForestModel fit_forest(const Dataset& ds, Band band, int n_trees, int min_leaf,
                       std::uint64_t seed, bool bootstrap, const std::vector<int>& active) {
  const size_t n = ds.size();
  if (n < static_cast<size_t>(min_leaf))
    throw Error("fit_forest: need at least min_leaf observations");
  if (n_trees < 1) throw Error("fit_forest: need at least one tree");

  Eigen::VectorXd y_all = band_vector(ds, band);
  std::vector<std::vector<double>> x(active.size(), std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    auto p = ds.observations[i].predictors();
    for (size_t j = 0; j < active.size(); ++j) x[j][i] = p[active[j]];
  }
  std::vector<double> y(y_all.data(), y_all.data() + n);

  ForestModel m;
  m.band = band;
  m.active = active;
  m.min_leaf = min_leaf;
  m.seed = seed;
  m.bootstrap = bootstrap;
  m.trees.resize(static_cast<size_t>(n_trees));

  for (int t = 0; t < n_trees; ++t) {
    std::vector<int> idx(n);
    if (bootstrap) {
      std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
      for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(rng() % n);
      std::sort(idx.begin(), idx.end());
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    grow(m.trees[static_cast<size_t>(t)], x, y, std::move(idx), min_leaf);
  }
  return m;
}

double predict_tree(const Tree& t, const std::vector<double>& x) {
  int node = 0;
  while (t.nodes[node].var >= 0)
    node = x[t.nodes[node].var] <= t.nodes[node].threshold ? t.nodes[node].left
                                                          : t.nodes[node].right;
  return t.nodes[node].value;
}

double predict(const ForestModel& m, const std::array<double, kNumPredictors>& p) {
  std::vector<double> x(m.active.size());
  for (size_t j = 0; j < m.active.size(); ++j) x[j] = p[m.active[j]];
  double acc = 0.0;
  for (const auto& t : m.trees) acc += predict_tree(t, x);
  return acc / static_cast<double>(m.trees.size());
}

double predict(const ForestModel& m, const Observation& o) { return predict(m, o.predictors()); }

}  // namespace nlcolor
