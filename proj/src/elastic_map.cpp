#include <algorithm>
#include <cmath>
#include <limits>

#include "nlcolor/elastic_map.hpp"

namespace nlcolor {

const std::array<double, 9> kBendPenaltySweep = {1e-5, 1e-4, 1e-3, 1e-2,
                                                 0.05, 0.1,  0.3,  0.5, 1.0};

ElasticNetTopology make_topology(int g1, int g2) {
  if (g1 < 1 || g2 < 1) throw Error("make_topology: grid dims must be >= 1");
  ElasticNetTopology t;
  t.g1 = g1;
  t.g2 = g2;
  for (int i = 0; i < g1; ++i)
    for (int j = 0; j + 1 < g2; ++j) t.edges.emplace_back(t.node_index(i, j), t.node_index(i, j + 1));
  for (int j = 0; j < g2; ++j)
    for (int i = 0; i + 1 < g1; ++i) t.edges.emplace_back(t.node_index(i, j), t.node_index(i + 1, j));
  for (int i = 0; i < g1; ++i)
    for (int j = 0; j + 2 < g2; ++j)
      t.ribs.push_back({t.node_index(i, j), t.node_index(i, j + 1), t.node_index(i, j + 2)});
  for (int j = 0; j < g2; ++j)
    for (int i = 0; i + 2 < g1; ++i)
      t.ribs.push_back({t.node_index(i, j), t.node_index(i + 1, j), t.node_index(i + 2, j)});
  return t;
}

namespace {

Eigen::MatrixXd raw_cloud(const Dataset& ds, Band band) {
  if (!ds.has_band(band))
    throw Error(std::string("band ") + band_letter(band) + " is not populated in the dataset");
  Eigen::MatrixXd z(static_cast<Eigen::Index>(ds.size()), kMapDims);
  for (size_t i = 0; i < ds.size(); ++i) {
    auto p = ds.observations[i].predictors();
    for (int j = 0; j < kNumPredictors; ++j) z(static_cast<Eigen::Index>(i), j) = p[j];
    z(static_cast<Eigen::Index>(i), kNumPredictors) = *ds.observations[i].band(band);
  }
  return z;
}

}  // namespace

Eigen::MatrixXd standardized_cloud(const ElasticMap& map, const Dataset& ds) {
  Eigen::MatrixXd z = raw_cloud(ds, map.band);
  for (int j = 0; j < kMapDims; ++j)
    z.col(j) = (z.col(j).array() - map.mean[j]) / map.sd[j];
  return z;
}

ElasticMap init_map(const Dataset& ds, Band band, int g1, int g2, double mu_bend,
                    double lambda_stretch) {
  if (ds.size() < 3) throw Error("init_map: need at least 3 observations");

  ElasticMap map;
  map.topology = make_topology(g1, g2);
  map.band = band;
  map.mu_bend = mu_bend;
  map.lambda_stretch = lambda_stretch;

  Eigen::MatrixXd z = raw_cloud(ds, band);
  const double n = static_cast<double>(z.rows());
  int nondegenerate = 0;
  for (int j = 0; j < kMapDims; ++j) {
    double mean = z.col(j).mean();
    double var = (z.col(j).array() - mean).square().mean();
    map.mean[j] = mean;
    if (var > 0) {
      map.sd[j] = std::sqrt(var);
      ++nondegenerate;
    } else {
      map.sd[j] = 1.0;
    }
    z.col(j) = (z.col(j).array() - mean) / map.sd[j];
  }
  if (nondegenerate < 3)
    throw Error("init_map: fewer than 3 non-degenerate dimensions in the data");

  Eigen::MatrixXd cov = z.transpose() * z / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // eigenvalues ascending; PC1 is the last column
  auto principal = [&](int k) {
    Eigen::VectorXd v = eig.eigenvectors().col(kMapDims - 1 - k);
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;  // sign convention: largest component positive
    return v;
  };
  Eigen::VectorXd pc1 = principal(0), pc2 = principal(1);
  double s1 = std::sqrt(std::max(0.0, eig.eigenvalues()[kMapDims - 1]));
  double s2 = std::sqrt(std::max(0.0, eig.eigenvalues()[kMapDims - 2]));

  map.node_positions.resize(map.topology.node_count(), kMapDims);
  for (int i = 0; i < g1; ++i) {
    double a = g1 > 1 ? (2.0 * i / (g1 - 1) - 1.0) * 2.0 * s1 : 0.0;
    for (int j = 0; j < g2; ++j) {
      double b = g2 > 1 ? (2.0 * j / (g2 - 1) - 1.0) * 2.0 * s2 : 0.0;
      map.node_positions.row(map.topology.node_index(i, j)) = (a * pc1 + b * pc2).transpose();
    }
  }
  return map;
}

MapEnergy map_energy(const ElasticMap& map, const Eigen::MatrixXd& cloud,
                     const std::vector<int>& assignment) {
  MapEnergy e;
  const double n = static_cast<double>(cloud.rows());
  for (Eigen::Index i = 0; i < cloud.rows(); ++i)
    e.data += (cloud.row(i) - map.node_positions.row(assignment[static_cast<size_t>(i)])).squaredNorm();
  e.data /= n;
  for (const auto& [a, b] : map.topology.edges)
    e.stretch += (map.node_positions.row(a) - map.node_positions.row(b)).squaredNorm();
  e.stretch *= map.lambda_stretch;
  for (const auto& r : map.topology.ribs)
    e.bend += (map.node_positions.row(r[0]) - 2.0 * map.node_positions.row(r[1]) +
               map.node_positions.row(r[2]))
                  .squaredNorm();
  e.bend *= map.mu_bend;
  return e;
}

namespace {

std::vector<int> assign_points(const Eigen::MatrixXd& cloud, const Eigen::MatrixXd& nodes) {
  std::vector<int> assignment(static_cast<size_t>(cloud.rows()));
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (Eigen::Index k = 0; k < nodes.rows(); ++k) {
      double d = (cloud.row(i) - nodes.row(k)).squaredNorm();
      if (d < best) {  // strict: ties go to the lowest node index
        best = d;
        best_k = static_cast<int>(k);
      }
    }
    assignment[static_cast<size_t>(i)] = best_k;
  }
  return assignment;
}

}  // namespace

ElasticMap fit_map(ElasticMap map, const Dataset& ds, int max_iter, double tol) {
  Eigen::MatrixXd cloud = standardized_cloud(map, ds);
  const Eigen::Index n = cloud.rows();
  const int m = map.topology.node_count();
  const double nd = static_cast<double>(n);

  // elastic part of the system matrix is partition-independent
  Eigen::MatrixXd elastic = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [a, b] : map.topology.edges) {
    elastic(a, a) += map.lambda_stretch;
    elastic(b, b) += map.lambda_stretch;
    elastic(a, b) -= map.lambda_stretch;
    elastic(b, a) -= map.lambda_stretch;
  }
  for (const auto& r : map.topology.ribs) {
    // quadratic form of |y_a - 2 y_b + y_c|^2
    const int a = r[0], b = r[1], c = r[2];
    const double w = map.mu_bend;
    elastic(a, a) += w;
    elastic(b, b) += 4 * w;
    elastic(c, c) += w;
    elastic(a, b) += -2 * w;
    elastic(b, a) += -2 * w;
    elastic(b, c) += -2 * w;
    elastic(c, b) += -2 * w;
    elastic(a, c) += w;
    elastic(c, a) += w;
  }

  Eigen::VectorXd mean_point = cloud.colwise().mean();
  double total_var = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    total_var += (cloud.row(i) - mean_point.transpose()).squaredNorm();
  total_var /= nd;

  map.energy_history.clear();
  map.converged = false;
  std::vector<int> assignment;
  for (int iter = 0; iter < max_iter; ++iter) {
    assignment = assign_points(cloud, map.node_positions);

    Eigen::MatrixXd a = elastic;
    a.diagonal().array() += 1e-12;  // keeps empty-cluster nodes solvable at zero penalties
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, kMapDims);
    std::vector<double> counts(static_cast<size_t>(m), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int k = assignment[static_cast<size_t>(i)];
      counts[static_cast<size_t>(k)] += 1.0;
      b.row(k) += cloud.row(i);
    }
    for (int k = 0; k < m; ++k) a(k, k) += counts[static_cast<size_t>(k)] / nd;
    b /= nd;

    Eigen::MatrixXd new_positions = Eigen::LDLT<Eigen::MatrixXd>(a).solve(b);
    double shift = (new_positions - map.node_positions).cwiseAbs().maxCoeff();
    map.node_positions = std::move(new_positions);
    map.energy_history.push_back(map_energy(map, cloud, assignment).total());

    if (shift < tol) {
      map.converged = true;
      break;
    }
  }

  // final FVU against the fixed-point partition
  assignment = assign_points(cloud, map.node_positions);
  MapEnergy e = map_energy(map, cloud, assignment);
  map.fvu = total_var > 0 ? e.data / total_var : 0.0;
  map.fitted = true;
  return map;
}

namespace {

struct Projection {
  double dist2 = std::numeric_limits<double>::infinity();
  double value = 0.0;  // standardized band coordinate at the projection
};

// Closest point to q on the triangle (a, b, c) in the predictor subspace;
// dimension-agnostic Ericson construction using dot products only.
void project_triangle(const Eigen::Matrix<double, 1, kNumPredictors>& q,
                      const Eigen::RowVectorXd& a6, const Eigen::RowVectorXd& b6,
                      const Eigen::RowVectorXd& c6, Projection& best) {
  auto pred = [](const Eigen::RowVectorXd& v) {
    return v.head(kNumPredictors);
  };
  Eigen::RowVectorXd ab = pred(b6) - pred(a6);
  Eigen::RowVectorXd ac = pred(c6) - pred(a6);
  Eigen::RowVectorXd ap = q - pred(a6);

  auto consider = [&](double v, double w) {
    Eigen::RowVectorXd point = pred(a6) + v * ab + w * ac;
    double d2 = (q - point).squaredNorm();
    if (d2 < best.dist2) {
      best.dist2 = d2;
      best.value = a6[kNumPredictors] + v * (b6[kNumPredictors] - a6[kNumPredictors]) +
                   w * (c6[kNumPredictors] - a6[kNumPredictors]);
    }
  };

  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) { consider(0, 0); return; }

  Eigen::RowVectorXd bp = q - pred(b6);
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) { consider(1, 0); return; }

  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    double denom = d1 - d3;
    consider(denom != 0 ? d1 / denom : 0.0, 0);
    return;
  }

  Eigen::RowVectorXd cp = q - pred(c6);
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) { consider(0, 1); return; }

  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    double denom = d2 - d6;
    consider(0, denom != 0 ? d2 / denom : 0.0);
    return;
  }

  double va = d3 * d6 - d4 * d5;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    double denom = (d4 - d3) + (d5 - d6);
    double w = denom != 0 ? (d4 - d3) / denom : 0.0;
    consider(1 - w, w);
    return;
  }

  double denom = va + vb + vc;
  if (denom > 0) {
    consider(vb / denom, vc / denom);
  } else {
    // degenerate triangle: fall back to its vertices
    consider(0, 0);
    consider(1, 0);
    consider(0, 1);
  }
}

}  // namespace

double project_impute(const ElasticMap& map, const std::array<double, kNumPredictors>& predictors) {
  if (!map.fitted) throw Error("project_impute: map has not been fitted");

  Eigen::Matrix<double, 1, kNumPredictors> q;
  for (int j = 0; j < kNumPredictors; ++j) q[j] = (predictors[j] - map.mean[j]) / map.sd[j];

  const auto& t = map.topology;
  Projection best;
  if (t.g1 < 2 || t.g2 < 2) {
    // no quads: nearest node
    for (int k = 0; k < t.node_count(); ++k) {
      double d2 = (q - map.node_positions.row(k).head(kNumPredictors)).squaredNorm();
      if (d2 < best.dist2) {
        best.dist2 = d2;
        best.value = map.node_positions(k, kNumPredictors);
      }
    }
  } else {
    for (int i = 0; i + 1 < t.g1; ++i) {
      for (int j = 0; j + 1 < t.g2; ++j) {
        // quad split along the diagonal through its lowest-index corner
        int n00 = t.node_index(i, j), n01 = t.node_index(i, j + 1);
        int n10 = t.node_index(i + 1, j), n11 = t.node_index(i + 1, j + 1);
        project_triangle(q, map.node_positions.row(n00), map.node_positions.row(n01),
                         map.node_positions.row(n11), best);
        project_triangle(q, map.node_positions.row(n00), map.node_positions.row(n10),
                         map.node_positions.row(n11), best);
      }
    }
  }
  return best.value * map.sd[kNumPredictors] + map.mean[kNumPredictors];
}

double project_impute(const ElasticMap& map, const Observation& o) {
  return project_impute(map, o.predictors());
}

std::vector<SweepEntry> penalty_sweep(const Dataset& ds, Band band,
                                      const std::vector<double>& penalties, int g1, int g2,
                                      int max_iter, double tol) {
  if (penalties.empty()) return {};
  ElasticMap shared_init = init_map(ds, band, g1, g2, /*mu_bend=*/0.0);
  Eigen::MatrixXd cloud = standardized_cloud(shared_init, ds);

  // The splitting optimization only finds a local optimum, so a map fitted at
  // one penalty can beat the map fitted at another penalty under the latter's
  // own objective. Multi-start: fit one cold start per penalty plus a chain of
  // warm starts in ascending penalty order, then give each penalty the pool
  // candidate minimizing its total energy. Selecting by argmin over a shared
  // pool also makes the data energy (and hence FVU) provably non-decreasing
  // in the bending penalty.
  struct Candidate {
    ElasticMap map;
    double data_stretch = 0.0;  // U(Y) + U(E), penalty-independent given lambda
    double bend_raw = 0.0;      // unweighted rib term
  };
  std::vector<Candidate> pool;
  auto add_candidate = [&](ElasticMap m) {
    Candidate c;
    auto assignment = assign_points(cloud, m.node_positions);
    double saved_mu = m.mu_bend;
    m.mu_bend = 1.0;  // makes map_energy report the unweighted rib sum
    MapEnergy e = map_energy(m, cloud, assignment);
    m.mu_bend = saved_mu;
    c.data_stretch = e.data + e.stretch;
    c.bend_raw = e.bend;
    c.map = std::move(m);
    pool.push_back(std::move(c));
    return pool.size() - 1;
  };

  std::vector<size_t> order(penalties.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return penalties[a] < penalties[b]; });

  size_t warm_seed = 0;
  bool have_seed = false;
  for (size_t idx : order) {
    double mu = penalties[idx];
    ElasticMap cold = shared_init;
    cold.mu_bend = mu;
    size_t ci = add_candidate(fit_map(std::move(cold), ds, max_iter, tol));
    if (have_seed) {
      ElasticMap warm = pool[warm_seed].map;
      warm.mu_bend = mu;
      size_t wi = add_candidate(fit_map(std::move(warm), ds, max_iter, tol));
      double uc = pool[ci].data_stretch + mu * pool[ci].bend_raw;
      double uw = pool[wi].data_stretch + mu * pool[wi].bend_raw;
      warm_seed = uw < uc ? wi : ci;
    } else {
      warm_seed = ci;
      have_seed = true;
    }
  }

  std::vector<SweepEntry> out(penalties.size());
  for (size_t idx = 0; idx < penalties.size(); ++idx) {
    double mu = penalties[idx];
    size_t best = 0;
    double best_u = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < pool.size(); ++c) {
      double u = pool[c].data_stretch + mu * pool[c].bend_raw;
      if (u < best_u) {
        best_u = u;
        best = c;
      }
    }
    ElasticMap chosen = pool[best].map;
    chosen.mu_bend = mu;
    out[idx] = {mu, std::move(chosen), 0.0};
    out[idx].fvu = out[idx].map.fvu;
  }
  return out;
}

}  // namespace nlcolor
