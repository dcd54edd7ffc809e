#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "nlcolor/dataset.hpp"

namespace nlcolor {

constexpr int kMapDims = 6;  // 5 predictors + 1 band response

/// Rectangular g1 x g2 net: edges join adjacent nodes, ribs are triples of
/// consecutive collinear nodes carrying the bending term.
struct ElasticNetTopology {
  int g1 = 12, g2 = 12;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::array<int, 3>> ribs;

  int node_count() const { return g1 * g2; }
  int node_index(int i, int j) const { return i * g2 + j; }
};

ElasticNetTopology make_topology(int g1, int g2);

struct ElasticMap {
  ElasticNetTopology topology;
  Eigen::MatrixXd node_positions;          // node_count x 6, standardized space
  double lambda_stretch = 0.0;
  double mu_bend = 0.05;
  std::array<double, kMapDims> mean{};     // standardization per variable
  std::array<double, kMapDims> sd{};
  Band band = Band::R;                     // which coordinate (index 5) is the response
  double fvu = 1.0;
  bool fitted = false;
  bool converged = false;
  std::vector<double> energy_history;      // total energy after each iteration
};

/// Standardized 6-D cloud (predictors then band) using the map's parameters.
Eigen::MatrixXd standardized_cloud(const ElasticMap& map, const Dataset& ds);

/// z-scores the 6 variables, then places a regular grid in the PC1-PC2 plane
/// of the cloud spanning +-2 SD along each component (PC3 coordinate zero).
ElasticMap init_map(const Dataset& ds, Band band, int g1 = 12, int g2 = 12,
                    double mu_bend = 0.05, double lambda_stretch = 0.0);

/// Splitting optimization: partition points to nearest node, then solve the
/// quadratic node-position system exactly; repeats until the max node
/// displacement drops below tol or max_iter is reached.
ElasticMap fit_map(ElasticMap map, const Dataset& ds, int max_iter = 100, double tol = 1e-4);

/// Energy components at the given partition: U(Y) + U(E) + U(R).
struct MapEnergy {
  double data = 0.0;     // (1/N) sum of squared point-to-assigned-node distances
  double stretch = 0.0;  // lambda * sum over edges
  double bend = 0.0;     // mu * sum over ribs
  double total() const { return data + stretch + bend; }
};
MapEnergy map_energy(const ElasticMap& map, const Eigen::MatrixXd& cloud,
                     const std::vector<int>& assignment);

/// Closest point of the piecewise-linear surface measured in the 5 predictor
/// coordinates only; returns the de-standardized band coordinate there.
double project_impute(const ElasticMap& map, const std::array<double, kNumPredictors>& predictors);
double project_impute(const ElasticMap& map, const Observation& o);

extern const std::array<double, 9> kBendPenaltySweep;

struct SweepEntry {
  double mu_bend = 0.0;
  ElasticMap map;
  double fvu = 1.0;
};

/// Fits candidate maps per penalty (cold start from a shared initialization
/// plus warm starts chained through the ascending penalties) and returns, for
/// each penalty, the candidate with the lowest total energy under that
/// penalty. The shared candidate pool makes FVU non-decreasing in mu_bend.
std::vector<SweepEntry> penalty_sweep(const Dataset& ds, Band band,
                                      const std::vector<double>& penalties,
                                      int g1 = 12, int g2 = 12,
                                      int max_iter = 100, double tol = 1e-4);

}  // namespace nlcolor
