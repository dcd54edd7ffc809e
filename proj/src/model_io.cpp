#include <fstream>
#include <sstream>

#include "nlcolor/model_io.hpp"

namespace nlcolor {

namespace {

void write_ints(std::ostream& out, const std::vector<int>& v) {
  out << v.size();
  for (int x : v) out << ' ' << x;
  out << '\n';
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
  out << v.size();
  for (double x : v) out << ' ' << format_double(x);
  out << '\n';
}

std::vector<int> read_ints(std::istream& in) {
  size_t n;
  if (!(in >> n)) throw Error("model file: malformed int list");
  std::vector<int> v(n);
  for (auto& x : v)
    if (!(in >> x)) throw Error("model file: truncated int list");
  return v;
}

std::vector<double> read_doubles(std::istream& in) {
  size_t n;
  if (!(in >> n)) throw Error("model file: malformed double list");
  std::vector<double> v(n);
  for (auto& x : v)
    if (!(in >> x)) throw Error("model file: truncated double list");
  return v;
}

void expect(std::istream& in, const std::string& token) {
  std::string t;
  if (!(in >> t) || t != token)
    throw Error("model file: expected '" + token + "', got '" + t + "'");
}

void save(std::ostream& out, const LinearModel& m) {
  out << "kind ols\nband " << band_letter(m.band) << "\n";
  out << "active ";
  write_ints(out, m.active);
  out << "b0 " << format_double(m.b0) << "\n";
  out << "coef ";
  write_doubles(out, m.coef);
  out << "t_stats ";
  write_doubles(out, m.t_stats);
  out << "vif ";
  write_doubles(out, m.vif);
  out << "r2 " << format_double(m.r2) << "\n";
  out << "resid_var " << format_double(m.resid_var) << "\n";
  out << "n_train " << m.n_train << "\n";
}

void save(std::ostream& out, const KernelModel& m) {
  out << "kind kernel\nband " << band_letter(m.band) << "\n";
  out << "active ";
  write_ints(out, m.active);
  out << "sigma " << format_double(m.sigma) << "\nlambda " << format_double(m.lambda) << "\n";
  out << "mean ";
  write_doubles(out, m.mean);
  out << "sd ";
  write_doubles(out, m.sd);
  out << "y_mean " << format_double(m.y_mean) << "\n";
  out << "seed " << m.seed << "\n";
  out << "train " << m.train_x.rows() << ' ' << m.train_x.cols() << "\n";
  for (Eigen::Index i = 0; i < m.train_x.rows(); ++i) {
    out << format_double(m.alpha[i]);
    for (Eigen::Index j = 0; j < m.train_x.cols(); ++j) out << ' ' << format_double(m.train_x(i, j));
    out << '\n';
  }
}

void save(std::ostream& out, const ForestModel& m) {
  out << "kind forest\nband " << band_letter(m.band) << "\n";
  out << "active ";
  write_ints(out, m.active);
  out << "min_leaf " << m.min_leaf << "\nseed " << m.seed << "\nbootstrap " << (m.bootstrap ? 1 : 0)
      << "\n";
  out << "trees " << m.trees.size() << "\n";
  for (const auto& t : m.trees) {
    out << "tree " << t.nodes.size() << "\n";
    for (const auto& nd : t.nodes)
      out << nd.var << ' ' << format_double(nd.threshold) << ' ' << nd.left << ' ' << nd.right
          << ' ' << format_double(nd.value) << '\n';
  }
}

void save(std::ostream& out, const ElasticMap& m) {
  out << "kind elmap\nband " << band_letter(m.band) << "\n";
  out << "dims " << m.topology.g1 << ' ' << m.topology.g2 << "\n";
  out << "lambda_stretch " << format_double(m.lambda_stretch) << "\n";
  out << "mu_bend " << format_double(m.mu_bend) << "\n";
  out << "mean ";
  write_doubles(out, {m.mean.begin(), m.mean.end()});
  out << "sd ";
  write_doubles(out, {m.sd.begin(), m.sd.end()});
  out << "fvu " << format_double(m.fvu) << "\n";
  out << "fitted " << (m.fitted ? 1 : 0) << "\nconverged " << (m.converged ? 1 : 0) << "\n";
  out << "nodes " << m.node_positions.rows() << "\n";
  for (Eigen::Index i = 0; i < m.node_positions.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.node_positions.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m.node_positions(i, j));
    }
    out << '\n';
  }
}

LinearModel load_linear(std::istream& in) {
  LinearModel m;
  std::string s;
  expect(in, "band");
  in >> s;
  m.band = parse_band(s);
  expect(in, "active");
  m.active = read_ints(in);
  expect(in, "b0");
  in >> m.b0;
  expect(in, "coef");
  m.coef = read_doubles(in);
  expect(in, "t_stats");
  m.t_stats = read_doubles(in);
  expect(in, "vif");
  m.vif = read_doubles(in);
  expect(in, "r2");
  in >> m.r2;
  expect(in, "resid_var");
  in >> m.resid_var;
  expect(in, "n_train");
  in >> m.n_train;
  if (!in) throw Error("model file: truncated linear model");
  return m;
}

KernelModel load_kernel(std::istream& in) {
  KernelModel m;
  std::string s;
  expect(in, "band");
  in >> s;
  m.band = parse_band(s);
  expect(in, "active");
  m.active = read_ints(in);
  expect(in, "sigma");
  in >> m.sigma;
  expect(in, "lambda");
  in >> m.lambda;
  expect(in, "mean");
  m.mean = read_doubles(in);
  expect(in, "sd");
  m.sd = read_doubles(in);
  expect(in, "y_mean");
  in >> m.y_mean;
  expect(in, "seed");
  in >> m.seed;
  expect(in, "train");
  Eigen::Index rows, cols;
  in >> rows >> cols;
  if (!in) throw Error("model file: truncated kernel model");
  m.alpha.resize(rows);
  m.train_x.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    in >> m.alpha[i];
    for (Eigen::Index j = 0; j < cols; ++j) in >> m.train_x(i, j);
  }
  if (!in) throw Error("model file: truncated kernel training matrix");
  return m;
}

ForestModel load_forest(std::istream& in) {
  ForestModel m;
  std::string s;
  expect(in, "band");
  in >> s;
  m.band = parse_band(s);
  expect(in, "active");
  m.active = read_ints(in);
  expect(in, "min_leaf");
  in >> m.min_leaf;
  expect(in, "seed");
  in >> m.seed;
  expect(in, "bootstrap");
  int flag;
  in >> flag;
  m.bootstrap = flag != 0;
  expect(in, "trees");
  size_t n_trees;
  in >> n_trees;
  m.trees.resize(n_trees);
  for (auto& t : m.trees) {
    expect(in, "tree");
    size_t n_nodes;
    in >> n_nodes;
    t.nodes.resize(n_nodes);
    for (auto& nd : t.nodes) in >> nd.var >> nd.threshold >> nd.left >> nd.right >> nd.value;
  }
  if (!in) throw Error("model file: truncated forest model");
  return m;
}

ElasticMap load_elmap(std::istream& in) {
  ElasticMap m;
  std::string s;
  expect(in, "band");
  in >> s;
  m.band = parse_band(s);
  expect(in, "dims");
  int g1, g2;
  in >> g1 >> g2;
  m.topology = make_topology(g1, g2);
  expect(in, "lambda_stretch");
  in >> m.lambda_stretch;
  expect(in, "mu_bend");
  in >> m.mu_bend;
  expect(in, "mean");
  auto mean = read_doubles(in);
  expect(in, "sd");
  auto sd = read_doubles(in);
  if (mean.size() != kMapDims || sd.size() != kMapDims)
    throw Error("model file: elastic map standardization must have 6 entries");
  std::copy(mean.begin(), mean.end(), m.mean.begin());
  std::copy(sd.begin(), sd.end(), m.sd.begin());
  expect(in, "fvu");
  in >> m.fvu;
  expect(in, "fitted");
  int flag;
  in >> flag;
  m.fitted = flag != 0;
  expect(in, "converged");
  in >> flag;
  m.converged = flag != 0;
  expect(in, "nodes");
  Eigen::Index rows;
  in >> rows;
  if (rows != m.topology.node_count()) throw Error("model file: node count mismatch");
  m.node_positions.resize(rows, kMapDims);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (int j = 0; j < kMapDims; ++j) in >> m.node_positions(i, j);
  if (!in) throw Error("model file: truncated elastic map");
  return m;
}

}  // namespace

void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path);
  out << "nlcolor-model 1\n";
  std::visit([&](const auto& model) { save(out, model); }, m);
  if (!out) throw Error("write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path);
  expect(in, "nlcolor-model");
  int version;
  if (!(in >> version) || version != 1)
    throw Error("model file: unsupported format version");
  expect(in, "kind");
  std::string kind;
  in >> kind;
  if (kind == "ols") return load_linear(in);
  if (kind == "kernel") return load_kernel(in);
  if (kind == "forest") return load_forest(in);
  if (kind == "elmap") return load_elmap(in);
  throw Error("model file: unknown kind '" + kind + "'");
}

double predict_model(const Model& m, const std::array<double, kNumPredictors>& p) {
  return std::visit(
      [&](const auto& model) -> double {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, ElasticMap>)
          return project_impute(model, p);
        else
          return predict(model, p);
      },
      m);
}

double predict_model(const Model& m, const Observation& o) { return predict_model(m, o.predictors()); }

Band model_band(const Model& m) {
  return std::visit([](const auto& model) { return model.band; }, m);
}

std::string model_kind_label(const Model& m) {
  if (std::holds_alternative<LinearModel>(m)) return "ols";
  if (std::holds_alternative<KernelModel>(m)) return "kernel";
  if (std::holds_alternative<ForestModel>(m)) return "forest";
  return "elmap";
}

}  // namespace nlcolor
