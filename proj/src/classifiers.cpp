#include "fairdiff/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fairdiff/errors.hpp"

namespace fairdiff {
namespace {

constexpr double kVarianceFloor = 1e-9;
constexpr Eigen::Index kKnnBlock = 256;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void validate_training(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const double> w) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n || w.size() != n) throw PreconditionError("features, labels and weights differ in length");
  if (n < 2) throw PreconditionError("classifier training needs at least two rows");
  if (!x.allFinite()) throw PreconditionError("classifier features contain non-finite values");
  bool seen[2] = {false, false};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0 && y[i] != 1) throw PreconditionError("labels must be 0/1");
    if (!std::isfinite(w[i]) || w[i] < 0.0) throw PreconditionError("sample weights must be finite and >= 0");
    seen[y[i]] = true;
    total += w[i];
  }
  if (!seen[0] || !seen[1]) throw PreconditionError("training labels contain a single class");
  if (!(total > 0.0)) throw PreconditionError("sample weights sum to zero");
}

GaussianNB fit_gnb(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const double> w) {
  const Eigen::Index d = x.cols();
  GaussianNB m;
  m.mean = Eigen::MatrixXd::Zero(2, d);
  m.variance = Eigen::MatrixXd::Zero(2, d);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(2, d);
  double wc[2] = {0.0, 0.0};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    const double wi = w[static_cast<std::size_t>(i)];
    wc[c] += wi;
    m.mean.row(c) += wi * x.row(i);
    sq.row(c) += wi * x.row(i).cwiseProduct(x.row(i));
  }
  for (int c = 0; c < 2; ++c) {
    if (!(wc[c] > 0.0)) throw PreconditionError("a class has zero total weight");
    m.mean.row(c) /= wc[c];
    sq.row(c) /= wc[c];
    m.variance.row(c) = (sq.row(c) - m.mean.row(c).cwiseProduct(m.mean.row(c))).cwiseMax(kVarianceFloor);
    m.prior[c] = wc[c] / (wc[0] + wc[1]);
  }
  return m;
}

double gnb_proba(const GaussianNB& m, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double ll[2];
  for (int c = 0; c < 2; ++c) {
    const Eigen::ArrayXd diff = (row - m.mean.row(c)).transpose().array();
    const Eigen::ArrayXd var = m.variance.row(c).transpose().array();
    ll[c] = std::log(m.prior[c]) -
            0.5 * ((2.0 * std::numbers::pi * var).log() + diff.square() / var).sum();
  }
  return sigmoid(ll[1] - ll[0]);
}

LogisticRegression fit_lr(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const double> w,
                          const ClassifierParams& p) {
  const Eigen::Index n = x.rows();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  Eigen::VectorXd wn(n), yv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    wn(i) = w[static_cast<std::size_t>(i)] / total;
    yv(i) = y[static_cast<std::size_t>(i)];
  }
  LogisticRegression m;
  m.coef = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd z(n), r(n), g;
  for (int it = 0; it < p.lr_max_iterations; ++it) {
    z.noalias() = x * m.coef;
    for (Eigen::Index i = 0; i < n; ++i) r(i) = wn(i) * (sigmoid(z(i) + m.intercept) - yv(i));
    g.noalias() = x.transpose() * r;
    const double gb = r.sum();
    m.gradient_norm = std::sqrt(g.squaredNorm() + gb * gb);
    m.iterations = it;
    if (m.gradient_norm < p.lr_tolerance) break;
    m.coef -= p.lr_learning_rate * g;
    m.intercept -= p.lr_learning_rate * gb;
    m.iterations = it + 1;
  }
  return m;
}

RandomForest fit_rf(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const double> w,
                    const ClassifierParams& p, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<double> cumulative(n);
  std::partial_sum(w.begin(), w.end(), cumulative.begin());
  const double total = cumulative.back();

  TreeParams tp = p.tree;
  tp.max_features = p.rf_max_features > 0
                        ? p.rf_max_features
                        : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d)))));
  const std::vector<double> unit(n, 1.0);

  RandomForest forest;
  forest.trees.reserve(static_cast<std::size_t>(p.rf_trees));
  std::vector<std::size_t> rows(n);
  for (int t = 0; t < p.rf_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::uniform_real_distribution<double> u(0.0, total);
    // Weighted bootstrap: each draw picks row i with probability w_i / sum(w).
    for (std::size_t i = 0; i < n; ++i) {
      const double target = u(rng);
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
      rows[i] = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
    }
    forest.trees.push_back(DecisionTree::fit(x, y, unit, rows, tp, &rng));
  }
  return forest;
}

std::vector<double> knn_proba(const KNearest& m, const Eigen::MatrixXd& q) {
  const Eigen::Index n_train = m.x.rows();
  const auto k = static_cast<std::size_t>(std::min<Eigen::Index>(m.k, n_train));
  const Eigen::VectorXd train_sq = m.x.rowwise().squaredNorm();
  std::vector<double> out(static_cast<std::size_t>(q.rows()));
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n_train));
  for (Eigen::Index start = 0; start < q.rows(); start += kKnnBlock) {
    const Eigen::Index len = std::min(kKnnBlock, q.rows() - start);
    const Eigen::MatrixXd block = q.middleRows(start, len);
    const Eigen::MatrixXd cross = block * m.x.transpose();
    const Eigen::VectorXd q_sq = block.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < len; ++i) {
      for (Eigen::Index j = 0; j < n_train; ++j) {
        dist[static_cast<std::size_t>(j)] = {std::max(0.0, q_sq(i) + train_sq(j) - 2.0 * cross(i, j)), j};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      int pos = 0;
      for (std::size_t a = 0; a < k; ++a) pos += m.y[static_cast<std::size_t>(dist[a].second)];
      out[static_cast<std::size_t>(start + i)] = static_cast<double>(pos) / static_cast<double>(k);
    }
  }
  return out;
}

nlohmann::json tree_to_json(const DecisionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.proba});
  return nodes;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j) {
    nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                             n.at(3).get<int>(), n.at(4).get<double>()});
  }
  const auto count = static_cast<int>(nodes.size());
  for (const auto& n : nodes) {
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
      throw ParseError("classifier file: malformed tree");
  }
  if (nodes.empty()) throw ParseError("classifier file: empty tree");
  return DecisionTree(std::move(nodes));
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ParseError("classifier file: bad matrix");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

}  // namespace

const char* short_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kDecisionTree: return "DT";
    case ClassifierKind::kGaussianNB: return "GNB";
    case ClassifierKind::kKNearest: return "KNN";
    case ClassifierKind::kLogisticRegression: return "LR";
    case ClassifierKind::kRandomForest: return "RF";
  }
  return "?";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  for (ClassifierKind k : kAllClassifiers) {
    if (name == short_name(k)) return k;
  }
  throw ParseError("unknown classifier '" + std::string(name) + "' (expected DT, GNB, KNN, LR or RF)");
}

ClassifierParams ClassifierParams::from_json(const nlohmann::json& j) {
  ClassifierParams p;
  try {
    p.tree.max_depth = j.value("dt_max_depth", p.tree.max_depth);
    p.tree.min_leaf_fraction = j.value("dt_min_leaf_fraction", p.tree.min_leaf_fraction);
    p.knn_k = j.value("knn_k", p.knn_k);
    p.lr_learning_rate = j.value("lr_learning_rate", p.lr_learning_rate);
    p.lr_tolerance = j.value("lr_tolerance", p.lr_tolerance);
    p.lr_max_iterations = j.value("lr_max_iterations", p.lr_max_iterations);
    p.rf_trees = j.value("rf_trees", p.rf_trees);
    p.rf_max_features = j.value("rf_max_features", p.rf_max_features);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("classifier config: ") + e.what());
  }
  if (p.tree.max_depth < 0 || p.knn_k < 1 || p.rf_trees < 1 || !(p.lr_learning_rate > 0.0) ||
      p.lr_max_iterations < 0 || p.tree.min_leaf_fraction < 0.0 || p.tree.min_leaf_fraction >= 0.5)
    throw ParseError("classifier config: invalid hyperparameter value");
  return p;
}

nlohmann::json ClassifierParams::to_json() const {
  return {{"dt_max_depth", tree.max_depth},     {"dt_min_leaf_fraction", tree.min_leaf_fraction},
          {"knn_k", knn_k},                     {"lr_learning_rate", lr_learning_rate},
          {"lr_tolerance", lr_tolerance},       {"lr_max_iterations", lr_max_iterations},
          {"rf_trees", rf_trees},               {"rf_max_features", rf_max_features}};
}

ClassifierKind ClassifierModel::kind() const {
  return static_cast<ClassifierKind>(impl_.index());
}

std::vector<double> ClassifierModel::predict_proba(const EncodedMatrix& features) const {
  if (!(features.layout == layout_)) throw PreconditionError("feature layout does not match the fitted layout");
  return predict_proba(features.values);
}

std::vector<double> ClassifierModel::predict_proba(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != layout_.width)
    throw PreconditionError("feature width does not match the fitted layout");
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> out(n);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          for (std::size_t i = 0; i < n; ++i) out[i] = m.predict(x.row(static_cast<Eigen::Index>(i)));
        } else if constexpr (std::is_same_v<T, GaussianNB>) {
          for (std::size_t i = 0; i < n; ++i) out[i] = gnb_proba(m, x.row(static_cast<Eigen::Index>(i)));
        } else if constexpr (std::is_same_v<T, KNearest>) {
          out = knn_proba(m, x);
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          const Eigen::VectorXd z = x * m.coef;
          for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid(z(static_cast<Eigen::Index>(i)) + m.intercept);
        } else {
          for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (const auto& tree : m.trees) s += tree.predict(x.row(static_cast<Eigen::Index>(i)));
            out[i] = s / static_cast<double>(m.trees.size());
          }
        }
      },
      impl_);
  return out;
}

ClassifierModel fit(ClassifierKind kind, const EncodedMatrix& features, std::span<const int> labels,
                    std::span<const double> weights, const ClassifierParams& params, std::uint64_t seed) {
  const Eigen::MatrixXd& x = features.values;
  validate_training(x, labels, weights);
  switch (kind) {
    case ClassifierKind::kDecisionTree: {
      std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      TreeParams tp = params.tree;
      tp.max_features = 0;
      return {DecisionTree::fit(x, labels, weights, rows, tp), features.layout};
    }
    case ClassifierKind::kGaussianNB:
      return {fit_gnb(x, labels, weights), features.layout};
    case ClassifierKind::kKNearest:
      return {KNearest{x, std::vector<int>(labels.begin(), labels.end()), params.knn_k}, features.layout};
    case ClassifierKind::kLogisticRegression:
      return {fit_lr(x, labels, weights, params), features.layout};
    case ClassifierKind::kRandomForest:
      return {fit_rf(x, labels, weights, params, seed), features.layout};
  }
  throw PreconditionError("unknown classifier kind");
}

nlohmann::json ClassifierModel::to_json() const {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : layout_.groups) groups.push_back({g.column, g.offset, g.size});
  nlohmann::json j{{"kind", short_name(kind())},
                   {"layout", {{"numerical", layout_.numerical_columns}, {"groups", groups}, {"width", layout_.width}}}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          j["tree"] = tree_to_json(m);
        } else if constexpr (std::is_same_v<T, GaussianNB>) {
          j["mean"] = matrix_to_json(m.mean);
          j["variance"] = matrix_to_json(m.variance);
          j["prior"] = {m.prior[0], m.prior[1]};
        } else if constexpr (std::is_same_v<T, KNearest>) {
          j["x"] = matrix_to_json(m.x);
          j["y"] = m.y;
          j["k"] = m.k;
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          j["coef"] = std::vector<double>(m.coef.data(), m.coef.data() + m.coef.size());
          j["intercept"] = m.intercept;
          j["iterations"] = m.iterations;
        } else {
          nlohmann::json trees = nlohmann::json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          j["trees"] = std::move(trees);
        }
      },
      impl_);
  return j;
}

ClassifierModel ClassifierModel::from_json(const nlohmann::json& j) {
  try {
    EncodedLayout layout;
    const auto& lj = j.at("layout");
    layout.numerical_columns = lj.at("numerical").get<std::vector<std::size_t>>();
    for (const auto& g : lj.at("groups"))
      layout.groups.push_back({g.at(0).get<std::size_t>(), g.at(1).get<std::size_t>(), g.at(2).get<std::size_t>()});
    layout.width = lj.at("width").get<std::size_t>();

    switch (parse_classifier_kind(j.at("kind").get<std::string>())) {
      case ClassifierKind::kDecisionTree:
        return {tree_from_json(j.at("tree")), layout};
      case ClassifierKind::kGaussianNB: {
        GaussianNB m;
        m.mean = matrix_from_json(j.at("mean"));
        m.variance = matrix_from_json(j.at("variance"));
        m.prior[0] = j.at("prior").at(0).get<double>();
        m.prior[1] = j.at("prior").at(1).get<double>();
        return {m, layout};
      }
      case ClassifierKind::kKNearest:
        return {KNearest{matrix_from_json(j.at("x")), j.at("y").get<std::vector<int>>(), j.at("k").get<int>()}, layout};
      case ClassifierKind::kLogisticRegression: {
        LogisticRegression m;
        const auto coef = j.at("coef").get<std::vector<double>>();
        m.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
        m.intercept = j.at("intercept").get<double>();
        m.iterations = j.at("iterations").get<int>();
        return {m, layout};
      }
      case ClassifierKind::kRandomForest: {
        RandomForest m;
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
        return {m, layout};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("classifier file: ") + e.what());
  }
  throw ParseError("classifier file: unknown kind");
}

std::vector<int> PredictionSet::labels() const { return hard_labels(proba, threshold); }

std::vector<int> hard_labels(std::span<const double> proba, double threshold) {
  std::vector<int> out(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) out[i] = proba[i] >= threshold ? 1 : 0;
  return out;
}

std::vector<std::vector<int>> threshold_sweep(std::span<const double> proba, std::span<const double> grid) {
  std::vector<std::vector<int>> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(hard_labels(proba, t));
  return out;
}

std::vector<double> uniform_grid(std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {0.5};
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  return g;
}

}  // namespace fairdiff
