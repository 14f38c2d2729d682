#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fairdiff/encoding.hpp"
#include "fairdiff/random.hpp"

namespace fairdiff {

enum class ClassifierKind { kDecisionTree, kGaussianNB, kKNearest, kLogisticRegression, kRandomForest };

// "DT", "GNB", "KNN", "LR", "RF".
const char* short_name(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);
// Reporting order used by the tables.
inline constexpr ClassifierKind kAllClassifiers[] = {
    ClassifierKind::kDecisionTree, ClassifierKind::kGaussianNB, ClassifierKind::kKNearest,
    ClassifierKind::kLogisticRegression, ClassifierKind::kRandomForest};

struct TreeParams {
  int max_depth = 12;
  // A split is allowed only if each child holds at least this fraction of
  // the total training weight (0 = any child with positive weight).
  double min_leaf_fraction = 0.0;
  std::size_t max_features = 0;  // features tried per split; 0 = all
};

struct ClassifierParams {
  TreeParams tree;
  int knn_k = 5;
  double lr_learning_rate = 0.1;
  double lr_tolerance = 1e-6;
  int lr_max_iterations = 5000;
  int rf_trees = 100;
  std::size_t rf_max_features = 0;  // 0 = round(sqrt(d))

  static ClassifierParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double proba = 0.0;  // weighted favorable fraction of the node's rows
};

/// Binary CART tree over dense features; x[feature] <= threshold goes left.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  // Grows a tree on `rows` of (x, y, w); rows may repeat. When
  // params.max_features is below the feature count, candidate features are
  // drawn per node from `rng`.
  static DecisionTree fit(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const double> w,
                          std::span<const std::size_t> rows, const TreeParams& params, Rng* rng = nullptr);

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct GaussianNB {
  Eigen::MatrixXd mean;      // 2 x d, row = class
  Eigen::MatrixXd variance;  // 2 x d, floored at 1e-9
  double prior[2] = {0.5, 0.5};
};

// KNN keeps the training matrix and ignores sample weights.
struct KNearest {
  Eigen::MatrixXd x;
  std::vector<int> y;
  int k = 5;
};

struct LogisticRegression {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
};

class ClassifierModel {
 public:
  using Impl = std::variant<DecisionTree, GaussianNB, KNearest, LogisticRegression, RandomForest>;

  ClassifierModel(Impl impl, EncodedLayout layout) : impl_(std::move(impl)), layout_(std::move(layout)) {}

  ClassifierKind kind() const;
  const EncodedLayout& layout() const { return layout_; }
  const Impl& impl() const { return impl_; }

  // Favorable-class probability per row. Throws on layout mismatch.
  std::vector<double> predict_proba(const EncodedMatrix& features) const;
  std::vector<double> predict_proba(const Eigen::MatrixXd& features) const;

  nlohmann::json to_json() const;
  static ClassifierModel from_json(const nlohmann::json& j);

 private:
  Impl impl_;
  EncodedLayout layout_;
};

/// Trains one classifier. `labels` are 0/1 (1 = favorable); `weights` are
/// per-row, finite, nonnegative with a positive sum.
ClassifierModel fit(ClassifierKind kind, const EncodedMatrix& features, std::span<const int> labels,
                    std::span<const double> weights, const ClassifierParams& params, std::uint64_t seed);

struct PredictionSet {
  std::vector<double> proba;
  double threshold = 0.5;

  std::vector<int> labels() const;
};

std::vector<int> hard_labels(std::span<const double> proba, double threshold);
std::vector<std::vector<int>> threshold_sweep(std::span<const double> proba, std::span<const double> grid);

// `count` evenly spaced thresholds from 0 to 1 inclusive.
std::vector<double> uniform_grid(std::size_t count);

}  // namespace fairdiff
