#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairdiff/dataset.hpp"

namespace fairdiff {

// Scores are clipped to this magnitude (roughly the normal quantile at 1e-7).
inline constexpr double kQuantileClip = 5.2;

/// Per-column map from raw numerical values to standard-normal scores.
///
/// Each column keeps its sorted distinct training values (knots) and the
/// score Phi^-1((r - 0.5) / n) of each knot, where r is the average 1-based
/// rank of that value's ties. Values between knots are interpolated
/// linearly, values outside the fitted range are clamped to the end knots,
/// so the inverse always lands inside [min, max].
class QuantileTransform {
 public:
  struct Column {
    std::vector<double> knots;   // strictly increasing
    std::vector<double> scores;  // strictly increasing, |score| <= kQuantileClip
    bool constant = false;       // single distinct value; maps to 0
  };

  QuantileTransform() = default;
  QuantileTransform(SchemaPtr schema, std::vector<Column> columns);

  static QuantileTransform fit(const DataTable& train);

  double transform(std::size_t slot, double value) const;
  double inverse(std::size_t slot, double score) const;

  const SchemaPtr& schema_ptr() const { return schema_; }
  const TableSchema& schema() const { return *schema_; }
  const std::vector<Column>& columns() const { return columns_; }

  // One line per notable fitting event (constant columns).
  const std::vector<std::string>& provenance() const { return provenance_; }

 private:
  SchemaPtr schema_;
  std::vector<Column> columns_;
  std::vector<std::string> provenance_;
};

// Inverse standard-normal CDF.
double normal_quantile(double p);

struct CategoricalGroup {
  std::size_t column = 0;  // schema column index
  std::size_t offset = 0;  // first matrix column of the one-hot group
  std::size_t size = 0;    // category count

  bool operator==(const CategoricalGroup&) const = default;
};

/// Maps encoded matrix columns back to schema columns: the numerical block
/// comes first (schema order), then one one-hot group per categorical column.
struct EncodedLayout {
  std::vector<std::size_t> numerical_columns;
  std::vector<CategoricalGroup> groups;
  std::size_t width = 0;

  std::size_t numerical_width() const { return numerical_columns.size(); }
  static EncodedLayout for_schema(const TableSchema& schema);
  bool operator==(const EncodedLayout&) const = default;
};

struct EncodedMatrix {
  Eigen::MatrixXd values;  // rows x layout.width
  EncodedLayout layout;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
};

EncodedMatrix encode(const DataTable& table, const QuantileTransform& qt);

// Non-exact one-hot groups resolve by argmax (first maximum on ties).
DataTable decode(const EncodedMatrix& matrix, const QuantileTransform& qt);

// Removes one schema column from an encoded matrix (used to strip the label
// before classifier training).
EncodedMatrix drop_column(const EncodedMatrix& matrix, std::size_t schema_column);

}  // namespace fairdiff
