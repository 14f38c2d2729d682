#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fairdiff {

enum class ColumnKind { kNumerical, kCategorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumerical;
  std::vector<std::string> categories;  // empty for numerical columns

  bool operator==(const ColumnSpec&) const = default;
};

/// Column metadata plus the label and protected-attribute designations.
///
/// Numerical and categorical columns are stored in separate blocks inside a
/// DataTable; `slot(column)` gives a column's position inside its block.
class TableSchema {
 public:
  TableSchema(std::vector<ColumnSpec> columns, std::string label_column,
              std::string favorable_value, std::string protected_attribute,
              std::string privileged_value);

  static TableSchema from_json(const nlohmann::json& j);
  static TableSchema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const ColumnSpec& column(std::size_t i) const { return columns_.at(i); }
  std::size_t column_count() const { return columns_.size(); }
  std::size_t column_index(std::string_view name) const;  // throws SchemaError
  bool has_column(std::string_view name) const;

  std::size_t slot(std::size_t column) const { return slots_.at(column); }
  std::size_t numerical_count() const { return numerical_columns_.size(); }
  std::size_t categorical_count() const { return categorical_columns_.size(); }
  const std::vector<std::size_t>& numerical_columns() const { return numerical_columns_; }
  const std::vector<std::size_t>& categorical_columns() const { return categorical_columns_; }

  // Index of `value` in a categorical column's list, or -1.
  int category_code(std::size_t column, std::string_view value) const;

  const std::string& label_column() const { return label_column_; }
  const std::string& favorable_value() const { return favorable_value_; }
  const std::string& protected_attribute() const { return protected_attribute_; }
  const std::string& privileged_value() const { return privileged_value_; }

  std::size_t label_index() const { return label_index_; }
  std::size_t protected_index() const { return protected_index_; }
  int favorable_code() const { return favorable_code_; }
  int privileged_code() const { return privileged_code_; }

  // Same columns and label, different protected attribute.
  TableSchema with_protected(std::string attribute, std::string privileged_value) const;

  bool operator==(const TableSchema& other) const;

 private:
  std::vector<ColumnSpec> columns_;
  std::string label_column_;
  std::string favorable_value_;
  std::string protected_attribute_;
  std::string privileged_value_;

  std::vector<std::size_t> slots_;
  std::vector<std::size_t> numerical_columns_;
  std::vector<std::size_t> categorical_columns_;
  std::size_t label_index_ = 0;
  std::size_t protected_index_ = 0;
  int favorable_code_ = 0;
  int privileged_code_ = 0;
};

using SchemaPtr = std::shared_ptr<const TableSchema>;

/// Row storage. Numerical values and category codes live in two row-major
/// blocks; every row also carries a nonnegative sample weight.
class DataTable {
 public:
  explicit DataTable(SchemaPtr schema);

  const TableSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }

  std::size_t rows() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }

  void reserve(std::size_t rows);
  void add_row(std::span<const double> numerical, std::span<const int> categorical,
               double weight = 1.0);

  double numerical(std::size_t row, std::size_t slot) const {
    return numerical_[row * schema_->numerical_count() + slot];
  }
  int categorical(std::size_t row, std::size_t slot) const {
    return categorical_[row * schema_->categorical_count() + slot];
  }
  std::span<const double> numerical_row(std::size_t row) const;
  std::span<const int> categorical_row(std::size_t row) const;
  void set_numerical(std::size_t row, std::size_t slot, double value) {
    numerical_[row * schema_->numerical_count() + slot] = value;
  }

  double weight(std::size_t row) const { return weights_[row]; }
  std::span<const double> weights() const { return weights_; }
  void set_weight(std::size_t row, double w);
  void reset_weights();

  // Binary views used by reweighing, classifiers and metrics.
  bool is_favorable(std::size_t row) const;
  bool is_privileged(std::size_t row) const;
  std::vector<int> labels() const;           // 1 = favorable
  std::vector<int> privileged_flags() const;  // 1 = privileged

  DataTable subset(std::span<const std::size_t> indices) const;
  void append(const DataTable& other);  // schemas must be equal

  // Re-designate the protected attribute; rows are untouched.
  DataTable with_schema(SchemaPtr schema) const;

 private:
  SchemaPtr schema_;
  std::vector<double> numerical_;
  std::vector<int> categorical_;
  std::vector<double> weights_;
};

// CSV ingestion. Cells equal to `missing_token` become the "?" category in
// categorical columns (which must list it) and the column median in
// numerical columns.
DataTable load_csv(const std::filesystem::path& path, SchemaPtr schema,
                   std::string_view missing_token = "?");

// As load_csv but missing numerical cells stay NaN so that a caller can
// impute them with statistics from another split.
DataTable load_csv_raw(const std::filesystem::path& path, SchemaPtr schema,
                       std::string_view missing_token = "?");

// Median of the finite values of each numerical column (0 for all-missing).
std::vector<double> numerical_medians(const DataTable& table);
void impute_numerical(DataTable& table, std::span<const double> medians);

void write_csv(const DataTable& table, const std::filesystem::path& path,
               bool with_weights = false);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t valid = 0;
};

struct SplitTables {
  DataTable train;
  DataTable test;
  DataTable valid;
};

// Seeded random partition into three disjoint tables of exactly `sizes`.
SplitTables split(const DataTable& table, const SplitSizes& sizes, std::uint64_t seed);

// Row indices of each part, in the order split() uses them.
struct SplitIndices {
  std::vector<std::size_t> train, test, valid;
};
SplitIndices split_indices(std::size_t rows, const SplitSizes& sizes, std::uint64_t seed);

}  // namespace fairdiff
