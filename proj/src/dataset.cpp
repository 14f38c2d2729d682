#include "fairdiff/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "fairdiff/errors.hpp"
#include "fairdiff/random.hpp"

namespace fairdiff {

TableSchema::TableSchema(std::vector<ColumnSpec> columns, std::string label_column,
                         std::string favorable_value, std::string protected_attribute,
                         std::string privileged_value)
    : columns_(std::move(columns)),
      label_column_(std::move(label_column)),
      favorable_value_(std::move(favorable_value)),
      protected_attribute_(std::move(protected_attribute)),
      privileged_value_(std::move(privileged_value)) {
  if (columns_.empty()) throw SchemaError("schema has no columns");

  std::unordered_set<std::string> names;
  slots_.reserve(columns_.size());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const ColumnSpec& c = columns_[i];
    if (c.name.empty()) throw SchemaError("column " + std::to_string(i) + " has an empty name");
    if (!names.insert(c.name).second) throw SchemaError("duplicate column name '" + c.name + "'");
    if (c.kind == ColumnKind::kNumerical) {
      if (!c.categories.empty())
        throw SchemaError("numerical column '" + c.name + "' lists categories");
      slots_.push_back(numerical_columns_.size());
      numerical_columns_.push_back(i);
    } else {
      if (c.categories.empty())
        throw SchemaError("categorical column '" + c.name + "' has no categories");
      std::unordered_set<std::string> seen;
      for (const auto& cat : c.categories) {
        if (!seen.insert(cat).second)
          throw SchemaError("column '" + c.name + "' lists category '" + cat + "' twice");
      }
      slots_.push_back(categorical_columns_.size());
      categorical_columns_.push_back(i);
    }
  }

  auto designated = [&](const std::string& name, const std::string& value, const char* role,
                        std::size_t& index, int& code) {
    if (!has_column(name)) throw SchemaError(std::string(role) + " column '" + name + "' not in schema");
    index = column_index(name);
    const ColumnSpec& c = columns_[index];
    if (c.kind != ColumnKind::kCategorical || c.categories.size() < 2)
      throw SchemaError(std::string(role) + " column '" + name +
                        "' must be categorical with at least two categories");
    code = category_code(index, value);
    if (code < 0)
      throw SchemaError(std::string(role) + " value '" + value + "' is not a category of '" + name + "'");
  };
  designated(label_column_, favorable_value_, "label", label_index_, favorable_code_);
  designated(protected_attribute_, privileged_value_, "protected", protected_index_, privileged_code_);
}

std::size_t TableSchema::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  throw SchemaError("unknown column '" + std::string(name) + "'");
}

bool TableSchema::has_column(std::string_view name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const ColumnSpec& c) { return c.name == name; });
}

int TableSchema::category_code(std::size_t column, std::string_view value) const {
  const auto& cats = columns_.at(column).categories;
  auto it = std::find(cats.begin(), cats.end(), value);
  return it == cats.end() ? -1 : static_cast<int>(it - cats.begin());
}

TableSchema TableSchema::with_protected(std::string attribute, std::string privileged_value) const {
  return TableSchema(columns_, label_column_, favorable_value_, std::move(attribute),
                     std::move(privileged_value));
}

bool TableSchema::operator==(const TableSchema& other) const {
  return columns_ == other.columns_ && label_column_ == other.label_column_ &&
         favorable_value_ == other.favorable_value_ &&
         protected_attribute_ == other.protected_attribute_ &&
         privileged_value_ == other.privileged_value_;
}

TableSchema TableSchema::from_json(const nlohmann::json& j) {
  try {
    std::vector<ColumnSpec> columns;
    for (const auto& c : j.at("columns")) {
      ColumnSpec spec;
      spec.name = c.at("name").get<std::string>();
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "numerical") {
        spec.kind = ColumnKind::kNumerical;
      } else if (kind == "categorical") {
        spec.kind = ColumnKind::kCategorical;
        spec.categories = c.at("categories").get<std::vector<std::string>>();
      } else {
        throw SchemaError("column '" + spec.name + "' has unknown kind '" + kind + "'");
      }
      columns.push_back(std::move(spec));
    }
    const auto& label = j.at("label");
    const auto& prot = j.at("protected");
    return TableSchema(std::move(columns), label.at("column").get<std::string>(),
                       label.at("favorable").get<std::string>(),
                       prot.at("column").get<std::string>(),
                       prot.at("privileged").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema config: ") + e.what());
  }
}

TableSchema TableSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schema file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("schema file " + path.string() + ": " + e.what());
  }
}

nlohmann::json TableSchema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns_) {
    nlohmann::json col{{"name", c.name}};
    if (c.kind == ColumnKind::kNumerical) {
      col["kind"] = "numerical";
    } else {
      col["kind"] = "categorical";
      col["categories"] = c.categories;
    }
    cols.push_back(std::move(col));
  }
  return {{"columns", cols},
          {"label", {{"column", label_column_}, {"favorable", favorable_value_}}},
          {"protected", {{"column", protected_attribute_}, {"privileged", privileged_value_}}}};
}

// ---------------------------------------------------------------------------

DataTable::DataTable(SchemaPtr schema) : schema_(std::move(schema)) {
  if (!schema_) throw SchemaError("DataTable requires a schema");
}

void DataTable::reserve(std::size_t rows) {
  numerical_.reserve(rows * schema_->numerical_count());
  categorical_.reserve(rows * schema_->categorical_count());
  weights_.reserve(rows);
}

void DataTable::add_row(std::span<const double> numerical, std::span<const int> categorical,
                        double weight) {
  if (numerical.size() != schema_->numerical_count() ||
      categorical.size() != schema_->categorical_count())
    throw SchemaError("row width does not match schema");
  for (std::size_t s = 0; s < categorical.size(); ++s) {
    const auto& spec = schema_->column(schema_->categorical_columns()[s]);
    if (categorical[s] < 0 || static_cast<std::size_t>(categorical[s]) >= spec.categories.size())
      throw SchemaError("category index " + std::to_string(categorical[s]) +
                        " out of range for column '" + spec.name + "'");
  }
  if (!std::isfinite(weight) || weight < 0.0) throw PreconditionError("row weight must be finite and >= 0");
  numerical_.insert(numerical_.end(), numerical.begin(), numerical.end());
  categorical_.insert(categorical_.end(), categorical.begin(), categorical.end());
  weights_.push_back(weight);
}

std::span<const double> DataTable::numerical_row(std::size_t row) const {
  const std::size_t w = schema_->numerical_count();
  return std::span<const double>(numerical_).subspan(row * w, w);
}

std::span<const int> DataTable::categorical_row(std::size_t row) const {
  const std::size_t w = schema_->categorical_count();
  return std::span<const int>(categorical_).subspan(row * w, w);
}

void DataTable::set_weight(std::size_t row, double w) {
  if (!std::isfinite(w) || w < 0.0) throw PreconditionError("row weight must be finite and >= 0");
  weights_.at(row) = w;
}

void DataTable::reset_weights() { std::fill(weights_.begin(), weights_.end(), 1.0); }

bool DataTable::is_favorable(std::size_t row) const {
  return categorical(row, schema_->slot(schema_->label_index())) == schema_->favorable_code();
}

bool DataTable::is_privileged(std::size_t row) const {
  return categorical(row, schema_->slot(schema_->protected_index())) == schema_->privileged_code();
}

std::vector<int> DataTable::labels() const {
  std::vector<int> y(rows());
  for (std::size_t r = 0; r < rows(); ++r) y[r] = is_favorable(r) ? 1 : 0;
  return y;
}

std::vector<int> DataTable::privileged_flags() const {
  std::vector<int> g(rows());
  for (std::size_t r = 0; r < rows(); ++r) g[r] = is_privileged(r) ? 1 : 0;
  return g;
}

DataTable DataTable::subset(std::span<const std::size_t> indices) const {
  DataTable out(schema_);
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= rows()) throw PreconditionError("subset index out of range");
    out.add_row(numerical_row(i), categorical_row(i), weights_[i]);
  }
  return out;
}

void DataTable::append(const DataTable& other) {
  if (!(other.schema() == *schema_)) throw SchemaError("cannot append a table with a different schema");
  numerical_.insert(numerical_.end(), other.numerical_.begin(), other.numerical_.end());
  categorical_.insert(categorical_.end(), other.categorical_.begin(), other.categorical_.end());
  weights_.insert(weights_.end(), other.weights_.begin(), other.weights_.end());
}

DataTable DataTable::with_schema(SchemaPtr schema) const {
  if (!schema || schema->columns() != schema_->columns())
    throw SchemaError("replacement schema must have identical columns");
  DataTable out = *this;
  out.schema_ = std::move(schema);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> numerical_medians(const DataTable& table) {
  const std::size_t n_num = table.schema().numerical_count();
  std::vector<double> medians(n_num, 0.0);
  std::vector<double> values;
  for (std::size_t s = 0; s < n_num; ++s) {
    values.clear();
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const double v = table.numerical(r, s);
      if (std::isfinite(v)) values.push_back(v);
    }
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    medians[s] = values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
  }
  return medians;
}

void impute_numerical(DataTable& table, std::span<const double> medians) {
  if (medians.size() != table.schema().numerical_count())
    throw PreconditionError("median count does not match numerical columns");
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t s = 0; s < medians.size(); ++s) {
      if (std::isnan(table.numerical(r, s))) table.set_numerical(r, s, medians[s]);
    }
  }
}

SplitIndices split_indices(std::size_t rows, const SplitSizes& sizes, std::uint64_t seed) {
  if (sizes.train + sizes.test + sizes.valid != rows)
    throw PreconditionError("split sizes " + std::to_string(sizes.train) + "+" +
                            std::to_string(sizes.test) + "+" + std::to_string(sizes.valid) +
                            " do not sum to row count " + std::to_string(rows));
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5e11));
  std::shuffle(order.begin(), order.end(), rng);

  SplitIndices out;
  auto first = order.begin();
  out.train.assign(first, first + sizes.train);
  first += sizes.train;
  out.test.assign(first, first + sizes.test);
  first += sizes.test;
  out.valid.assign(first, order.end());
  return out;
}

SplitTables split(const DataTable& table, const SplitSizes& sizes, std::uint64_t seed) {
  const SplitIndices idx = split_indices(table.rows(), sizes, seed);
  return SplitTables{table.subset(idx.train), table.subset(idx.test), table.subset(idx.valid)};
}

}  // namespace fairdiff
