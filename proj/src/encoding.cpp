#include <cmath>

#include "fairdiff/encoding.hpp"
#include "fairdiff/errors.hpp"

namespace fairdiff {

EncodedLayout EncodedLayout::for_schema(const TableSchema& schema) {
  EncodedLayout layout;
  layout.numerical_columns = schema.numerical_columns();
  std::size_t offset = layout.numerical_columns.size();
  for (std::size_t c : schema.categorical_columns()) {
    const std::size_t k = schema.column(c).categories.size();
    layout.groups.push_back({c, offset, k});
    offset += k;
  }
  layout.width = offset;
  return layout;
}

EncodedMatrix encode(const DataTable& table, const QuantileTransform& qt) {
  const TableSchema& schema = table.schema();
  if (!qt.schema_ptr() || qt.schema().columns() != schema.columns())
    throw SchemaError("quantile transform was fitted on a different schema");

  EncodedMatrix m;
  m.layout = EncodedLayout::for_schema(schema);
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.rows()),
                                   static_cast<Eigen::Index>(m.layout.width));
  const std::size_t n_num = m.layout.numerical_width();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t s = 0; s < n_num; ++s) {
      m.values(row, static_cast<Eigen::Index>(s)) = qt.transform(s, table.numerical(r, s));
    }
    for (std::size_t g = 0; g < m.layout.groups.size(); ++g) {
      const std::size_t col = m.layout.groups[g].offset + static_cast<std::size_t>(table.categorical(r, g));
      m.values(row, static_cast<Eigen::Index>(col)) = 1.0;
    }
  }
  return m;
}

DataTable decode(const EncodedMatrix& matrix, const QuantileTransform& qt) {
  const TableSchema& schema = qt.schema();
  if (!(matrix.layout == EncodedLayout::for_schema(schema)))
    throw DecodeError("matrix layout does not match the transform's schema");
  if (static_cast<std::size_t>(matrix.values.cols()) != matrix.layout.width)
    throw DecodeError("matrix width does not match its layout");
  if (!matrix.values.allFinite()) throw DecodeError("encoded matrix contains non-finite entries");

  DataTable table(qt.schema_ptr());
  table.reserve(matrix.rows());
  std::vector<double> num(schema.numerical_count());
  std::vector<int> cat(schema.categorical_count());
  for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
    for (std::size_t s = 0; s < num.size(); ++s) {
      num[s] = qt.inverse(s, matrix.values(r, static_cast<Eigen::Index>(s)));
    }
    for (std::size_t g = 0; g < cat.size(); ++g) {
      const CategoricalGroup& grp = matrix.layout.groups[g];
      Eigen::Index best = 0;
      matrix.values.row(r)
          .segment(static_cast<Eigen::Index>(grp.offset), static_cast<Eigen::Index>(grp.size))
          .maxCoeff(&best);
      cat[g] = static_cast<int>(best);
    }
    table.add_row(num, cat);
  }
  return table;
}

EncodedMatrix drop_column(const EncodedMatrix& matrix, std::size_t schema_column) {
  const EncodedLayout& in = matrix.layout;
  EncodedLayout out;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < in.numerical_columns.size(); ++i) {
    if (in.numerical_columns[i] == schema_column) continue;
    out.numerical_columns.push_back(in.numerical_columns[i]);
    keep.push_back(static_cast<Eigen::Index>(i));
  }
  std::size_t offset = out.numerical_columns.size();
  for (const CategoricalGroup& g : in.groups) {
    if (g.column == schema_column) continue;
    out.groups.push_back({g.column, offset, g.size});
    for (std::size_t k = 0; k < g.size; ++k) keep.push_back(static_cast<Eigen::Index>(g.offset + k));
    offset += g.size;
  }
  out.width = offset;
  if (out.width == in.width) throw PreconditionError("column to drop is not in the layout");

  EncodedMatrix m;
  m.layout = std::move(out);
  m.values.resize(matrix.values.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    m.values.col(static_cast<Eigen::Index>(j)) = matrix.values.col(keep[j]);
  }
  return m;
}

}  // namespace fairdiff
