#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "fairdiff/encoding.hpp"
#include "fairdiff/errors.hpp"

namespace fairdiff {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw PreconditionError("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

QuantileTransform::QuantileTransform(SchemaPtr schema, std::vector<Column> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  if (!schema_) throw SchemaError("quantile transform requires a schema");
  if (columns_.size() != schema_->numerical_count())
    throw SchemaError("quantile transform column count does not match schema");
  for (const Column& c : columns_) {
    if (c.knots.empty() || c.knots.size() != c.scores.size())
      throw SchemaError("quantile transform column has malformed knots");
  }
}

QuantileTransform QuantileTransform::fit(const DataTable& train) {
  if (train.empty()) throw EmptyTableError("cannot fit a quantile transform on an empty table");
  const TableSchema& schema = train.schema();
  const std::size_t n = train.rows();

  std::vector<Column> columns(schema.numerical_count());
  std::vector<std::string> provenance;
  std::vector<double> values(n);
  for (std::size_t s = 0; s < columns.size(); ++s) {
    for (std::size_t r = 0; r < n; ++r) {
      values[r] = train.numerical(r, s);
      if (!std::isfinite(values[r]))
        throw PreconditionError("non-finite value in numerical column '" +
                                schema.column(schema.numerical_columns()[s]).name + "'");
    }
    std::sort(values.begin(), values.end());

    Column& col = columns[s];
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j < n && values[j] == values[i]) ++j;
      // Positions i..j-1 (0-based) share one value; average 1-based rank.
      const double rank = 0.5 * static_cast<double>(i + 1 + j);
      const double p = (rank - 0.5) / static_cast<double>(n);
      col.knots.push_back(values[i]);
      col.scores.push_back(std::clamp(normal_quantile(p), -kQuantileClip, kQuantileClip));
      i = j;
    }
    if (col.knots.size() == 1) {
      col.constant = true;
      col.scores[0] = 0.0;
      provenance.push_back("column '" + schema.column(schema.numerical_columns()[s]).name +
                           "' is constant; mapped to 0");
    }
  }
  QuantileTransform qt(train.schema_ptr(), std::move(columns));
  qt.provenance_ = std::move(provenance);
  return qt;
}

namespace {

// Piecewise-linear interpolation through (xs[i], ys[i]); clamps outside.
double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.size() == 1 || x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  const std::size_t lo = hi - 1;
  if (x == xs[lo]) return ys[lo];
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

}  // namespace

double QuantileTransform::transform(std::size_t slot, double value) const {
  const Column& c = columns_.at(slot);
  return interpolate(c.knots, c.scores, value);
}

double QuantileTransform::inverse(std::size_t slot, double score) const {
  const Column& c = columns_.at(slot);
  return interpolate(c.scores, c.knots, score);
}

}  // namespace fairdiff
