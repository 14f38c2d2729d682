#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fairdiff/dataset.hpp"
#include "fairdiff/random.hpp"

namespace fairdiff::testing {

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fairdiff_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

// Phi^-1 by bisection on Phi(x) = erfc(-x / sqrt 2) / 2.
inline double bisect_normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// One bimodal numerical column and one two-level categorical column that is
// both label and protected attribute.
inline SchemaPtr toy_schema() {
  return std::make_shared<const TableSchema>(
      std::vector<ColumnSpec>{{"x", ColumnKind::kNumerical, {}}, {"c", ColumnKind::kCategorical, {"a", "b"}}},
      "c", "a", "c", "a");
}

// x ~ 0.5 N(10, 1.5^2) + 0.5 N(20, 2^2); c = "a" with probability 0.7.
inline DataTable toy_table(std::size_t rows, std::uint64_t seed) {
  DataTable t(toy_schema());
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double x = unif(rng) < 0.5 ? 10.0 + 1.5 * gauss(rng) : 20.0 + 2.0 * gauss(rng);
    const int c = unif(rng) < 0.7 ? 0 : 1;
    const double num[] = {x};
    const int cat[] = {c};
    t.add_row(num, cat);
  }
  return t;
}

// Label, protected attribute and two features, all small.
inline SchemaPtr group_schema() {
  return std::make_shared<const TableSchema>(
      std::vector<ColumnSpec>{{"score", ColumnKind::kNumerical, {}},
                              {"grade", ColumnKind::kCategorical, {"lo", "mid", "hi"}},
                              {"group", ColumnKind::kCategorical, {"p", "u"}},
                              {"label", ColumnKind::kCategorical, {"no", "yes"}}},
      "label", "yes", "group", "p");
}

// Rows whose (group, label) cell is drawn with the given probabilities for
// (pos_priv, pos_unpriv, neg_priv, neg_unpriv).
inline DataTable group_table(std::size_t rows, const std::vector<double>& cell_p, Rng& rng) {
  DataTable t(group_schema());
  std::discrete_distribution<int> cell(cell_p.begin(), cell_p.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> grade(0, 2);
  for (std::size_t i = 0; i < rows; ++i) {
    const int k = cell(rng);
    const int group = (k == 0 || k == 2) ? 0 : 1;
    const int label = k < 2 ? 1 : 0;
    const double num[] = {gauss(rng) + (label ? 1.0 : 0.0) + (group ? -0.5 : 0.0)};
    const int cat[] = {grade(rng), group, label};
    t.add_row(num, cat);
  }
  return t;
}

// The ten-row reweighing example: 4 favorable privileged, 1 favorable
// unprivileged, 2 unfavorable privileged, 3 unfavorable unprivileged.
inline DataTable ten_row_table() {
  DataTable t(group_schema());
  auto add = [&](int group, int label, int n) {
    for (int i = 0; i < n; ++i) {
      const double num[] = {static_cast<double>(i)};
      const int cat[] = {i % 3, group, label};
      t.add_row(num, cat);
    }
  };
  add(0, 1, 4);
  add(1, 1, 1);
  add(0, 0, 2);
  add(1, 0, 3);
  return t;
}

}  // namespace fairdiff::testing
