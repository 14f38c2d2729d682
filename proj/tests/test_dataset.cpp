#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fairdiff/dataset.hpp"
#include "fairdiff/encoding.hpp"
#include "fairdiff/errors.hpp"
#include "support/fixtures.hpp"

namespace fairdiff {
namespace {

using testing::bisect_normal_quantile;

SchemaPtr work_schema() {
  return std::make_shared<const TableSchema>(
      std::vector<ColumnSpec>{{"age", ColumnKind::kNumerical, {}},
                              {"work_class", ColumnKind::kCategorical, {"Private", "State-gov", "?"}},
                              {"sex", ColumnKind::kCategorical, {"Female", "Male"}},
                              {"income", ColumnKind::kCategorical, {"<=50K", ">50K"}}},
      "income", ">50K", "sex", "Male");
}

SchemaPtr numeric_schema(std::size_t numeric_columns) {
  std::vector<ColumnSpec> cols;
  for (std::size_t i = 0; i < numeric_columns; ++i) cols.push_back({"x" + std::to_string(i), ColumnKind::kNumerical, {}});
  cols.push_back({"y", ColumnKind::kCategorical, {"0", "1"}});
  return std::make_shared<const TableSchema>(cols, "y", "1", "y", "1");
}

DataTable numeric_table(const std::vector<double>& values) {
  DataTable t(numeric_schema(1));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double num[] = {values[i]};
    const int cat[] = {static_cast<int>(i % 2)};
    t.add_row(num, cat);
  }
  return t;
}

// ---------------------------------------------------------------- schema

TEST(Schema, RejectsDuplicateColumns) {
  EXPECT_THROW(TableSchema({{"a", ColumnKind::kNumerical, {}}, {"a", ColumnKind::kCategorical, {"x", "y"}}}, "a", "x",
                           "a", "x"),
               SchemaError);
}

TEST(Schema, RejectsNumericalLabel) {
  EXPECT_THROW(TableSchema({{"a", ColumnKind::kNumerical, {}}, {"b", ColumnKind::kCategorical, {"x", "y"}}}, "a", "x",
                           "b", "x"),
               SchemaError);
}

TEST(Schema, RejectsSingleCategoryProtectedAttribute) {
  EXPECT_THROW(TableSchema({{"a", ColumnKind::kCategorical, {"only"}}, {"b", ColumnKind::kCategorical, {"x", "y"}}},
                           "b", "x", "a", "only"),
               SchemaError);
}

TEST(Schema, RejectsFavorableValueOutsideCategories) {
  EXPECT_THROW(TableSchema({{"b", ColumnKind::kCategorical, {"x", "y"}}}, "b", "z", "b", "x"), SchemaError);
}

TEST(Schema, RejectsDuplicateCategories) {
  EXPECT_THROW(TableSchema({{"b", ColumnKind::kCategorical, {"x", "x"}}}, "b", "x", "b", "x"), SchemaError);
}

TEST(Schema, JsonRoundTrip) {
  const SchemaPtr s = work_schema();
  EXPECT_EQ(TableSchema::from_json(s->to_json()), *s);
}

TEST(Schema, UnknownKindIsRejected) {
  const nlohmann::json j{{"columns", {{{"name", "a"}, {"kind", "ordinal"}}}},
                         {"label", {{"column", "a"}, {"favorable", "x"}}},
                         {"protected", {{"column", "a"}, {"privileged", "x"}}}};
  EXPECT_THROW(TableSchema::from_json(j), SchemaError);
}

TEST(Schema, WithProtectedSwitchesAttribute) {
  const TableSchema s = work_schema()->with_protected("work_class", "Private");
  EXPECT_EQ(s.protected_attribute(), "work_class");
  EXPECT_EQ(s.privileged_code(), 0);
  EXPECT_THROW(work_schema()->with_protected("age", "1"), SchemaError);
}

TEST(Schema, AdultEncodedWidthIsNumericalPlusCategories) {
  const TableSchema s = TableSchema::load(FAIRDIFF_SOURCE_DIR "/configs/adult.schema.json");
  EXPECT_EQ(s.numerical_count(), 6u);
  EXPECT_EQ(s.categorical_count(), 9u);  // eight attributes plus the label
  std::size_t categories = 0;
  for (std::size_t c : s.categorical_columns()) categories += s.column(c).categories.size();
  EXPECT_EQ(EncodedLayout::for_schema(s).width, 6 + categories);
}

// ---------------------------------------------------------------- CSV

TEST(Csv, MissingCategoricalCellMapsToQuestionMark) {
  const auto dir = testing::scratch_dir("csv_missing");
  const auto path = testing::write_file(dir / "t.csv",
                                        "age,work_class,sex,income\n"
                                        "39,State-gov,Male,<=50K\n"
                                        "50,?,Female,>50K\n"
                                        "38,Private,Male,<=50K\n");
  const DataTable t = load_csv(path, work_schema());
  ASSERT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.categorical(1, 0), 2);
  EXPECT_EQ(t.categorical(0, 0), 1);
  EXPECT_DOUBLE_EQ(t.numerical(1, 0), 50.0);
  EXPECT_EQ(t.labels(), (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(t.privileged_flags(), (std::vector<int>{1, 0, 1}));
}

TEST(Csv, MissingNumericalCellTakesColumnMedian) {
  const auto dir = testing::scratch_dir("csv_median");
  const auto path = testing::write_file(dir / "t.csv",
                                        "age,work_class,sex,income\n"
                                        "10,Private,Male,<=50K\n"
                                        "?,Private,Male,<=50K\n"
                                        "30,Private,Female,>50K\n"
                                        "20,Private,Female,>50K\n");
  const DataTable raw = load_csv_raw(path, work_schema());
  EXPECT_TRUE(std::isnan(raw.numerical(1, 0)));
  const DataTable t = load_csv(path, work_schema());
  EXPECT_DOUBLE_EQ(t.numerical(1, 0), 20.0);
}

TEST(Csv, MissingTokenNeedsQuestionMarkCategory) {
  const auto dir = testing::scratch_dir("csv_noq");
  const auto path = testing::write_file(dir / "t.csv", "age,work_class,sex,income\n40,Private,?,<=50K\n");
  EXPECT_THROW(load_csv(path, work_schema()), SchemaError);
}

TEST(Csv, UnknownCategoryNamesColumnAndValue) {
  const auto dir = testing::scratch_dir("csv_unknown");
  const auto path = testing::write_file(dir / "t.csv", "age,work_class,sex,income\n40,Pirate,Male,<=50K\n");
  try {
    load_csv(path, work_schema());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("work_class"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("Pirate"), std::string::npos);
  }
}

TEST(Csv, UnparsableNumberReportsRow) {
  const auto dir = testing::scratch_dir("csv_parse");
  const auto path = testing::write_file(dir / "t.csv",
                                        "age,work_class,sex,income\n"
                                        "40,Private,Male,<=50K\n"
                                        "forty,Private,Male,<=50K\n");
  try {
    load_csv(path, work_schema());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, HeaderOnlyFileIsEmptyTableError) {
  const auto dir = testing::scratch_dir("csv_empty");
  const auto path = testing::write_file(dir / "t.csv", "age,work_class,sex,income\n");
  EXPECT_THROW(load_csv(path, work_schema()), EmptyTableError);
}

TEST(Csv, HeaderMismatchIsSchemaError) {
  const auto dir = testing::scratch_dir("csv_header");
  const auto path = testing::write_file(dir / "t.csv", "age,class,sex,income\n40,Private,Male,<=50K\n");
  EXPECT_THROW(load_csv(path, work_schema()), SchemaError);
}

TEST(Csv, WriteThenLoadRoundTrips) {
  const auto dir = testing::scratch_dir("csv_roundtrip");
  Rng rng(3);
  const DataTable t = testing::group_table(50, {0.25, 0.25, 0.25, 0.25}, rng);
  write_csv(t, dir / "t.csv");
  const DataTable back = load_csv(dir / "t.csv", t.schema_ptr());
  ASSERT_EQ(back.rows(), t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    EXPECT_EQ(back.numerical(r, 0), t.numerical(r, 0));
    for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(back.categorical(r, s), t.categorical(r, s));
  }
}

// ---------------------------------------------------------------- split

TEST(Split, ExactSizesOnLargeTable) {
  DataTable t(numeric_schema(1));
  const double num[] = {0.0};
  const int cat[] = {0};
  for (int i = 0; i < 50842; ++i) t.add_row(num, cat);
  const SplitTables parts = split(t, {28048, 16281, 6513}, 7);
  EXPECT_EQ(parts.train.rows(), 28048u);
  EXPECT_EQ(parts.test.rows(), 16281u);
  EXPECT_EQ(parts.valid.rows(), 6513u);
}

TEST(Split, DegenerateSplitKeepsWholeTable) {
  const DataTable t = numeric_table({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const SplitTables parts = split(t, {10, 0, 0}, 1);
  EXPECT_EQ(parts.train.rows(), 10u);
  EXPECT_TRUE(parts.test.empty());
  EXPECT_TRUE(parts.valid.empty());
}

TEST(Split, SizeMismatchThrows) {
  const DataTable t = numeric_table({0, 1, 2});
  EXPECT_THROW(split(t, {1, 1, 0}, 1), PreconditionError);
}

TEST(Split, DeterministicForSeed) {
  const auto a = split_indices(100, {60, 30, 10}, 42);
  const auto b = split_indices(100, {60, 30, 10}, 42);
  const auto c = split_indices(100, {60, 30, 10}, 43);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, IsAPartitionProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    const std::size_t train = std::uniform_int_distribution<std::size_t>(0, n)(rng);
    const std::size_t test = std::uniform_int_distribution<std::size_t>(0, n - train)(rng);
    const auto parts = split_indices(n, {train, test, n - train - test}, rng());
    std::vector<std::size_t> all;
    for (const auto* v : {&parts.train, &parts.test, &parts.valid}) all.insert(all.end(), v->begin(), v->end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), std::size_t{0});
    EXPECT_EQ(all, expected);
  }
}

// ---------------------------------------------------------------- quantile transform

TEST(QuantileTransform, BoostQuantileMatchesBisectionOracle) {
  for (double p : {1e-7, 0.001, 1.0 / 6, 0.5, 0.8, 0.999}) {
    EXPECT_NEAR(normal_quantile(p), bisect_normal_quantile(p), 1e-9) << p;
  }
}

TEST(QuantileTransform, ThreeValuesMapToNormalQuantiles) {
  const DataTable t = numeric_table({1, 2, 3});
  const QuantileTransform qt = QuantileTransform::fit(t);
  const double z = bisect_normal_quantile(5.0 / 6.0);
  EXPECT_NEAR(z, 0.9674, 1e-4);
  EXPECT_NEAR(qt.transform(0, 1.0), -z, 1e-12);
  EXPECT_NEAR(qt.transform(0, 2.0), 0.0, 1e-12);
  EXPECT_NEAR(qt.transform(0, 3.0), z, 1e-12);
  for (double v : {1.0, 2.0, 3.0}) EXPECT_NEAR(qt.inverse(0, qt.transform(0, v)), v, 1e-9);
}

TEST(QuantileTransform, ConstantColumnMapsToZeroWithProvenance) {
  const QuantileTransform qt = QuantileTransform::fit(numeric_table({5, 5, 5}));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(qt.transform(0, 5.0), 0.0);
  EXPECT_EQ(qt.inverse(0, 1.3), 5.0);
  ASSERT_EQ(qt.provenance().size(), 1u);
  EXPECT_NE(qt.provenance()[0].find("x0"), std::string::npos);
}

TEST(QuantileTransform, TiesShareAveragedRank) {
  // Sorted (1, 2, 2, 3): the tied pair has average rank 2.5, so p = 0.5.
  const QuantileTransform qt = QuantileTransform::fit(numeric_table({2, 1, 3, 2}));
  EXPECT_NEAR(qt.transform(0, 2.0), 0.0, 1e-12);
  EXPECT_NEAR(qt.transform(0, 1.0), bisect_normal_quantile(0.125), 1e-9);
}

TEST(QuantileTransform, OutputsAreClippedAndMonotone) {
  Rng rng(5);
  std::vector<double> v(2000);
  std::lognormal_distribution<double> d(0.0, 2.0);
  for (double& x : v) x = std::round(d(rng) * 4) / 4;  // heavy ties
  const QuantileTransform qt = QuantileTransform::fit(numeric_table(v));
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  double prev = -INFINITY;
  for (double x : sorted) {
    const double z = qt.transform(0, x);
    EXPECT_TRUE(std::isfinite(z));
    EXPECT_LE(std::abs(z), kQuantileClip);
    EXPECT_GE(z, prev);
    prev = z;
    EXPECT_NEAR(qt.inverse(0, z), x, 1e-9);
  }
}

TEST(QuantileTransform, InverseClampsToFittedRange) {
  const QuantileTransform qt = QuantileTransform::fit(numeric_table({1, 2, 3}));
  EXPECT_EQ(qt.inverse(0, 50.0), 3.0);
  EXPECT_EQ(qt.inverse(0, -50.0), 1.0);
  EXPECT_EQ(qt.transform(0, 99.0), qt.transform(0, 3.0));
}

// ---------------------------------------------------------------- encode / decode

TEST(Encoding, OneNumericalOneCategoricalRow) {
  auto schema = std::make_shared<const TableSchema>(
      std::vector<ColumnSpec>{{"x", ColumnKind::kNumerical, {}}, {"c", ColumnKind::kCategorical, {"a", "b", "c"}}}, "c",
      "a", "c", "a");
  DataTable t(schema);
  const double num[] = {4.0};
  const int cat[] = {2};
  t.add_row(num, cat);
  const EncodedMatrix m = encode(t, QuantileTransform::fit(t));
  ASSERT_EQ(m.values.cols(), 4);
  EXPECT_EQ(m.values.row(0).tail(3).sum(), 1.0);
  EXPECT_EQ(m.values(0, 3), 1.0);
}

TEST(Encoding, DecodeUsesArgmaxForSoftGroups) {
  auto schema = std::make_shared<const TableSchema>(
      std::vector<ColumnSpec>{{"x", ColumnKind::kNumerical, {}}, {"c", ColumnKind::kCategorical, {"a", "b", "c"}}}, "c",
      "a", "c", "a");
  DataTable t(schema);
  for (int i = 0; i < 3; ++i) {
    const double num[] = {static_cast<double>(i)};
    const int cat[] = {i};
    t.add_row(num, cat);
  }
  const QuantileTransform qt = QuantileTransform::fit(t);
  EncodedMatrix m = encode(t, qt);
  m.values.row(0) << 0.0, 0.2, 0.7, 0.1;
  m.values(1, 0) = 100.0;
  const DataTable d = decode(m, qt);
  EXPECT_EQ(d.categorical(0, 0), 1);
  EXPECT_EQ(d.numerical(1, 0), 2.0);  // clipped to the fitted max
}

TEST(Encoding, DecodeRejectsNonFinite) {
  const DataTable t = numeric_table({1, 2, 3});
  const QuantileTransform qt = QuantileTransform::fit(t);
  EncodedMatrix m = encode(t, qt);
  m.values(1, 0) = NAN;
  EXPECT_THROW(decode(m, qt), DecodeError);
}

TEST(Encoding, DecodeOfEncodeIsIdentityProperty) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const DataTable t = testing::group_table(std::uniform_int_distribution<std::size_t>(1, 200)(rng),
                                             {0.3, 0.2, 0.3, 0.2}, rng);
    const QuantileTransform qt = QuantileTransform::fit(t);
    const EncodedMatrix m = encode(t, qt);
    for (const CategoricalGroup& g : m.layout.groups) {
      const auto block = m.values.middleCols(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(g.size));
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        EXPECT_EQ(block.row(r).sum(), 1.0);
        EXPECT_EQ(block.row(r).maxCoeff(), 1.0);
      }
    }
    const DataTable d = decode(m, qt);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      EXPECT_NEAR(d.numerical(r, 0), t.numerical(r, 0), 1e-9);
      for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(d.categorical(r, s), t.categorical(r, s));
    }
  }
}

TEST(Encoding, DropColumnRemovesLabelGroup) {
  Rng rng(2);
  const DataTable t = testing::group_table(20, {0.25, 0.25, 0.25, 0.25}, rng);
  const EncodedMatrix m = encode(t, QuantileTransform::fit(t));
  const EncodedMatrix f = drop_column(m, t.schema().label_index());
  EXPECT_EQ(f.layout.width, m.layout.width - 2);
  EXPECT_EQ(f.values.cols(), m.values.cols() - 2);
  EXPECT_TRUE(f.values.leftCols(f.values.cols()) == m.values.leftCols(f.values.cols()));
}

// ---------------------------------------------------------------- table

TEST(DataTable, RejectsOutOfRangeCategoryAndBadWeight) {
  DataTable t(numeric_schema(1));
  const double num[] = {1.0};
  const int bad[] = {2};
  const int good[] = {1};
  EXPECT_THROW(t.add_row(num, bad), SchemaError);
  EXPECT_THROW(t.add_row(num, good, -1.0), PreconditionError);
  EXPECT_THROW(t.add_row(num, good, INFINITY), PreconditionError);
}

TEST(DataTable, AppendRequiresSameSchema) {
  DataTable a = numeric_table({1, 2});
  const DataTable b = numeric_table({3});
  a.append(b);
  EXPECT_EQ(a.rows(), 3u);
  EXPECT_THROW(a.append(DataTable(numeric_schema(2))), SchemaError);
}

}  // namespace
}  // namespace fairdiff
