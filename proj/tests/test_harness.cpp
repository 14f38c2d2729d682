#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fairdiff/errors.hpp"
#include "fairdiff/harness.hpp"
#include "support/fixtures.hpp"

namespace fairdiff {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Writes a group-table CSV and its schema, returns a config JSON that
// points at them with paths relative to `dir`.
nlohmann::json setup(const fs::path& dir, std::size_t rows = 300) {
  Rng rng(77);
  const DataTable t = testing::group_table(rows, {0.3, 0.12, 0.28, 0.3}, rng);
  write_csv(t, dir / "data.csv");
  std::ofstream(dir / "schema.json") << t.schema().to_json().dump(2);
  return {{"schema", "schema.json"},
          {"data", "data.csv"},
          {"split", {{"train", rows * 6 / 10}, {"test", rows * 3 / 10}, {"valid", rows - rows * 6 / 10 - rows * 3 / 10}}},
          {"increments", {0}},
          {"classifier_params", {{"rf_trees", 10}}},
          {"thresholds", 101}};
}

ExperimentConfig config_for(const fs::path& dir, const nlohmann::json& j) {
  return ExperimentConfig::from_json(j, dir);
}

TEST(ExperimentConfig, ValidatesFields) {
  const fs::path dir = testing::scratch_dir("harness_config");
  const nlohmann::json base = setup(dir);
  EXPECT_NO_THROW(config_for(dir, base));

  auto broken = [&](auto mutate) {
    nlohmann::json j = base;
    mutate(j);
    return j;
  };
  EXPECT_THROW(config_for(dir, broken([](auto& j) { j["classifiers"] = nlohmann::json::array(); })), ParseError);
  EXPECT_THROW(config_for(dir, broken([](auto& j) { j["classifiers"] = {"SVM"}; })), ParseError);
  EXPECT_THROW(config_for(dir, broken([](auto& j) { j["thresholds"] = nlohmann::json::array(); })), ParseError);
  EXPECT_THROW(config_for(dir, broken([](auto& j) { j["thresholds"] = {0.2, 1.5}; })), ParseError);
  EXPECT_THROW(config_for(dir, broken([](auto& j) { j["increments"] = {-5}; })), ParseError);
  EXPECT_THROW(config_for(dir, broken([](auto& j) { j["data"] = "nowhere.csv"; })), ParseError);
  EXPECT_THROW(config_for(dir, broken([](auto& j) { j.erase("split"); })), ParseError);
  EXPECT_THROW(config_for(dir, broken([](auto& j) { j["diffusion"] = {{"epochs", -1}}; })), ParseError);
}

TEST(ExperimentConfig, LoadResolvesRelativePathsAndRoundTrips) {
  const fs::path dir = testing::scratch_dir("harness_load");
  nlohmann::json j = setup(dir);
  j["thresholds"] = {0.25, 0.5};
  std::ofstream(dir / "exp.json") << j.dump();
  const ExperimentConfig c = ExperimentConfig::load(dir / "exp.json");
  EXPECT_EQ(c.data_path, dir / "data.csv");
  EXPECT_EQ(c.output_dir, dir / "results");
  EXPECT_EQ(c.thresholds, (std::vector<double>{0.25, 0.5}));
  EXPECT_EQ(c.roster.size(), 5u);
  EXPECT_EQ(ExperimentConfig::from_json(c.to_json()).to_json(), c.to_json());
}

TEST(RunExperiment, EveryCellIsPresentInOrder) {
  const fs::path dir = testing::scratch_dir("harness_grid");
  const ExperimentResult r = run_experiment(config_for(dir, setup(dir)));
  ASSERT_EQ(r.cells.size(), 10u);
  std::size_t i = 0;
  for (ClassifierKind k : kAllClassifiers) {
    for (Arm arm : {Arm::kBefore, Arm::kAfter}) {
      const CellResult& c = r.cells[i++];
      EXPECT_EQ(c.kind, k);
      EXPECT_EQ(c.arm, arm);
      EXPECT_TRUE(c.report.has_value()) << c.error;
      EXPECT_EQ(c.curve.size(), 101u);
      EXPECT_EQ(r.find(0, k, arm), &c);
    }
  }
  EXPECT_EQ(r.protected_attribute, "group");
  EXPECT_EQ(r.log["rows"]["train"], 180);
}

TEST(RunExperiment, CurveAtThresholdZeroHasChanceAccuracy) {
  const fs::path dir = testing::scratch_dir("harness_curve");
  const ExperimentResult r = run_experiment(config_for(dir, setup(dir)));
  for (const CellResult& c : r.cells) {
    ASSERT_FALSE(c.curve.empty());
    EXPECT_EQ(c.curve.front().threshold, 0.0);
    EXPECT_EQ(c.curve.front().ba, 0.5);
    EXPECT_EQ(c.curve.front().aod, 0.0);
    EXPECT_EQ(c.curve.back().threshold, 1.0);
  }
}

TEST(RunExperiment, BeforeArmMatchesPlainPipeline) {
  const fs::path dir = testing::scratch_dir("harness_plain");
  const ExperimentConfig cfg = config_for(dir, setup(dir));
  const ExperimentResult r = run_experiment(cfg);

  const auto schema = std::make_shared<const TableSchema>(TableSchema::load(cfg.schema_path));
  const SplitTables parts = split(load_csv(cfg.data_path, schema), cfg.split, cfg.split_seed);
  const QuantileTransform qt = QuantileTransform::fit(parts.train);
  const EncodedMatrix x = classifier_features(parts.train, qt);
  const std::vector<double> ones(parts.train.rows(), 1.0);
  for (ClassifierKind k : kAllClassifiers) {
    const ClassifierModel m = fit(k, x, parts.train.labels(), ones, cfg.classifier_params,
                                  derive_seed(cfg.classifier_seed, static_cast<std::uint64_t>(k)));
    const FairnessReport expected = evaluate(parts.test, hard_labels(m.predict_proba(classifier_features(parts.test, qt)), 0.5));
    const CellResult* c = r.find(0, k, Arm::kBefore);
    ASSERT_TRUE(c && c->report);
    EXPECT_EQ(c->report->ba, expected.ba) << short_name(k);
    EXPECT_EQ(c->report->spd, expected.spd) << short_name(k);
    EXPECT_EQ(c->report->aod, expected.aod) << short_name(k);
  }
}

TEST(RunExperiment, DiffusionFailureTagsCellsWithoutAborting) {
  const fs::path dir = testing::scratch_dir("harness_fail");
  nlohmann::json j = setup(dir, 150);  // 90 training rows: too few for diffusion
  j["increments"] = {0, 50};
  j["classifiers"] = {"GNB", "LR"};
  const ExperimentResult r = run_experiment(config_for(dir, j));
  ASSERT_EQ(r.cells.size(), 8u);
  for (const CellResult& c : r.cells) {
    if (c.increment == 0) {
      EXPECT_TRUE(c.report.has_value());
    } else {
      EXPECT_FALSE(c.report.has_value());
      EXPECT_NE(c.error.find("diffusion training failed"), std::string::npos) << c.error;
    }
  }
  EXPECT_EQ(r.log["cell_errors"].size(), 4u);

  write_outputs(r, dir / "out");
  const auto rows = lines(slurp(dir / "out" / "table_group_n50.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1], "GNB,error,error,error,error,error,error,GNB,error,error,error,error,error,error");
}

TEST(RunExperiment, SmallAugmentationRuns) {
  const fs::path dir = testing::scratch_dir("harness_augment");
  nlohmann::json j = setup(dir);
  j["increments"] = {0, 60};
  j["classifiers"] = {"DT", "LR"};
  j["diffusion"] = {{"epochs", 5}, {"hidden", {16, 16}}, {"embedding_dim", 8}};
  j["thresholds"] = 11;
  const ExperimentResult r = run_experiment(config_for(dir, j));
  ASSERT_EQ(r.cells.size(), 8u);
  for (const CellResult& c : r.cells) EXPECT_TRUE(c.report.has_value()) << c.error;
  EXPECT_EQ(r.log["increments"][1]["train_rows"], 240);
  ASSERT_EQ(r.marginals.size(), 2u);
  EXPECT_EQ(r.marginals[1].categorical.size(), 3u);
  EXPECT_EQ(r.marginals[1].numerical.size(), 1u);
  EXPECT_EQ(r.log["diffusion_loss"].size(), 5u);
}

TEST(RunExperiment, DeterministicOutputs) {
  const fs::path dir = testing::scratch_dir("harness_determinism");
  const ExperimentConfig cfg = config_for(dir, setup(dir));
  write_outputs(run_experiment(cfg), dir / "a");
  write_outputs(run_experiment(cfg), dir / "b");
  for (const char* f : {"table_group_n0.csv", "results.csv", "run_log.json", "curves/group_n0_RF_after.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(EmitTables, HeaderAndRowOrder) {
  const fs::path dir = testing::scratch_dir("harness_tables");
  write_outputs(run_experiment(config_for(dir, setup(dir))), dir / "out");
  const auto rows = lines(slurp(dir / "out" / "table_group_n0.csv"));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "Model,BA,SPD,AOD,DI,EOD,TI,Model,BA,SPD,AOD,DI,EOD,TI");
  const char* order[] = {"DT,", "GNB,", "KNN,", "LR,", "RF,"};
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(rows[static_cast<std::size_t>(i + 1)].rfind(order[i], 0), 0u) << rows[static_cast<std::size_t>(i + 1)];
    EXPECT_EQ(std::count(rows[static_cast<std::size_t>(i + 1)].begin(), rows[static_cast<std::size_t>(i + 1)].end(), ','), 13);
  }
  const auto curve = lines(slurp(dir / "out" / "curves" / "group_n0_LR_before.csv"));
  ASSERT_EQ(curve.size(), 102u);
  EXPECT_EQ(curve[0], "threshold,BA,AOD");
  EXPECT_TRUE(fs::exists(dir / "out" / "run_log.json"));
  const auto results = lines(slurp(dir / "out" / "results.csv"));
  ASSERT_EQ(results.size(), 11u);
  EXPECT_EQ(results[1].rfind("group,0,DT,before,", 0), 0u) << results[1];
}

TEST(EmitTables, NoIncrementsGivesHeaderOnlyTable) {
  ExperimentResult empty;
  empty.protected_attribute = "sex";
  const fs::path dir = testing::scratch_dir("harness_empty");
  emit_tables(empty, dir);
  EXPECT_EQ(slurp(dir / "table_sex.csv"), "Model,BA,SPD,AOD,DI,EOD,TI,Model,BA,SPD,AOD,DI,EOD,TI\n");
}

TEST(CompareMarginals, IdenticalTablesHaveZeroDivergence) {
  Rng rng(5);
  const DataTable t = testing::group_table(200, {0.25, 0.25, 0.25, 0.25}, rng);
  const MarginalReport m = compare_marginals(t, t);
  ASSERT_EQ(m.categorical.size(), 3u);
  for (const auto& c : m.categorical) EXPECT_EQ(c.total_variation, 0.0);
  ASSERT_EQ(m.numerical.size(), 1u);
  EXPECT_EQ(m.numerical[0].mean_relative, 0.0);
  EXPECT_EQ(m.numerical[0].std_relative, 0.0);
  EXPECT_EQ(m.numerical[0].histogram_tv, 0.0);
  EXPECT_EQ(lines(format_marginals(m)).size(), 5u);
}

TEST(CompareMarginals, DisjointCategoriesHaveUnitDistance) {
  DataTable a(testing::toy_schema()), b(testing::toy_schema());
  for (int i = 0; i < 10; ++i) {
    const double x[] = {static_cast<double>(i)};
    const int ca[] = {0}, cb[] = {1};
    a.add_row(x, ca);
    b.add_row(x, cb);
  }
  const MarginalReport m = compare_marginals(a, b);
  EXPECT_EQ(m.categorical[0].total_variation, 1.0);
  EXPECT_EQ(m.numerical[0].histogram_tv, 0.0);
  EXPECT_THROW(compare_marginals(a, DataTable(testing::toy_schema())), EmptyTableError);
}

TEST(CompareMarginals, ShiftedColumnIsDetected) {
  DataTable a(testing::toy_schema()), b(testing::toy_schema());
  for (int i = 0; i < 100; ++i) {
    const int c[] = {i % 2};
    const double xa[] = {10.0 + i % 10}, xb[] = {11.0 + i % 10};
    a.add_row(xa, c);
    b.add_row(xb, c);
  }
  const MarginalReport m = compare_marginals(a, b);
  EXPECT_NEAR(m.numerical[0].mean_relative, 1.0 / 14.5, 1e-12);
  EXPECT_EQ(m.numerical[0].std_relative, 0.0);
  EXPECT_GT(m.numerical[0].histogram_tv, 0.0);
}

}  // namespace
}  // namespace fairdiff
