#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fairdiff/dataset.hpp"
#include "support/fixtures.hpp"

namespace fairdiff {
namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + FAIRDIFF_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CliChain : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::scratch_dir("cli_chain");
    Rng rng(4);
    const DataTable t = testing::group_table(240, {0.3, 0.15, 0.25, 0.3}, rng);
    write_csv(t, dir_ / "train.csv");
    write_csv(testing::group_table(120, {0.3, 0.15, 0.25, 0.3}, rng), dir_ / "test.csv");
    write_csv(testing::group_table(60, {0.3, 0.15, 0.25, 0.3}, rng), dir_ / "small.csv");
    std::ofstream(dir_ / "schema.json") << t.schema().to_json().dump(2);
    std::ofstream(dir_ / "diffusion.json") << R"({"epochs": 3, "hidden": [16, 16], "embedding_dim": 8})";
  }

  std::string table(const char* csv) const {
    return "--schema " + (dir_ / "schema.json").string() + " --data " + (dir_ / csv).string();
  }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliChain, IngestTrainEvaluateSampleCompare) {
  ASSERT_EQ(run("ingest " + table("train.csv") + " --out " + path("clean.csv")), 0);
  EXPECT_EQ(load_csv(dir_ / "clean.csv", testing::group_schema()).rows(), 240u);

  ASSERT_EQ(run("reweigh " + table("train.csv") + " --out " + path("weighted.csv")), 0);
  ASSERT_EQ(run("train-clf " + table("train.csv") + " --model LR --reweigh --out " + path("lr.json")), 0);
  ASSERT_EQ(run("evaluate " + table("test.csv") + " --classifier " + path("lr.json") + " --out " + path("report.txt")),
            0);
  const std::string report = slurp(dir_ / "report.txt");
  for (const char* metric : {"BA ", "SPD ", "AOD ", "DI ", "EOD ", "TI "})
    EXPECT_NE(report.find(metric), std::string::npos) << metric << '\n' << report;

  ASSERT_EQ(run("train-diffusion " + table("train.csv") + " --config " + path("diffusion.json") + " --seed 3 --out " +
                path("model.bin")),
            0);
  ASSERT_EQ(run("sample --model " + path("model.bin") + " -n 50 --seed 1 --out " + path("synthetic.csv")), 0);
  EXPECT_EQ(load_csv(dir_ / "synthetic.csv", testing::group_schema()).rows(), 50u);
  ASSERT_EQ(run("sample --model " + path("model.bin") + " -n 50 --seed 1 --out " + path("synthetic2.csv")), 0);
  EXPECT_EQ(slurp(dir_ / "synthetic.csv"), slurp(dir_ / "synthetic2.csv"));

  ASSERT_EQ(run("compare-marginals --schema " + path("schema.json") + " --original " + path("train.csv") +
                " --synthetic " + path("synthetic.csv") + " --out " + path("marginals.csv")),
            0);
  EXPECT_EQ(slurp(dir_ / "marginals.csv").rfind("kind,column,tv,mean_relative,std_relative\n", 0), 0u);
}

TEST_F(CliChain, FailuresExitNonZero) {
  EXPECT_NE(run("train-clf " + table("train.csv") + " --model SVM --out " + path("x.json")), 0);
  EXPECT_NE(run("train-diffusion " + table("small.csv") + " --out " + path("m.bin")), 0);  // fewer than 100 rows
  std::ofstream(dir_ / "bad.bin") << "not a model";
  EXPECT_NE(run("sample --model " + path("bad.bin") + " -n 5 --out " + path("s.csv")), 0);
  EXPECT_NE(run("no-such-command"), 0);
  EXPECT_EQ(run("--version"), 0);
}

}  // namespace
}  // namespace fairdiff
