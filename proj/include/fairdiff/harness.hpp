#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairdiff/classifiers.hpp"
#include "fairdiff/dataset.hpp"
#include "fairdiff/diffusion.hpp"
#include "fairdiff/metrics.hpp"

namespace fairdiff {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::filesystem::path schema_path;
  std::filesystem::path data_path;
  std::string missing_token = "?";
  SplitSizes split;
  std::uint64_t split_seed = 7;
  // Overrides the schema's protected attribute when set.
  std::optional<std::string> protected_attribute;
  std::optional<std::string> privileged_value;
  std::vector<std::size_t> increments{0};
  DiffusionConfig diffusion;
  std::uint64_t diffusion_seed = 11;
  std::uint64_t sample_seed = 13;
  std::vector<ClassifierKind> roster{std::begin(kAllClassifiers), std::end(kAllClassifiers)};
  ClassifierParams classifier_params;
  std::uint64_t classifier_seed = 17;
  double threshold = 0.5;
  std::vector<double> thresholds = uniform_grid(101);
  std::filesystem::path output_dir = "results";

  // Relative paths are resolved against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

enum class Arm { kBefore, kAfter };
const char* to_string(Arm arm);

struct CurvePoint {
  double threshold = 0.0;
  double ba = 0.0;
  double aod = 0.0;
};

struct CellResult {
  std::size_t increment = 0;
  ClassifierKind kind = ClassifierKind::kDecisionTree;
  Arm arm = Arm::kBefore;
  std::optional<FairnessReport> report;  // empty when `error` is set
  std::string error;
  std::vector<CurvePoint> curve;
};

struct CategoricalDivergence {
  std::string column;
  double total_variation = 0.0;
};

struct NumericalDivergence {
  std::string column;
  double mean_relative = 0.0;  // |mean_s - mean_o| / |mean_o|
  double std_relative = 0.0;   // |std_s - std_o| / std_o
  double histogram_tv = 0.0;   // TV over 20 bins spanning the original range
};

struct MarginalReport {
  std::vector<CategoricalDivergence> categorical;
  std::vector<NumericalDivergence> numerical;
};

MarginalReport compare_marginals(const DataTable& original, const DataTable& synthetic);
std::string format_marginals(const MarginalReport& report);

struct ExperimentResult {
  std::string protected_attribute;
  std::vector<std::size_t> increments;
  std::vector<ClassifierKind> roster;
  std::vector<CellResult> cells;  // increment-major, then roster order, then arm
  std::vector<MarginalReport> marginals;  // one per increment (empty for 0)
  nlohmann::json log;

  const CellResult* find(std::size_t increment, ClassifierKind kind, Arm arm) const;
};

// Runs the full pipeline: load, split, fit transforms on train, train one
// diffusion model when any increment is positive, augment, fit every
// classifier with unit weights ("before") and reweighed weights ("after"),
// and evaluate on the untouched test split. Stage failures are recorded
// per cell.
ExperimentResult run_experiment(const ExperimentConfig& config);

// One file per increment: table_<attr>_n<increment>.csv with columns
// Model,BA,SPD,AOD,DI,EOD,TI repeated for the before and after arms, plus a
// long-format results.csv with full precision and verdicts.
void emit_tables(const ExperimentResult& result, const std::filesystem::path& dir);

// curves/<attr>_n<increment>_<model>_<arm>.csv with threshold,BA,AOD rows.
void emit_curves(const ExperimentResult& result, const std::filesystem::path& dir);

// Tables, curves and run_log.json.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

// Classifier features: the encoded table without the label column.
EncodedMatrix classifier_features(const DataTable& table, const QuantileTransform& qt);

}  // namespace fairdiff
