#include "fairdiff/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fairdiff/errors.hpp"
#include "fairdiff/reweighing.hpp"

namespace fairdiff {
namespace {

constexpr int kHistogramBins = 20;

std::string full_precision(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string four_decimals(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  // Avoid "-0.0000".
  if (std::string_view(buf) == "-0.0000") return "0.0000";
  return buf;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

double relative_difference(double reference, double other) {
  const double diff = std::abs(other - reference);
  if (diff == 0.0) return 0.0;
  return reference == 0.0 ? kInfinite : diff / std::abs(reference);
}

nlohmann::json marginals_to_json(const MarginalReport& m) {
  nlohmann::json cat = nlohmann::json::array(), num = nlohmann::json::array();
  for (const auto& c : m.categorical) cat.push_back({{"column", c.column}, {"tv", c.total_variation}});
  for (const auto& c : m.numerical)
    num.push_back({{"column", c.column},
                   {"mean_relative", c.mean_relative},
                   {"std_relative", c.std_relative},
                   {"histogram_tv", c.histogram_tv}});
  return {{"categorical", cat}, {"numerical", num}};
}

std::string cell_error(const std::exception& e) { return e.what(); }

}  // namespace

const char* to_string(Arm arm) { return arm == Arm::kBefore ? "before" : "after"; }

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    c.schema_path = resolve(base_dir, j.at("schema").get<std::string>());
    c.data_path = resolve(base_dir, j.at("data").get<std::string>());
    c.missing_token = j.value("missing_token", c.missing_token);
    const auto& s = j.at("split");
    c.split = SplitSizes{s.at("train").get<std::size_t>(), s.at("test").get<std::size_t>(),
                         s.at("valid").get<std::size_t>()};
    c.split_seed = s.value("seed", c.split_seed);
    if (j.contains("protected")) {
      c.protected_attribute = j.at("protected").at("attribute").get<std::string>();
      c.privileged_value = j.at("protected").at("privileged").get<std::string>();
    }
    if (j.contains("increments")) {
      c.increments.clear();
      for (const auto& v : j.at("increments")) {
        if (!v.is_number_integer() || v.get<long long>() < 0) throw ParseError("experiment config: increments must be nonnegative integers");
        c.increments.push_back(v.get<std::size_t>());
      }
    }
    if (j.contains("diffusion")) c.diffusion = DiffusionConfig::from_json(j.at("diffusion"));
    c.diffusion_seed = j.value("diffusion_seed", c.diffusion_seed);
    c.sample_seed = j.value("sample_seed", c.sample_seed);
    if (j.contains("classifiers")) {
      c.roster.clear();
      for (const auto& name : j.at("classifiers")) c.roster.push_back(parse_classifier_kind(name.get<std::string>()));
    }
    if (j.contains("classifier_params")) c.classifier_params = ClassifierParams::from_json(j.at("classifier_params"));
    c.classifier_seed = j.value("classifier_seed", c.classifier_seed);
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      c.thresholds = t.is_number() ? uniform_grid(t.get<std::size_t>()) : t.get<std::vector<double>>();
    }
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("results")));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  if (c.roster.empty()) throw ParseError("experiment config: classifier roster is empty");
  if (c.thresholds.empty()) throw ParseError("experiment config: threshold grid is empty");
  for (double t : c.thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw ParseError("experiment config: thresholds must lie in [0, 1]");
  }
  if (!std::filesystem::exists(c.schema_path)) throw ParseError("schema file not found: " + c.schema_path.string());
  if (!std::filesystem::exists(c.data_path)) throw ParseError("data file not found: " + c.data_path.string());
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open experiment config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in), path.parent_path());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("experiment config " + path.string() + ": " + e.what());
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  std::vector<std::string> roster_names;
  for (auto k : roster) roster_names.emplace_back(short_name(k));
  nlohmann::json j{{"schema", schema_path.generic_string()},
                   {"data", data_path.generic_string()},
                   {"missing_token", missing_token},
                   {"split", {{"train", split.train}, {"test", split.test}, {"valid", split.valid}, {"seed", split_seed}}},
                   {"increments", increments},
                   {"diffusion", diffusion.to_json()},
                   {"diffusion_seed", diffusion_seed},
                   {"sample_seed", sample_seed},
                   {"classifiers", roster_names},
                   {"classifier_params", classifier_params.to_json()},
                   {"classifier_seed", classifier_seed},
                   {"threshold", threshold},
                   {"thresholds", thresholds},
                   {"output_dir", output_dir.generic_string()}};
  if (protected_attribute) j["protected"] = {{"attribute", *protected_attribute}, {"privileged", *privileged_value}};
  return j;
}

// ---------------------------------------------------------------------------

MarginalReport compare_marginals(const DataTable& original, const DataTable& synthetic) {
  if (!(original.schema().columns() == synthetic.schema().columns()))
    throw SchemaError("compare_marginals needs tables with the same schema");
  if (original.empty() || synthetic.empty()) throw EmptyTableError("compare_marginals needs nonempty tables");
  const TableSchema& s = original.schema();
  MarginalReport report;

  for (std::size_t c : s.categorical_columns()) {
    const std::size_t slot = s.slot(c);
    const std::size_t k = s.column(c).categories.size();
    std::vector<double> po(k, 0.0), ps(k, 0.0);
    for (std::size_t r = 0; r < original.rows(); ++r) po[static_cast<std::size_t>(original.categorical(r, slot))] += 1.0;
    for (std::size_t r = 0; r < synthetic.rows(); ++r) ps[static_cast<std::size_t>(synthetic.categorical(r, slot))] += 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      tv += std::abs(po[i] / static_cast<double>(original.rows()) - ps[i] / static_cast<double>(synthetic.rows()));
    }
    report.categorical.push_back({s.column(c).name, 0.5 * tv});
  }

  for (std::size_t c : s.numerical_columns()) {
    const std::size_t slot = s.slot(c);
    std::vector<double> vo(original.rows()), vs(synthetic.rows());
    for (std::size_t r = 0; r < vo.size(); ++r) vo[r] = original.numerical(r, slot);
    for (std::size_t r = 0; r < vs.size(); ++r) vs[r] = synthetic.numerical(r, slot);
    const double mo = mean_of(vo), ms = mean_of(vs);
    const double so = std_of(vo, mo), ss = std_of(vs, ms);

    const auto [lo_it, hi_it] = std::minmax_element(vo.begin(), vo.end());
    const double lo = *lo_it, hi = *hi_it;
    auto histogram = [&](const std::vector<double>& v) {
      std::vector<double> h(kHistogramBins, 0.0);
      for (double x : v) {
        int b = hi > lo ? static_cast<int>(std::floor((x - lo) / (hi - lo) * kHistogramBins)) : 0;
        b = std::clamp(b, 0, kHistogramBins - 1);
        h[static_cast<std::size_t>(b)] += 1.0 / static_cast<double>(v.size());
      }
      return h;
    };
    const auto ho = histogram(vo), hs = histogram(vs);
    double tv = 0.0;
    for (int b = 0; b < kHistogramBins; ++b) tv += std::abs(ho[static_cast<std::size_t>(b)] - hs[static_cast<std::size_t>(b)]);
    report.numerical.push_back({s.column(c).name, relative_difference(mo, ms), relative_difference(so, ss), 0.5 * tv});
  }
  return report;
}

std::string format_marginals(const MarginalReport& m) {
  std::ostringstream os;
  os << "kind,column,tv,mean_relative,std_relative\n";
  for (const auto& c : m.categorical) os << "categorical," << c.column << ',' << full_precision(c.total_variation) << ",,\n";
  for (const auto& c : m.numerical)
    os << "numerical," << c.column << ',' << full_precision(c.histogram_tv) << ',' << full_precision(c.mean_relative)
       << ',' << full_precision(c.std_relative) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------

const CellResult* ExperimentResult::find(std::size_t increment, ClassifierKind kind, Arm arm) const {
  for (const auto& c : cells) {
    if (c.increment == increment && c.kind == kind && c.arm == arm) return &c;
  }
  return nullptr;
}

EncodedMatrix classifier_features(const DataTable& table, const QuantileTransform& qt) {
  return drop_column(encode(table, qt), table.schema().label_index());
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  auto schema = std::make_shared<const TableSchema>(TableSchema::load(config.schema_path));
  if (config.protected_attribute) {
    schema = std::make_shared<const TableSchema>(
        schema->with_protected(*config.protected_attribute, config.privileged_value.value_or("")));
  }

  ExperimentResult result;
  result.protected_attribute = schema->protected_attribute();
  result.increments = config.increments;
  result.roster = config.roster;
  nlohmann::json& log = result.log;
  log["version"] = kVersion;
  log["config"] = config.to_json();
  // Where results are written does not affect them.
  log["config"].erase("output_dir");

  // The test split never feeds any fitted statistic.
  const DataTable raw = load_csv_raw(config.data_path, schema, config.missing_token);
  SplitTables parts = split(raw, config.split, config.split_seed);
  const auto medians = numerical_medians(parts.train);
  impute_numerical(parts.train, medians);
  impute_numerical(parts.test, medians);
  impute_numerical(parts.valid, medians);
  log["rows"] = {{"total", raw.rows()}, {"train", parts.train.rows()}, {"test", parts.test.rows()}, {"valid", parts.valid.rows()}};
  log["train_medians"] = medians;

  const QuantileTransform qt = QuantileTransform::fit(parts.train);
  log["transform_provenance"] = qt.provenance();

  std::optional<DiffusionModel> diffusion;
  const bool needs_diffusion = std::any_of(config.increments.begin(), config.increments.end(),
                                           [](std::size_t n) { return n > 0; });
  std::string diffusion_error;
  if (needs_diffusion) {
    try {
      diffusion = train(encode(parts.train, qt), qt, config.diffusion, config.diffusion_seed);
      log["diffusion_loss"] = diffusion->loss_log;
    } catch (const Error& e) {
      diffusion_error = std::string("diffusion training failed: ") + e.what();
      log["diffusion_error"] = diffusion_error;
    }
  }

  const EncodedMatrix test_x = classifier_features(parts.test, qt);
  const std::vector<int> test_y = parts.test.labels();
  const std::vector<int> test_g = parts.test.privileged_flags();

  nlohmann::json inc_log = nlohmann::json::array();
  for (std::size_t increment : config.increments) {
    nlohmann::json entry{{"increment", increment}};
    DataTable augmented = parts.train;
    std::string stage_error;
    if (increment > 0) {
      if (!diffusion) {
        stage_error = diffusion_error;
      } else {
        try {
          const DataTable synthetic = sample(*diffusion, increment, derive_seed(config.sample_seed, increment));
          const MarginalReport marg = compare_marginals(parts.train, synthetic);
          entry["marginals"] = marginals_to_json(marg);
          result.marginals.push_back(marg);
          augmented.append(synthetic);
        } catch (const Error& e) {
          stage_error = std::string("sampling failed: ") + e.what();
        }
      }
    }
    if (increment == 0 || stage_error.size()) result.marginals.emplace_back();

    std::optional<EncodedMatrix> train_x;
    std::vector<int> train_y;
    std::vector<double> unit_w, reweighed_w;
    std::string reweigh_error;
    if (stage_error.empty()) {
      train_x = classifier_features(augmented, qt);
      train_y = augmented.labels();
      unit_w.assign(augmented.rows(), 1.0);
      try {
        const GroupCounts counts = count_groups(augmented);
        const SampleWeights w = compute_weights(counts);
        const DataTable weighted = apply_weights(augmented, w);
        reweighed_w.assign(weighted.weights().begin(), weighted.weights().end());
        entry["weights"] = {w.pos_priv, w.pos_unpriv, w.neg_priv, w.neg_unpriv};
        entry["counts"] = {counts.total, counts.privileged, counts.unprivileged, counts.positive, counts.negative,
                           counts.pos_priv, counts.pos_unpriv, counts.neg_priv, counts.neg_unpriv};
      } catch (const Error& e) {
        reweigh_error = std::string("reweighing failed: ") + e.what();
      }
      entry["train_rows"] = augmented.rows();
    } else {
      entry["error"] = stage_error;
    }
    inc_log.push_back(std::move(entry));

    for (ClassifierKind kind : config.roster) {
      const std::uint64_t seed = derive_seed(config.classifier_seed, static_cast<std::uint64_t>(kind));
      for (Arm arm : {Arm::kBefore, Arm::kAfter}) {
        CellResult cell{increment, kind, arm, std::nullopt, {}, {}};
        if (!stage_error.empty()) {
          cell.error = stage_error;
        } else if (arm == Arm::kAfter && !reweigh_error.empty()) {
          cell.error = reweigh_error;
        } else {
          try {
            const auto& weights = arm == Arm::kBefore ? unit_w : reweighed_w;
            const ClassifierModel model = fit(kind, *train_x, train_y, weights, config.classifier_params, seed);
            const std::vector<double> proba = model.predict_proba(test_x);
            cell.report = evaluate(test_y, hard_labels(proba, config.threshold), test_g);
            for (double t : config.thresholds) {
              const auto labels = hard_labels(proba, t);
              const ConfusionRates rates = confusion_by_group(test_y, labels, test_g);
              cell.curve.push_back({t, balanced_accuracy(test_y, labels), average_odds_difference(rates)});
            }
          } catch (const Error& e) {
            cell.error = cell_error(e);
            cell.report.reset();
            cell.curve.clear();
          }
        }
        result.cells.push_back(std::move(cell));
      }
    }
  }
  log["increments"] = std::move(inc_log);
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& c : result.cells) {
    if (!c.error.empty())
      errors.push_back({{"increment", c.increment}, {"model", short_name(c.kind)}, {"arm", to_string(c.arm)}, {"error", c.error}});
  }
  log["cell_errors"] = std::move(errors);
  return result;
}

// ---------------------------------------------------------------------------

void emit_tables(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string header = "Model,BA,SPD,AOD,DI,EOD,TI,Model,BA,SPD,AOD,DI,EOD,TI\n";
  auto row_of = [](const CellResult* c, ClassifierKind kind) {
    std::string s = short_name(kind);
    if (!c || !c->report) return s + ",error,error,error,error,error,error";
    const FairnessReport& r = *c->report;
    for (double v : {r.ba, r.spd, r.aod, r.di, r.eod, r.ti}) s += "," + four_decimals(v);
    return s;
  };

  if (result.increments.empty()) {
    std::ofstream out(dir / ("table_" + result.protected_attribute + ".csv"), std::ios::binary);
    out << header;
  }
  for (std::size_t inc : result.increments) {
    std::ofstream out(dir / ("table_" + result.protected_attribute + "_n" + std::to_string(inc) + ".csv"),
                      std::ios::binary);
    if (!out) throw ParseError("cannot write tables under " + dir.string());
    out << header;
    for (ClassifierKind kind : result.roster) {
      out << row_of(result.find(inc, kind, Arm::kBefore), kind) << ','
          << row_of(result.find(inc, kind, Arm::kAfter), kind) << '\n';
    }
  }

  std::ofstream out(dir / "results.csv", std::ios::binary);
  out << "protected,increment,model,arm,BA,SPD,AOD,DI,EOD,TI,SPD_verdict,AOD_verdict,DI_verdict,EOD_verdict,TI_verdict,error\n";
  for (const auto& c : result.cells) {
    out << result.protected_attribute << ',' << c.increment << ',' << short_name(c.kind) << ',' << to_string(c.arm);
    if (c.report) {
      const FairnessReport& r = *c.report;
      for (double v : {r.ba, r.spd, r.aod, r.di, r.eod, r.ti}) out << ',' << full_precision(v);
      for (Verdict v : {r.spd_verdict, r.aod_verdict, r.di_verdict, r.eod_verdict, r.ti_verdict}) out << ',' << to_string(v);
      out << ",\n";
    } else {
      std::string err = c.error;
      std::replace(err.begin(), err.end(), '"', '\'');
      out << ",,,,,,,,,,,,\"" << err << "\"\n";
    }
  }
}

void emit_curves(const ExperimentResult& result, const std::filesystem::path& dir) {
  const auto curves = dir / "curves";
  std::filesystem::create_directories(curves);
  for (const auto& c : result.cells) {
    const std::string name = result.protected_attribute + "_n" + std::to_string(c.increment) + "_" +
                             short_name(c.kind) + "_" + to_string(c.arm) + ".csv";
    std::ofstream out(curves / name, std::ios::binary);
    if (!out) throw ParseError("cannot write curve file " + name);
    out << "threshold,BA,AOD\n";
    for (const auto& p : c.curve) {
      out << full_precision(p.threshold) << ',' << full_precision(p.ba) << ',' << full_precision(p.aod) << '\n';
    }
  }
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  emit_tables(result, dir);
  emit_curves(result, dir);
  std::ofstream log(dir / "run_log.json", std::ios::binary);
  log << result.log.dump(2) << '\n';
}

}  // namespace fairdiff
