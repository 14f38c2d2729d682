// Command-line front end for the fairdiff pipeline.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairdiff/classifiers.hpp"
#include "fairdiff/dataset.hpp"
#include "fairdiff/diffusion.hpp"
#include "fairdiff/errors.hpp"
#include "fairdiff/harness.hpp"
#include "fairdiff/metrics.hpp"
#include "fairdiff/reweighing.hpp"

using namespace fairdiff;
using nlohmann::json;

namespace {

SchemaPtr load_schema(const std::string& path, const std::string& attribute, const std::string& privileged) {
  auto schema = std::make_shared<const TableSchema>(TableSchema::load(path));
  if (!attribute.empty()) schema = std::make_shared<const TableSchema>(schema->with_protected(attribute, privileged));
  return schema;
}

json transform_to_json(const QuantileTransform& qt) {
  json cols = json::array();
  for (const auto& c : qt.columns()) cols.push_back({{"knots", c.knots}, {"scores", c.scores}, {"constant", c.constant}});
  return cols;
}

QuantileTransform transform_from_json(const json& j, SchemaPtr schema) {
  std::vector<QuantileTransform::Column> cols;
  for (const auto& c : j) {
    cols.push_back({c.at("knots").get<std::vector<double>>(), c.at("scores").get<std::vector<double>>(),
                    c.at("constant").get<bool>()});
  }
  return QuantileTransform(std::move(schema), std::move(cols));
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

struct TableArgs {
  std::string schema, data, missing = "?", attribute, privileged;

  void add(CLI::App* app) {
    app->add_option("--schema", schema, "schema JSON")->required()->check(CLI::ExistingFile);
    app->add_option("--data", data, "CSV data file")->required()->check(CLI::ExistingFile);
    app->add_option("--missing", missing, "missing-value token");
    app->add_option("--protected", attribute, "override the protected attribute");
    app->add_option("--privileged", privileged, "privileged value of --protected");
  }
  DataTable load() const { return load_csv(data, load_schema(schema, attribute, privileged), missing); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware tabular diffusion augmentation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // ingest
  TableArgs ingest_args;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "validate a CSV against a schema and write the cleaned table");
  ingest_args.add(ingest);
  ingest->add_option("--out", ingest_out, "cleaned CSV output");

  // train-diffusion
  TableArgs td_args;
  std::string td_config, td_out;
  std::uint64_t td_seed = 11;
  auto* td = app.add_subcommand("train-diffusion", "train the tabular diffusion model");
  td_args.add(td);
  td->add_option("--config", td_config, "diffusion hyperparameters JSON")->check(CLI::ExistingFile);
  td->add_option("--seed", td_seed, "training seed");
  td->add_option("--out", td_out, "model file")->required();

  // sample
  std::string sm_model, sm_out;
  std::size_t sm_n = 0;
  std::uint64_t sm_seed = 13;
  auto* sm = app.add_subcommand("sample", "generate synthetic rows from a trained model");
  sm->add_option("--model", sm_model, "model file")->required()->check(CLI::ExistingFile);
  sm->add_option("-n,--rows", sm_n, "number of rows")->required();
  sm->add_option("--seed", sm_seed, "sampling seed");
  sm->add_option("--out", sm_out, "CSV output")->required();

  // reweigh
  TableArgs rw_args;
  std::string rw_out;
  auto* rw = app.add_subcommand("reweigh", "compute reweighing weights and report the cell counts");
  rw_args.add(rw);
  rw->add_option("--out", rw_out, "CSV output with a weight column");

  // train-clf
  TableArgs tc_args;
  std::string tc_kind, tc_params, tc_out;
  bool tc_reweigh = false;
  std::uint64_t tc_seed = 17;
  auto* tc = app.add_subcommand("train-clf", "train one classifier");
  tc_args.add(tc);
  tc->add_option("--model", tc_kind, "DT, GNB, KNN, LR or RF")->required();
  tc->add_option("--params", tc_params, "classifier hyperparameters JSON")->check(CLI::ExistingFile);
  tc->add_flag("--reweigh", tc_reweigh, "fit with reweighing weights");
  tc->add_option("--seed", tc_seed, "classifier seed");
  tc->add_option("--out", tc_out, "classifier JSON")->required();

  // evaluate
  TableArgs ev_args;
  std::string ev_clf, ev_out;
  double ev_threshold = 0.5;
  auto* ev = app.add_subcommand("evaluate", "evaluate a trained classifier on a test table");
  ev_args.add(ev);
  ev->add_option("--classifier", ev_clf, "classifier JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--threshold", ev_threshold, "decision threshold")->check(CLI::Range(0.0, 1.0));
  ev->add_option("--out", ev_out, "report output");

  // experiment
  std::string ex_config, ex_out;
  auto* ex = app.add_subcommand("experiment", "run the full augmentation and reweighing grid");
  ex->add_option("--config", ex_config, "experiment config JSON")->required()->check(CLI::ExistingFile);
  ex->add_option("--out", ex_out, "output directory (overrides the config)");

  // compare-marginals
  std::string cm_schema, cm_original, cm_synthetic, cm_out;
  auto* cm = app.add_subcommand("compare-marginals", "per-column divergence between two tables");
  cm->add_option("--schema", cm_schema, "schema JSON")->required()->check(CLI::ExistingFile);
  cm->add_option("--original", cm_original, "original CSV")->required()->check(CLI::ExistingFile);
  cm->add_option("--synthetic", cm_synthetic, "synthetic CSV")->required()->check(CLI::ExistingFile);
  cm->add_option("--out", cm_out, "report output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const DataTable t = ingest_args.load();
      if (!ingest_out.empty()) write_csv(t, ingest_out);
      const auto c = count_groups(t);
      std::cout << "rows " << t.rows() << "\nfavorable " << c.positive << "\nprivileged " << c.privileged << '\n';
    } else if (*td) {
      const DataTable t = td_args.load();
      const QuantileTransform qt = QuantileTransform::fit(t);
      const DiffusionConfig cfg = td_config.empty() ? DiffusionConfig{} : DiffusionConfig::from_json(read_json(td_config));
      const DiffusionModel model = train(encode(t, qt), qt, cfg, td_seed);
      save_model(model, td_out);
      std::cout << "final loss " << model.loss_log.back() << '\n';
    } else if (*sm) {
      const DiffusionModel model = load_model(sm_model);
      write_csv(sample(model, sm_n, sm_seed), sm_out);
    } else if (*rw) {
      const DataTable t = rw_args.load();
      const auto counts = count_groups(t);
      const auto weights = compute_weights(counts);
      std::cout << format_report(t.schema(), counts, weights);
      if (!rw_out.empty()) write_csv(apply_weights(t, weights), rw_out, true);
    } else if (*tc) {
      const DataTable t = tc_args.load();
      const QuantileTransform qt = QuantileTransform::fit(t);
      const ClassifierParams params =
          tc_params.empty() ? ClassifierParams{} : ClassifierParams::from_json(read_json(tc_params));
      const DataTable weighted = tc_reweigh ? apply_weights(t, compute_weights(count_groups(t))) : t;
      const auto labels = t.labels();
      const ClassifierModel model =
          fit(parse_classifier_kind(tc_kind), classifier_features(t, qt), labels, weighted.weights(), params, tc_seed);
      const json out{{"version", kVersion},
                     {"schema", t.schema().to_json()},
                     {"transform", transform_to_json(qt)},
                     {"classifier", model.to_json()}};
      write_text(tc_out, out.dump() + "\n");
    } else if (*ev) {
      const json j = read_json(ev_clf);
      const DataTable t = ev_args.load();
      if (!(TableSchema::from_json(j.at("schema")).columns() == t.schema().columns()))
        throw SchemaError("test table columns differ from the classifier's training schema");
      const QuantileTransform qt = transform_from_json(j.at("transform"), t.schema_ptr());
      const ClassifierModel model = ClassifierModel::from_json(j.at("classifier"));
      const auto proba = model.predict_proba(classifier_features(t, qt));
      write_text(ev_out, format_report(evaluate(t, hard_labels(proba, ev_threshold))));
    } else if (*ex) {
      ExperimentConfig cfg = ExperimentConfig::load(ex_config);
      if (!ex_out.empty()) cfg.output_dir = ex_out;
      const ExperimentResult result = run_experiment(cfg);
      write_outputs(result, cfg.output_dir);
      std::size_t failed = 0;
      for (const auto& c : result.cells) failed += c.error.empty() ? 0 : 1;
      std::cout << result.cells.size() << " cells, " << failed << " failed; outputs in " << cfg.output_dir.string()
                << '\n';
    } else if (*cm) {
      auto schema = std::make_shared<const TableSchema>(TableSchema::load(cm_schema));
      const DataTable a = load_csv(cm_original, schema);
      const DataTable b = load_csv(cm_synthetic, schema);
      write_text(cm_out, format_marginals(compare_marginals(a, b)));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
