#include "mcgraph/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mcgraph/config.hpp"
#include "mcgraph/error.hpp"
#include "mcgraph/experiment.hpp"
#include "mcgraph/metrics.hpp"
#include "mcgraph/report.hpp"

namespace mcgraph {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Options {
  std::string data;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::string variant;
  std::optional<int> ts;
  std::optional<std::size_t> criteria;
  std::optional<int> jobs;
  std::string out_dir = "results";
  std::vector<std::string> sets;

  std::string checkpoint;
  bool baselines = false;
  std::string kind = "sensitivity";
  std::vector<double> alphas{0.1, 0.5};
  std::vector<double> betas{0.1, 0.5};
  std::vector<double> lambdas = default_lambda_grid();
  std::vector<int> dims{64, 128, 256, 512};
  std::vector<std::size_t> counts;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "ratings CSV (synthetic planted data when omitted)");
  cmd->add_option("--config", o.config, "key = value config file");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--runs", o.runs, "number of seeded runs")->check(CLI::PositiveNumber);
  cmd->add_option("--variant", o.variant, "full, no_global_attention, no_global_attention_no_cl");
  cmd->add_option("--ts", o.ts, "training segment percent")->check(CLI::IsMember({40, 60, 80, 100}));
  cmd->add_option("--criteria", o.criteria, "use the first K criteria");
  cmd->add_option("--jobs", o.jobs, "concurrent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--set", o.sets, "config override KEY=VALUE")->take_all();
}

ExperimentConfig effective_config(const Options& o) {
  ExperimentConfig cfg;
  if (const char* env = std::getenv("MCGRAPH_SEED"); env && *env) set_config_value(cfg, "seed", env);
  if (!o.config.empty()) cfg = load_config(o.config, cfg);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.data.empty()) cfg.data = o.data;
  if (o.seed) cfg.seed = *o.seed;
  if (o.runs) cfg.runs = *o.runs;
  if (!o.variant.empty()) cfg.variant = parse_variant(o.variant);
  if (o.ts) cfg.ts_percent = *o.ts;
  if (o.criteria) cfg.criteria = *o.criteria;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

fs::path output_path(const Options& o, const std::string& name) {
  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir / name;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("write failed for " + path.string());
}

template <class Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_file(path, s.str());
}

std::string summary_line(const MetricReport& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << r.variant << " ts=" << r.ts_percent
    << " runs=" << r.mae.size() << " mae=" << r.mae_mean << " +- " << r.mae_std
    << " rmse=" << r.rmse_mean << " +- " << r.rmse_std;
  if (r.failures) s << " failed=" << r.failures;
  return s.str();
}

// All-failed experiments have nothing to report beyond the failure list.
int report_status(const std::vector<MetricReport>& reports, std::ostream& err) {
  for (const auto& r : reports)
    if (r.failures) err << r.variant << ": " << r.failures << " run(s) aborted on non-finite loss\n";
  for (const auto& r : reports)
    if (r.mae.empty() && r.failures) return kExitNumeric;
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_stats(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = effective_config(o);
  const RatingDataset ds = load_dataset(cfg);
  Json j;
  j["stats"] = Json::parse(stats_to_json(compute_stats(ds)));
  j["config"] = Json::parse(config_to_json(cfg));
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = effective_config(o);
  const RatingDataset ds = load_dataset(cfg);
  const auto csv = output_path(o, "ratings.csv");
  write_with(csv, [&](std::ostream& s) {
    write_config_header(s, cfg);
    write_ratings(s, ds);
  });
  Json j;
  j["stats"] = Json::parse(stats_to_json(compute_stats(ds)));
  j["config"] = Json::parse(config_to_json(cfg));
  write_file(output_path(o, "stats.json"), j.dump(2) + "\n");
  out << "wrote " << ds.size() << " records to " << csv.string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = effective_config(o);
  const PreparedData data = prepare_data(cfg);
  const RatingDataset train = subsample_train(data.train, cfg.ts_percent, cfg.seed);
  TrainedModel m = fit_model(cfg, train, cfg.seed);

  Checkpoint ckpt{cfg, cfg.seed, train.users().ids(), train.items().ids(),
                  std::move(m.encoder), std::move(m.fused), m.predictor};
  save_checkpoint(output_path(o, "checkpoint.json"), ckpt);
  write_with(output_path(o, "loss_trace.csv"), [&](std::ostream& s) {
    write_config_header(s, cfg);
    write_loss_trace(s, m.trace);
  });

  std::vector<double> actual;
  for (const auto& r : data.test.records()) actual.push_back(r.overall);
  const auto pred = predict_records(ckpt.predictor, ckpt.fused, data.test.records());
  Json j;
  j["seed"] = cfg.seed;
  j["epochs"] = m.trace.size();
  j["final_loss"] = m.trace.empty() ? 0.0 : m.trace.back().l_total;
  j["test_mae"] = mae(pred, actual);
  j["test_rmse"] = rmse(pred, actual);
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty()) throw ConfigError("predict requires --checkpoint");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);

  std::vector<RatingRecord> records;
  if (o.data.empty()) {
    records = prepare_data(ckpt.config).test.records();
  } else {
    RatingDataset ds = load_ratings(fs::path(o.data));
    if (ckpt.config.rating_min != kMinRating || ckpt.config.rating_max != kMaxRating)
      ds = normalize_scale(ds, ckpt.config.rating_min, ckpt.config.rating_max);
    IndexMap users, items;
    for (const auto& id : ckpt.user_ids) users.intern(id);
    for (const auto& id : ckpt.item_ids) items.intern(id);
    for (auto r : ds.records()) {
      if (!users.contains(r.user_id)) throw DataError("user '" + r.user_id + "' is not in the checkpoint");
      if (!items.contains(r.item_id)) throw DataError("item '" + r.item_id + "' is not in the checkpoint");
      r.user = users.at(r.user_id);
      r.item = items.at(r.item_id);
      records.push_back(std::move(r));
    }
  }
  const auto pred = predict_records(ckpt.predictor, ckpt.fused, records);
  const auto path = output_path(o, "predictions.csv");
  write_with(path, [&](std::ostream& s) {
    write_config_header(s, ckpt.config);
    s << "# checkpoint_seed = " << ckpt.seed << '\n';
    write_predictions_csv(s, records, pred);
  });
  out << "wrote " << pred.size() << " predictions to " << path.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = effective_config(o);
  const PreparedData data = prepare_data(cfg);
  std::vector<MetricReport> reports{run_experiment(cfg, data)};
  write_file(output_path(o, "report.json"), report_to_json(reports.front()));
  if (o.baselines) {
    std::vector<MetricReport> base;
    for (Baseline b : {Baseline::kUserKnn, Baseline::kMultiUserKnn, Baseline::kMlr})
      base.push_back(run_baseline(cfg, data, b));
    write_file(output_path(o, "baselines.json"), reports_to_json(base));
    reports.insert(reports.end(), base.begin(), base.end());
    write_file(output_path(o, "comparison.txt"), render_comparison(reports));
  }
  write_with(output_path(o, "runs.csv"), [&](std::ostream& s) { write_runs_csv(s, reports); });
  for (const auto& r : reports) out << summary_line(r) << '\n';
  return report_status(reports, err);
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = effective_config(o);
  const PreparedData data = prepare_data(cfg);
  std::vector<MetricReport> reports;
  for (Variant v : {Variant::kFull, Variant::kNoGlobalAttention, Variant::kNoGlobalAttentionNoCl})
    reports.push_back(run_ablation(cfg, v, data));
  write_file(output_path(o, "ablation.json"), reports_to_json(reports));
  write_with(output_path(o, "runs.csv"), [&](std::ostream& s) { write_runs_csv(s, reports); });
  write_file(output_path(o, "comparison.txt"), render_comparison(reports));
  for (const auto& r : reports) out << summary_line(r) << '\n';
  return report_status(reports, err);
}

template <class Point>
std::vector<MetricReport> reports_of(const std::vector<Point>& points) {
  std::vector<MetricReport> out;
  for (const auto& p : points) out.push_back(p.report);
  return out;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = effective_config(o);
  const PreparedData data = prepare_data(cfg);
  std::vector<MetricReport> reports;
  if (o.kind == "sensitivity") {
    const auto points = sweep_sensitivity(cfg, data, o.alphas, o.betas, o.lambdas);
    write_with(output_path(o, "sensitivity.csv"), [&](std::ostream& s) { write_sensitivity_csv(s, points); });
    reports = reports_of(points);
  } else if (o.kind == "dim") {
    const auto points = sweep_embedding_dim(cfg, data, o.dims);
    write_with(output_path(o, "dim.csv"), [&](std::ostream& s) { write_dim_csv(s, points); });
    reports = reports_of(points);
  } else {
    const auto points = sweep_criteria_count(cfg, data, o.counts);
    write_with(output_path(o, "criteria.csv"), [&](std::ostream& s) { write_criteria_csv(s, points); });
    reports = reports_of(points);
  }
  write_file(output_path(o, "sweep.json"), reports_to_json(reports));
  for (const auto& r : reports) out << summary_line(r) << '\n';
  return report_status(reports, err);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-criteria graph recommender: training, evaluation and sweeps", "mcgraph"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "load, rescale and rewrite a ratings CSV with stats");
  auto* stats = app.add_subcommand("stats", "print dataset statistics as JSON");
  auto* train = app.add_subcommand("train", "train one model and write a checkpoint");
  auto* predict = app.add_subcommand("predict", "predict ratings from a checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "seeded multi-run evaluation");
  auto* ablate = app.add_subcommand("ablate", "evaluate all three variants");
  auto* sweep = app.add_subcommand("sweep", "hyperparameter sweeps");
  for (auto* cmd : {ingest, stats, train, predict, evaluate, ablate, sweep}) add_common(cmd, o);

  predict->add_option("--checkpoint", o.checkpoint, "checkpoint written by train")->required();
  evaluate->add_flag("--baselines", o.baselines, "also run UserKNN, MultiUserKNN and MLR");
  sweep->add_option("--kind", o.kind, "sensitivity, dim or criteria")
      ->check(CLI::IsMember({"sensitivity", "dim", "criteria"}))
      ->capture_default_str();
  sweep->add_option("--alphas", o.alphas, "alpha grid")->delimiter(',');
  sweep->add_option("--betas", o.betas, "beta grid")->delimiter(',');
  sweep->add_option("--lambdas", o.lambdas, "lambda grid")->delimiter(',');
  sweep->add_option("--dims", o.dims, "fused embedding widths")->delimiter(',');
  sweep->add_option("--counts", o.counts, "criteria counts (default 1..C)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    if (!app.get_subcommands().empty()) return kExitUsage;
    err << app.help();
    return kExitUsage;
  }

  try {
    if (stats->parsed()) return cmd_stats(o, out);
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (predict->parsed()) return cmd_predict(o, out);
    if (evaluate->parsed()) return cmd_evaluate(o, out, err);
    if (ablate->parsed()) return cmd_ablate(o, out, err);
    return cmd_sweep(o, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace mcgraph
