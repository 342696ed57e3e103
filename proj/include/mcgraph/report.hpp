#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mcgraph/config.hpp"
#include "mcgraph/experiment.hpp"

namespace mcgraph {

/// Full report as JSON: config, seeds, per-run metrics, summary, failures.
/// Wall-clock times are left out so reruns produce identical files.
std::string report_to_json(const MetricReport& report, int indent = 2);
std::string reports_to_json(const std::vector<MetricReport>& reports, int indent = 2);

/// `# key = value` lines for every config key.
void write_config_header(std::ostream& out, const ExperimentConfig& cfg);

/// `variant,ts,run,mae,rmse` rows, one per successful run.
void write_runs_csv(std::ostream& out, const std::vector<MetricReport>& reports);

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityPoint>& points);
void write_dim_csv(std::ostream& out, const std::vector<DimPoint>& points);
void write_criteria_csv(std::ostream& out, const std::vector<CriteriaPoint>& points);

/// `user_id,item_id,actual,predicted`
void write_predictions_csv(std::ostream& out, const std::vector<RatingRecord>& records,
                           const std::vector<double>& predictions);

/// Published MAE/RMSE on the two benchmark datasets, used as fixed reference
/// rows for methods this library does not implement.
struct ReferenceRow {
  const char* method;
  double yahoo_mae, yahoo_rmse, beer_mae, beer_rmse;
};
const std::vector<ReferenceRow>& reference_results();

/// Text table of the reference rows with a measured column filled in for
/// every method present in `measured` (matched by variant name).
std::string render_comparison(const std::vector<MetricReport>& measured);

/// Trained model with everything needed to predict by user/item id.
struct Checkpoint {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  EncoderParams encoder;
  FusedEmbedding fused;
  RatingPredictor predictor;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mcgraph
