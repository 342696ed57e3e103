#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mcgraph/config.hpp"
#include "mcgraph/contrastive.hpp"
#include "mcgraph/dataset.hpp"
#include "mcgraph/recommend.hpp"

namespace mcgraph {

/// Dataset after loading (or generating), rescaling, user truncation and
/// criteria selection, with the fixed train/test partition.
struct PreparedData {
  RatingDataset full;
  RatingDataset train;
  RatingDataset test;
};

RatingDataset load_dataset(const ExperimentConfig& cfg);
PreparedData prepare_data(const ExperimentConfig& cfg);

/// Encoder, fused embeddings and predictor trained on one training set.
struct TrainedModel {
  EncoderParams encoder;
  FusedEmbedding fused;
  RatingPredictor predictor;
  std::vector<LossReport> trace;
};

/// Builds the views of `train`, trains the encoder and the predictor.
/// Throws TrainingAborted on a non-finite loss.
TrainedModel fit_model(const ExperimentConfig& cfg, const RatingDataset& train, std::uint64_t seed);

struct RunResult {
  std::uint64_t seed = 0;
  bool failed = false;
  int failed_epoch = 0;
  std::string error;
  double mae = 0.0;
  double rmse = 0.0;
  double train_mae = 0.0;
  double seconds = 0.0;  // wall clock, not written to result files
  std::vector<LossReport> trace;
};

/// One full pipeline: Ts subsample of the train split, training, test metrics.
RunResult run_once(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed);

struct MetricReport {
  std::string variant;  // D-MGAC, D-MGAC*, D-MGAC*- or a baseline name
  int ts_percent = 100;
  std::vector<std::uint64_t> seeds;  // successful runs, in seed order
  std::vector<double> mae;
  std::vector<double> rmse;
  std::vector<double> seconds;
  double mae_mean = 0.0, mae_std = 0.0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  std::size_t failures = 0;
  std::vector<std::uint64_t> failed_seeds;
  ExperimentConfig config;

  /// Recomputes means and stds from the per-run lists.
  void summarize();
};

MetricReport aggregate(const std::string& variant, const ExperimentConfig& cfg,
                       const std::vector<RunResult>& runs);

/// Runs cfg.runs pipelines with seeds cfg.seed .. cfg.seed + runs - 1 on at
/// most cfg.jobs threads. `out` (optional) receives every run in seed order.
MetricReport run_experiment(const ExperimentConfig& cfg, const PreparedData& data,
                            std::vector<RunResult>* out = nullptr);
MetricReport run_experiment(const ExperimentConfig& cfg);

MetricReport run_ablation(ExperimentConfig cfg, Variant variant, const PreparedData& data);

enum class Baseline { kUserKnn, kMultiUserKnn, kMlr };
std::string_view baseline_name(Baseline b);

/// Baseline scored on the same splits and Ts subsamples as run_experiment.
MetricReport run_baseline(const ExperimentConfig& cfg, const PreparedData& data, Baseline b);

struct SensitivityPoint {
  double alpha = 0.0, beta = 0.0, lambda = 0.0;
  MetricReport report;
};

std::vector<double> default_lambda_grid();  // 0.2, 0.3, ..., 0.9

std::vector<SensitivityPoint> sweep_sensitivity(const ExperimentConfig& cfg, const PreparedData& data,
                                                const std::vector<double>& alphas = {0.1, 0.5},
                                                const std::vector<double>& betas = {0.1, 0.5},
                                                const std::vector<double>& lambdas = default_lambda_grid());

struct DimPoint {
  int fused_dim = 0;
  MetricReport report;
};

/// Fused width D gives per-view width D / C split evenly over the heads;
/// D must be divisible by C * heads.
ExperimentConfig with_fused_dim(ExperimentConfig cfg, int fused_dim, std::size_t num_criteria);

std::vector<DimPoint> sweep_embedding_dim(const ExperimentConfig& cfg, const PreparedData& data,
                                          const std::vector<int>& dims = {64, 128, 256, 512});

struct CriteriaPoint {
  std::size_t criteria = 0;
  MetricReport report;
};

/// One report per criteria count, using the first k criteria; the test set
/// and the seeds are shared by every count.
std::vector<CriteriaPoint> sweep_criteria_count(const ExperimentConfig& cfg, const PreparedData& data,
                                                const std::vector<std::size_t>& counts = {});

}  // namespace mcgraph
