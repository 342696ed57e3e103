#include "mcgraph/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>
#include <tuple>

#include "mcgraph/baselines.hpp"
#include "mcgraph/error.hpp"
#include "mcgraph/graph.hpp"
#include "mcgraph/metrics.hpp"
#include "mcgraph/synthetic.hpp"

namespace mcgraph {

RatingDataset load_dataset(const ExperimentConfig& cfg) {
  RatingDataset ds = cfg.data.empty() ? generate_planted(cfg.synthetic, cfg.synthetic_seed)
                                      : load_ratings(std::filesystem::path(cfg.data));
  if (cfg.rating_min != kMinRating || cfg.rating_max != kMaxRating)
    ds = normalize_scale(ds, cfg.rating_min, cfg.rating_max);
  if (cfg.max_users > 0 && ds.num_users() > cfg.max_users) {
    std::vector<RatingRecord> kept;
    for (const auto& r : ds.records())
      if (r.user < cfg.max_users) kept.push_back(r);
    ds = RatingDataset::from_records(std::move(kept), ds.criteria_names());
  }
  if (cfg.criteria > 0) {
    if (cfg.criteria > ds.num_criteria())
      throw ConfigError("criteria = " + std::to_string(cfg.criteria) + " but the dataset has " +
                        std::to_string(ds.num_criteria()));
    ds = ds.with_criteria_prefix(cfg.criteria);
  }
  return ds;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData d;
  d.full = load_dataset(cfg);
  std::tie(d.train, d.test) = split_train_test(d.full, cfg.test_fraction, cfg.split_seed);
  return d;
}

TrainedModel fit_model(const ExperimentConfig& cfg, const RatingDataset& train, std::uint64_t seed) {
  const auto views = build_views(train);
  TrainResult trained = mcgraph::train(views, cfg.effective_encoder(), cfg.effective_train(), seed);
  TrainedModel m;
  m.encoder = std::move(trained.params);
  m.trace = std::move(trained.trace);
  m.fused = fuse(encode_views(views, m.encoder), train.num_users());
  m.predictor = train_predictor(m.fused, train, cfg.predictor, seed);
  return m;
}

namespace {

std::vector<double> actuals(const RatingDataset& ds) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records()) out.push_back(r.overall);
  return out;
}

template <class Fn>
std::vector<RunResult> run_seeds(const ExperimentConfig& cfg, Fn&& one) {
  const auto n = static_cast<std::size_t>(cfg.runs);
  std::vector<RunResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        results[k] = one(cfg.seed + k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace

RunResult run_once(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.seed = seed;
  const RatingDataset train = subsample_train(data.train, cfg.ts_percent, seed);
  try {
    const TrainedModel m = fit_model(cfg, train, seed);
    r.trace = m.trace;
    const auto pred = predict_records(m.predictor, m.fused, data.test.records());
    const auto act = actuals(data.test);
    r.mae = mae(pred, act);
    r.rmse = rmse(pred, act);
    r.train_mae = mae(predict_records(m.predictor, m.fused, train.records()), actuals(train));
    if (!std::isfinite(r.mae) || !std::isfinite(r.rmse))
      throw NumericError(cfg.train.epochs, "non-finite test metric");
  } catch (const TrainingAborted& e) {
    r.failed = true;
    r.failed_epoch = e.epoch();
    r.error = e.what();
  } catch (const NumericError& e) {
    r.failed = true;
    r.failed_epoch = e.epoch();
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void MetricReport::summarize() {
  mae_mean = mean(mae);
  mae_std = stddev(mae);
  rmse_mean = mean(rmse);
  rmse_std = stddev(rmse);
}

MetricReport aggregate(const std::string& variant, const ExperimentConfig& cfg,
                       const std::vector<RunResult>& runs) {
  MetricReport rep;
  rep.variant = variant;
  rep.ts_percent = cfg.ts_percent;
  rep.config = cfg;
  for (const auto& r : runs) {
    if (r.failed) {
      ++rep.failures;
      rep.failed_seeds.push_back(r.seed);
      continue;
    }
    rep.seeds.push_back(r.seed);
    rep.mae.push_back(r.mae);
    rep.rmse.push_back(r.rmse);
    rep.seconds.push_back(r.seconds);
  }
  rep.summarize();
  return rep;
}

MetricReport run_experiment(const ExperimentConfig& cfg, const PreparedData& data,
                            std::vector<RunResult>* out) {
  cfg.validate();
  auto runs = run_seeds(cfg, [&](std::uint64_t seed) { return run_once(cfg, data, seed); });
  MetricReport rep = aggregate(std::string(variant_tag(cfg.variant)), cfg, runs);
  if (out) *out = std::move(runs);
  return rep;
}

MetricReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, prepare_data(cfg));
}

MetricReport run_ablation(ExperimentConfig cfg, Variant variant, const PreparedData& data) {
  cfg.variant = variant;
  return run_experiment(cfg, data);
}

std::string_view baseline_name(Baseline b) {
  switch (b) {
    case Baseline::kUserKnn: return "UserKNN";
    case Baseline::kMultiUserKnn: return "MultiUserKNN";
    case Baseline::kMlr: return "MLR";
  }
  return "UserKNN";
}

MetricReport run_baseline(const ExperimentConfig& cfg, const PreparedData& data, Baseline b) {
  cfg.validate();
  const auto act = actuals(data.test);
  auto runs = run_seeds(cfg, [&](std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    const RatingDataset train = subsample_train(data.train, cfg.ts_percent, seed);
    std::vector<double> pred;
    switch (b) {
      case Baseline::kUserKnn: pred = baseline_user_knn(train, data.test, cfg.knn_neighbors); break;
      case Baseline::kMultiUserKnn:
        pred = baseline_multi_user_knn(train, data.test, cfg.knn_neighbors);
        break;
      case Baseline::kMlr: pred = baseline_mlr(train, data.test); break;
    }
    RunResult r;
    r.seed = seed;
    r.mae = mae(pred, act);
    r.rmse = rmse(pred, act);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  });
  return aggregate(std::string(baseline_name(b)), cfg, runs);
}

std::vector<double> default_lambda_grid() {
  std::vector<double> out;
  for (int k = 2; k <= 9; ++k) out.push_back(k / 10.0);
  return out;
}

std::vector<SensitivityPoint> sweep_sensitivity(const ExperimentConfig& cfg, const PreparedData& data,
                                                const std::vector<double>& alphas,
                                                const std::vector<double>& betas,
                                                const std::vector<double>& lambdas) {
  std::vector<SensitivityPoint> out;
  for (double a : alphas)
    for (double b : betas)
      for (double l : lambdas) {
        ExperimentConfig c = cfg;
        c.train.loss.alpha = a;
        c.train.loss.beta = b;
        c.train.loss.lambda = l;
        out.push_back({a, b, l, run_experiment(c, data)});
      }
  return out;
}

ExperimentConfig with_fused_dim(ExperimentConfig cfg, int fused_dim, std::size_t num_criteria) {
  const int views = static_cast<int>(num_criteria);
  if (fused_dim < 1 || views < 1 || fused_dim % (views * cfg.encoder.heads) != 0)
    throw ConfigError("fused dimension " + std::to_string(fused_dim) + " is not divisible by " +
                      std::to_string(views) + " views x " + std::to_string(cfg.encoder.heads) +
                      " heads");
  cfg.encoder.hidden_dim = fused_dim / views / cfg.encoder.heads;
  return cfg;
}

std::vector<DimPoint> sweep_embedding_dim(const ExperimentConfig& cfg, const PreparedData& data,
                                          const std::vector<int>& dims) {
  std::vector<ExperimentConfig> configs;
  for (int d : dims) configs.push_back(with_fused_dim(cfg, d, data.full.num_criteria()));
  std::vector<DimPoint> out;
  for (std::size_t k = 0; k < dims.size(); ++k) out.push_back({dims[k], run_experiment(configs[k], data)});
  return out;
}

std::vector<CriteriaPoint> sweep_criteria_count(const ExperimentConfig& cfg, const PreparedData& data,
                                                const std::vector<std::size_t>& counts) {
  std::vector<std::size_t> ks = counts;
  if (ks.empty())
    for (std::size_t k = 1; k <= data.full.num_criteria(); ++k) ks.push_back(k);
  std::vector<CriteriaPoint> out;
  for (std::size_t k : ks) {
    if (k < 1 || k > data.full.num_criteria())
      throw ConfigError("criteria count " + std::to_string(k) + " out of range");
    PreparedData sub{data.full.with_criteria_prefix(k), data.train.with_criteria_prefix(k),
                     data.test.with_criteria_prefix(k)};
    ExperimentConfig c = cfg;
    c.criteria = k;
    out.push_back({k, run_experiment(c, sub)});
  }
  return out;
}

}  // namespace mcgraph
