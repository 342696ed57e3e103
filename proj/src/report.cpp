#include "mcgraph/report.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "mcgraph/error.hpp"

namespace mcgraph {

using Json = nlohmann::ordered_json;

namespace {

Json config_json(const ExperimentConfig& cfg) { return Json::parse(config_to_json(cfg)); }

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items())
    set_config_value(cfg, key, value.is_string() ? value.get<std::string>() : value.dump());
  return cfg;
}

Json report_json(const MetricReport& r) {
  Json j;
  j["variant"] = r.variant;
  j["ts"] = r.ts_percent;
  j["runs"] = r.seeds.size();
  j["failures"] = r.failures;
  j["failed_seeds"] = r.failed_seeds;
  j["mae_mean"] = r.mae_mean;
  j["mae_std"] = r.mae_std;
  j["rmse_mean"] = r.rmse_mean;
  j["rmse_std"] = r.rmse_std;
  j["seeds"] = r.seeds;
  j["mae"] = r.mae;
  j["rmse"] = r.rmse;
  j["config"] = config_json(r.config);
  return j;
}

}  // namespace

std::string report_to_json(const MetricReport& report, int indent) {
  return report_json(report).dump(indent) + "\n";
}

std::string reports_to_json(const std::vector<MetricReport>& reports, int indent) {
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump(indent) + "\n";
}

void write_config_header(std::ostream& out, const ExperimentConfig& cfg) {
  std::istringstream lines(serialize_config(cfg));
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
}

void write_runs_csv(std::ostream& out, const std::vector<MetricReport>& reports) {
  if (!reports.empty()) write_config_header(out, reports.front().config);
  out << "variant,ts,run,mae,rmse\n" << std::setprecision(17);
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.mae.size(); ++k)
      out << r.variant << ',' << r.ts_percent << ',' << r.seeds[k] << ',' << r.mae[k] << ','
          << r.rmse[k] << '\n';
}

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityPoint>& points) {
  if (!points.empty()) write_config_header(out, points.front().report.config);
  out << "alpha,beta,lambda,mae_mean,mae_std\n" << std::setprecision(17);
  for (const auto& p : points)
    out << p.alpha << ',' << p.beta << ',' << p.lambda << ',' << p.report.mae_mean << ','
        << p.report.mae_std << '\n';
}

void write_dim_csv(std::ostream& out, const std::vector<DimPoint>& points) {
  if (!points.empty()) write_config_header(out, points.front().report.config);
  out << "dim,mae_mean,mae_std,rmse_mean,rmse_std\n" << std::setprecision(17);
  for (const auto& p : points)
    out << p.fused_dim << ',' << p.report.mae_mean << ',' << p.report.mae_std << ','
        << p.report.rmse_mean << ',' << p.report.rmse_std << '\n';
}

void write_criteria_csv(std::ostream& out, const std::vector<CriteriaPoint>& points) {
  if (!points.empty()) write_config_header(out, points.front().report.config);
  out << "criteria,mae_mean,mae_std,rmse_mean,rmse_std\n" << std::setprecision(17);
  for (const auto& p : points)
    out << p.criteria << ',' << p.report.mae_mean << ',' << p.report.mae_std << ','
        << p.report.rmse_mean << ',' << p.report.rmse_std << '\n';
}

void write_predictions_csv(std::ostream& out, const std::vector<RatingRecord>& records,
                           const std::vector<double>& predictions) {
  if (records.size() != predictions.size())
    throw ShapeError("write_predictions_csv: record and prediction counts differ");
  out << "user_id,item_id,actual,predicted\n" << std::setprecision(17);
  for (std::size_t k = 0; k < records.size(); ++k)
    out << records[k].user_id << ',' << records[k].item_id << ',' << records[k].overall << ','
        << predictions[k] << '\n';
}

const std::vector<ReferenceRow>& reference_results() {
  static const std::vector<ReferenceRow> rows = {
      {"BMF", 0.6289, 0.8646, 0.4394, 0.5858},
      {"MSVD", 0.6332, 0.8738, 0.4473, 0.5960},
      {"UserKNN", 0.9260, 1.2329, 0.6559, 0.8444},
      {"MLR", 0.6326, 0.8664, 0.4442, 0.5929},
      {"SVR", 0.6248, 0.8671, 0.4470, 0.5993},
      {"CIC", 0.6200, 0.8782, 0.4429, 0.5914},
      {"DMCF", 0.7012, 0.9139, 0.4698, 0.6240},
      {"DNN-MF", 0.6178, 0.8606, 0.4483, 0.6077},
      {"MCAE-FADNN", 0.6277, 0.8793, 0.4698, 0.6240},
      {"MultiUserKNN", 0.9319, 1.2396, 0.6572, 0.8441},
      {"CFM_user", 0.6184, 0.8802, 0.4403, 0.5904},
      {"CFM_item", 0.6127, 0.8433, 0.4408, 0.5904},
      {"D-MGAC", 0.6105, 0.7219, 0.4156, 0.5197},
  };
  return rows;
}

std::string render_comparison(const std::vector<MetricReport>& measured) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s   %9s %9s\n", "method", "yahoo_mae",
                "yahoo_rmse", "beer_mae", "beer_rmse", "mae", "rmse");
  out << line;
  for (const auto& row : reference_results()) {
    const MetricReport* m = nullptr;
    for (const auto& r : measured)
      if (r.variant == row.method) m = &r;
    if (m) {
      std::snprintf(line, sizeof line, "%-14s %9.4f %9.4f %9.4f %9.4f   %9.4f %9.4f\n", row.method,
                    row.yahoo_mae, row.yahoo_rmse, row.beer_mae, row.beer_rmse, m->mae_mean,
                    m->rmse_mean);
    } else {
      std::snprintf(line, sizeof line, "%-14s %9.4f %9.4f %9.4f %9.4f   %9s %9s\n", row.method,
                    row.yahoo_mae, row.yahoo_rmse, row.beer_mae, row.beer_rmse, "-", "-");
    }
    out << line;
  }
  for (const auto& r : measured) {
    bool listed = false;
    for (const auto& row : reference_results()) listed = listed || r.variant == row.method;
    if (listed) continue;
    std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s   %9.4f %9.4f\n", r.variant.c_str(), "-",
                  "-", "-", "-", r.mae_mean, r.rmse_mean);
    out << line;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

Json matrix_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw DataError("checkpoint matrix has " + std::to_string(data.size()) + " entries, expected " +
                    std::to_string(rows * cols));
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

Json matrices_json(const std::vector<Matrix>& ms) {
  Json arr = Json::array();
  for (const auto& m : ms) arr.push_back(matrix_json(m));
  return arr;
}

std::vector<Matrix> matrices_from(const Json& j) {
  std::vector<Matrix> out;
  for (const auto& m : j) out.push_back(matrix_from(m));
  return out;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  Json j;
  j["config"] = config_json(ckpt.config);
  j["seed"] = ckpt.seed;
  j["user_ids"] = ckpt.user_ids;
  j["item_ids"] = ckpt.item_ids;

  const auto& e = ckpt.encoder;
  Json enc;
  enc["heads"] = e.config.heads;
  enc["feature_dim"] = e.config.feature_dim;
  enc["hidden_dim"] = e.config.hidden_dim;
  enc["leaky_slope"] = e.config.leaky_slope;
  enc["init_std"] = e.config.init_std;
  enc["global_attention"] = e.config.global_attention;
  enc["features"] = matrix_json(e.features);
  Json views = Json::array();
  for (const auto& v : e.views) {
    Json layers = Json::array();
    for (const auto& l : v.layers)
      layers.push_back(Json{{"weight", matrices_json(l.weight)},
                            {"attention", matrices_json(l.attention)},
                            {"global", matrix_json(l.global)}});
    views.push_back(Json{{"layers", std::move(layers)}});
  }
  enc["views"] = std::move(views);
  j["encoder"] = std::move(enc);

  j["fused"] = Json{{"num_users", ckpt.fused.num_users},
                    {"view_dim", ckpt.fused.view_dim},
                    {"matrix", matrix_json(ckpt.fused.matrix)}};
  j["predictor"] = Json{{"epsilon", ckpt.predictor.epsilon},
                        {"regularization", ckpt.predictor.regularization},
                        {"bias", ckpt.predictor.bias},
                        {"weights", matrix_json(ckpt.predictor.weights)}};
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    Checkpoint c;
    c.config = config_from_json(j.at("config"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.user_ids = j.at("user_ids").get<std::vector<std::string>>();
    c.item_ids = j.at("item_ids").get<std::vector<std::string>>();

    const auto& enc = j.at("encoder");
    auto& e = c.encoder;
    e.config.heads = enc.at("heads").get<int>();
    e.config.feature_dim = enc.at("feature_dim").get<int>();
    e.config.hidden_dim = enc.at("hidden_dim").get<int>();
    e.config.leaky_slope = enc.at("leaky_slope").get<double>();
    e.config.init_std = enc.at("init_std").get<double>();
    e.config.global_attention = enc.at("global_attention").get<bool>();
    e.features = matrix_from(enc.at("features"));
    for (const auto& v : enc.at("views")) {
      ViewParams vp;
      for (const auto& l : v.at("layers"))
        vp.layers.push_back(LayerParams{matrices_from(l.at("weight")),
                                        matrices_from(l.at("attention")),
                                        matrix_from(l.at("global"))});
      e.views.push_back(std::move(vp));
    }

    const auto& f = j.at("fused");
    c.fused.num_users = f.at("num_users").get<std::size_t>();
    c.fused.view_dim = f.at("view_dim").get<std::size_t>();
    c.fused.matrix = matrix_from(f.at("matrix"));

    const auto& p = j.at("predictor");
    c.predictor.epsilon = p.at("epsilon").get<double>();
    c.predictor.regularization = p.at("regularization").get<double>();
    c.predictor.bias = p.at("bias").get<double>();
    c.predictor.weights = matrix_from(p.at("weights")).col(0);
    return c;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << checkpoint_to_json(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return checkpoint_from_json(text.str());
}

}  // namespace mcgraph
