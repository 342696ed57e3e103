#include "mcgraph/recommend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mcgraph/error.hpp"
#include "mcgraph/random.hpp"

namespace mcgraph {


std::size_t FusedEmbedding::user_row(std::size_t user) const {
  if (user >= num_users) throw DataError("unknown user index " + std::to_string(user));
  return user;
}

std::size_t FusedEmbedding::item_row(std::size_t item) const {
  const std::size_t row = num_users + item;
  if (row >= static_cast<std::size_t>(matrix.rows()))
    throw DataError("unknown item index " + std::to_string(item));
  return row;
}

FusedEmbedding fuse(const std::vector<Matrix>& views, std::size_t num_users) {
  if (views.empty()) throw ShapeError("fuse: no views");
  const Eigen::Index rows = views.front().rows(), d = views.front().cols();
  for (const auto& v : views)
    if (v.rows() != rows || v.cols() != d) throw ShapeError("fuse: view shapes differ");
  FusedEmbedding f;
  f.num_users = num_users;
  f.view_dim = static_cast<std::size_t>(d);
  f.matrix.resize(rows, d * static_cast<Eigen::Index>(views.size()));
  for (std::size_t c = 0; c < views.size(); ++c)
    f.matrix.middleCols(static_cast<Eigen::Index>(c) * d, d) = views[c];
  return f;
}

FusedEmbedding fuse(const std::vector<ViewEmbedding>& views, std::size_t num_users) {
  std::vector<Matrix> m;
  m.reserve(views.size());
  for (const auto& v : views) m.push_back(v.matrix);
  return fuse(m, num_users);
}

double user_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ShapeError("user_similarity: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DataError("user_similarity: zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double RatingPredictor::predict(const Eigen::VectorXd& feature) const {
  return std::clamp(raw(feature), kMinRating, kMaxRating);
}

Eigen::VectorXd pair_feature(const FusedEmbedding& fused, std::size_t user, std::size_t item) {
  const auto w = static_cast<Eigen::Index>(fused.width());
  Eigen::VectorXd x(2 * w);
  x.head(w) = fused.matrix.row(static_cast<Eigen::Index>(fused.user_row(user))).transpose();
  x.tail(w) = fused.matrix.row(static_cast<Eigen::Index>(fused.item_row(item))).transpose();
  return x;
}

RatingPredictor train_predictor(const FusedEmbedding& fused, const RatingDataset& train,
                                const PredictorConfig& cfg, std::uint64_t seed) {
  if (train.empty()) throw EmptyDatasetError("cannot train a predictor on no records");
  if (cfg.epochs < 1 || !(cfg.learning_rate > 0.0) || cfg.epsilon < 0.0 || cfg.regularization < 0.0)
    throw ConfigError("invalid predictor settings");

  const auto n = static_cast<Eigen::Index>(train.size());
  const auto p = static_cast<Eigen::Index>(2 * fused.width());
  Matrix x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& rec = train.records()[static_cast<std::size_t>(r)];
    x.row(r) = pair_feature(fused, rec.user, rec.item).transpose();
    y(r) = rec.overall;
  }

  // Standardized coordinates; constant columns get scale 0 and drop out.
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double sd = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(n));
    scale(j) = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  const Matrix z = centered * scale.asDiagonal();

  std::vector<double> sorted(y.data(), y.data() + n);
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  double b = sorted[static_cast<std::size_t>(n / 2)];
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd w_avg = Eigen::VectorXd::Zero(p);
  double b_avg = 0.0;
  long averaged = 0;

  Rng rng = make_rng(seed, stream::kPredictor);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const double shrink = cfg.regularization / static_cast<double>(n);
  long t = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index row : order) {
      ++t;
      // A standardized row has squared norm about p.
      const double eta = cfg.learning_rate / (static_cast<double>(p) *
                                              std::sqrt(1.0 + static_cast<double>(t) / static_cast<double>(n)));
      const double residual = y(row) - (z.row(row).dot(w) + b);
      w *= 1.0 - eta * shrink;
      if (std::abs(residual) > cfg.epsilon) {
        const double s = residual > 0.0 ? 1.0 : -1.0;
        w += (eta * s) * z.row(row).transpose();
        b += eta * s;
      }
      if (2 * epoch >= cfg.epochs) {
        ++averaged;
        w_avg += (w - w_avg) / static_cast<double>(averaged);
        b_avg += (b - b_avg) / static_cast<double>(averaged);
      }
    }
  }

  RatingPredictor out;
  out.epsilon = cfg.epsilon;
  out.regularization = cfg.regularization;
  out.weights = scale.cwiseProduct(w_avg);
  out.bias = b_avg - mean.dot(out.weights);
  return out;
}

double predict_rating(const RatingPredictor& predictor, const FusedEmbedding& fused,
                      std::size_t user, std::size_t item) {
  const Eigen::VectorXd x = pair_feature(fused, user, item);
  if (x.size() != predictor.weights.size())
    throw ShapeError("predict_rating: predictor width does not match the embedding");
  return predictor.predict(x);
}

std::vector<double> predict_records(const RatingPredictor& predictor, const FusedEmbedding& fused,
                                    const std::vector<RatingRecord>& records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(predict_rating(predictor, fused, r.user, r.item));
  return out;
}

std::vector<std::size_t> recommend_top_k(const RatingPredictor& predictor,
                                         const FusedEmbedding& fused, const RatingDataset& rated,
                                         std::size_t user, std::size_t k) {
  const std::size_t items = static_cast<std::size_t>(fused.matrix.rows()) - fused.num_users;
  std::vector<bool> seen(items, false);
  for (const auto& r : rated.records())
    if (r.user == user && r.item < items) seen[r.item] = true;

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < items; ++i)
    if (!seen[i]) scored.emplace_back(predict_rating(predictor, fused, user, i), i);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < scored.size() && j < k; ++j) out.push_back(scored[j].second);
  return out;
}

}  // namespace mcgraph
