#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mcgraph/attention.hpp"
#include "mcgraph/dataset.hpp"

namespace mcgraph {

/// Per-node concatenation of the view embeddings, in criterion order.
struct FusedEmbedding {
  Matrix matrix;  // (N+M) x C*d
  std::size_t num_users = 0;
  std::size_t view_dim = 0;

  std::size_t width() const noexcept { return static_cast<std::size_t>(matrix.cols()); }
  std::size_t user_row(std::size_t user) const;
  std::size_t item_row(std::size_t item) const;
};

FusedEmbedding fuse(const std::vector<Matrix>& views, std::size_t num_users);
FusedEmbedding fuse(const std::vector<ViewEmbedding>& views, std::size_t num_users);

/// Cosine similarity; throws DataError for a zero vector.
double user_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct PredictorConfig {
  double epsilon = 0.1;
  double regularization = 1.0;  // weight of 0.5 * |w|^2 against the summed insensitive loss
  int epochs = 300;
  double learning_rate = 1.0;
};

/// Linear epsilon-insensitive regressor on [F_user | F_item].
struct RatingPredictor {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double epsilon = 0.1;
  double regularization = 1.0;

  double raw(const Eigen::VectorXd& feature) const { return weights.dot(feature) + bias; }
  double predict(const Eigen::VectorXd& feature) const;
};

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

Eigen::VectorXd pair_feature(const FusedEmbedding& fused, std::size_t user, std::size_t item);

/// Seeded stochastic subgradient descent on standardized features with
/// iterate averaging; the result is expressed on raw features.
RatingPredictor train_predictor(const FusedEmbedding& fused, const RatingDataset& train,
                                const PredictorConfig& cfg, std::uint64_t seed);

double predict_rating(const RatingPredictor& predictor, const FusedEmbedding& fused,
                      std::size_t user, std::size_t item);

/// Predictions aligned with `records`.
std::vector<double> predict_records(const RatingPredictor& predictor, const FusedEmbedding& fused,
                                    const std::vector<RatingRecord>& records);

/// Items `user` has not rated in `rated`, best predicted first, lower index on ties.
std::vector<std::size_t> recommend_top_k(const RatingPredictor& predictor,
                                         const FusedEmbedding& fused, const RatingDataset& rated,
                                         std::size_t user, std::size_t k);

}  // namespace mcgraph
