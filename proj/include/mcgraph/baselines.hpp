#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mcgraph/dataset.hpp"

namespace mcgraph {

inline constexpr std::size_t kDefaultNeighbors = 100;

/// Pearson correlation over co-rated items. Fewer than two co-rated items or
/// zero variance on either side gives 0.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// User x user similarity from overall ratings (`criterion` < 0) or from one
/// criterion column.
Eigen::MatrixXd user_similarity_matrix(const RatingDataset& train, int criterion = -1);

/// Mean of the per-criterion similarity matrices.
Eigen::MatrixXd multi_criteria_similarity(const RatingDataset& train);

/// Weighted mean of the overall ratings the top-k positively similar users
/// gave the item; falls back to the user mean, then the global mean.
std::vector<double> knn_predict(const RatingDataset& train, const Eigen::MatrixXd& similarity,
                                const std::vector<RatingRecord>& queries, std::size_t k);

std::vector<double> baseline_user_knn(const RatingDataset& train, const RatingDataset& test,
                                      std::size_t k_neighbors = kDefaultNeighbors);

std::vector<double> baseline_multi_user_knn(const RatingDataset& train, const RatingDataset& test,
                                            std::size_t k_neighbors = kDefaultNeighbors);

struct MlrModel {
  Eigen::VectorXd coefficients;  // intercept first, then one per criterion
  bool ridge = false;            // true when the design was rank deficient

  double predict(const RatingRecord& record) const;  // clamped to [1, 5]
};

inline constexpr double kRidgeFallback = 1e-6;

MlrModel fit_mlr(const RatingDataset& train);

std::vector<double> baseline_mlr(const RatingDataset& train, const RatingDataset& test);

}  // namespace mcgraph
