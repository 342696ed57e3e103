#pragma once

#include <cstddef>
#include <cstdint>

#include "mcgraph/dataset.hpp"

namespace mcgraph {

/// Planted low-rank multi-criteria ratings. Criterion c of (u, i) is
/// mean + b_u^c + b_i^c + <p_u^c, q_i^c> + noise, clipped to [1, 5]; the
/// overall rating is the mean of the criteria.
struct SyntheticConfig {
  std::size_t users = 50;
  std::size_t items = 30;
  std::size_t criteria = 3;
  std::size_t rank = 2;
  double density = 1.0 / 3.0;  // probability that a (user, item) pair is rated
  std::size_t min_per_user = 4;
  double mean = 3.0;
  double user_bias = 0.6;     // std of b_u^c
  double item_bias = 0.6;     // std of b_i^c
  double factor_std = 0.6;    // std of each coordinate of p and q
  double noise = 0.2;         // std of the per-criterion noise; 0 gives exact ratings
};

RatingDataset generate_planted(const SyntheticConfig& cfg, std::uint64_t seed);

}  // namespace mcgraph
