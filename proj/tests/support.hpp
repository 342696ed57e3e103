#pragma once

#include <cstdint>
#include <random>
#include <vector>
#include <sstream>
#include <string>

#include "mcgraph/dataset.hpp"
#include "mcgraph/synthetic.hpp"

namespace testing {

inline mcgraph::RatingDataset parse(const std::string& csv) {
  std::istringstream in(csv);
  return mcgraph::load_ratings(in);
}

/// Small planted dataset; every user and item has at least one rating.
inline mcgraph::RatingDataset small_planted(std::size_t users, std::size_t items,
                                            std::size_t criteria, std::uint64_t seed,
                                            double density = 0.4, double noise = 0.2) {
  mcgraph::SyntheticConfig cfg;
  cfg.users = users;
  cfg.items = items;
  cfg.criteria = criteria;
  cfg.density = density;
  cfg.min_per_user = 2;
  cfg.noise = noise;
  return mcgraph::generate_planted(cfg, seed);
}

}  // namespace testing

#include <Eigen/Dense>

#include "mcgraph/graph.hpp"

namespace testing {

/// View over an explicit N x M incidence matrix.
inline mcgraph::CriterionView view_from(const Eigen::MatrixXd& b) {
  mcgraph::CriterionView v;
  v.num_users = static_cast<std::size_t>(b.rows());
  v.num_items = static_cast<std::size_t>(b.cols());
  v.incidence = b.sparseView();
  v.extended = mcgraph::extend_adjacency(v.incidence);
  v.degree = Eigen::MatrixXd(v.extended).rowwise().sum();
  v.normalized = mcgraph::normalize_adjacency(v.extended);
  return v;
}

/// Random incidence with entries in [1, 5] at the given density.
template <class Rng>
Eigen::MatrixXd random_incidence(Eigen::Index n, Eigen::Index m, double density, Rng& rng) {
  std::uniform_real_distribution<double> rating(1.0, 5.0);
  std::bernoulli_distribution edge(density);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (edge(rng)) b(i, j) = rating(rng);
  return b;
}

/// Same view with node i renumbered to perm[i]; the user/item split is kept
/// only as node counts.
inline mcgraph::CriterionView permuted(const mcgraph::CriterionView& v,
                                       const std::vector<Eigen::Index>& perm) {
  const Eigen::MatrixXd a(v.normalized);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) p(perm[i], perm[j]) = a(i, j);
  mcgraph::CriterionView out = v;
  out.normalized = p.sparseView();
  return out;
}

}  // namespace testing

#include "mcgraph/config.hpp"

namespace testing {

/// Small synthetic experiment that trains in well under a second per run.
inline mcgraph::ExperimentConfig fast_config() {
  mcgraph::ExperimentConfig c;
  c.runs = 2;
  c.synthetic.users = 20;
  c.synthetic.items = 12;
  c.synthetic.criteria = 2;
  c.synthetic.min_per_user = 3;
  c.synthetic.density = 0.4;
  c.encoder.feature_dim = 8;
  c.encoder.hidden_dim = 4;
  c.train.epochs = 5;
  c.predictor.epochs = 50;
  return c;
}

}  // namespace testing
