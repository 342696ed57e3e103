#include "mcgraph/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcgraph/error.hpp"
#include "mcgraph/random.hpp"

namespace mcgraph {

RatingDataset generate_planted(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.users == 0 || cfg.items == 0 || cfg.criteria == 0)
    throw ConfigError("synthetic dataset needs users, items and criteria");
  if (cfg.density <= 0.0 || cfg.density > 1.0) throw ConfigError("density must be in (0, 1]");
  Rng rng = make_rng(seed, stream::kSynthetic);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols, double sd) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = sd * unit(rng);
    return m;
  };

  const auto u = static_cast<Eigen::Index>(cfg.users), i = static_cast<Eigen::Index>(cfg.items);
  const auto r = static_cast<Eigen::Index>(cfg.rank);
  std::vector<Eigen::MatrixXd> score;
  for (std::size_t c = 0; c < cfg.criteria; ++c) {
    const Eigen::MatrixXd p = draw(u, r, cfg.factor_std), q = draw(i, r, cfg.factor_std);
    const Eigen::VectorXd bu = draw(u, 1, cfg.user_bias), bi = draw(i, 1, cfg.item_bias);
    Eigen::MatrixXd s = p * q.transpose();
    s.colwise() += bu;
    s.rowwise() += bi.transpose();
    score.push_back(s.array() + cfg.mean);
  }

  std::bernoulli_distribution keep(cfg.density);
  std::vector<std::vector<bool>> rated(cfg.users, std::vector<bool>(cfg.items, false));
  for (auto& row : rated)
    for (std::size_t it = 0; it < cfg.items; ++it) row[it] = keep(rng);
  std::vector<std::size_t> order(cfg.items);
  for (auto& row : rated) {
    std::size_t have = static_cast<std::size_t>(std::count(row.begin(), row.end(), true));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < cfg.items && have < std::min(cfg.min_per_user, cfg.items); ++k)
      if (!row[order[k]]) {
        row[order[k]] = true;
        ++have;
      }
  }
  // Every item gets at least one rating so the node set is exactly users + items.
  std::uniform_int_distribution<std::size_t> any_user(0, cfg.users - 1);
  for (std::size_t it = 0; it < cfg.items; ++it) {
    bool seen = false;
    for (const auto& row : rated) seen = seen || row[it];
    if (!seen) rated[any_user(rng)][it] = true;
  }

  std::vector<RatingRecord> records;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cfg.criteria; ++c) names.push_back("c" + std::to_string(c + 1));
  for (std::size_t uu = 0; uu < cfg.users; ++uu)
    for (std::size_t it = 0; it < cfg.items; ++it) {
      if (!rated[uu][it]) continue;
      RatingRecord rec;
      rec.user_id = "u" + std::to_string(uu);
      rec.item_id = "i" + std::to_string(it);
      double total = 0.0;
      for (std::size_t c = 0; c < cfg.criteria; ++c) {
        double v = score[c](static_cast<Eigen::Index>(uu), static_cast<Eigen::Index>(it));
        if (cfg.noise > 0.0) v += cfg.noise * unit(rng);
        v = std::clamp(v, 1.0, 5.0);
        rec.criteria.push_back(v);
        total += v;
      }
      rec.overall = total / static_cast<double>(cfg.criteria);
      records.push_back(std::move(rec));
    }
  return RatingDataset::from_records(std::move(records), std::move(names));
}

}  // namespace mcgraph
