#include "mcgraph/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mcgraph/error.hpp"
#include "mcgraph/recommend.hpp"

namespace mcgraph {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

using Profile = std::vector<std::pair<std::size_t, double>>;  // (item, rating), by item

std::vector<Profile> profiles(const RatingDataset& train, int criterion) {
  std::vector<Profile> out(train.num_users());
  for (const auto& r : train.records()) {
    const double v = criterion < 0 ? r.overall : r.criteria.at(static_cast<std::size_t>(criterion));
    out[r.user].emplace_back(r.item, v);
  }
  for (auto& p : out) std::sort(p.begin(), p.end());
  return out;
}

}  // namespace

Eigen::MatrixXd user_similarity_matrix(const RatingDataset& train, int criterion) {
  if (criterion >= static_cast<int>(train.num_criteria()))
    throw ConfigError("criterion " + std::to_string(criterion) + " out of range");
  const auto prof = profiles(train, criterion);
  const auto n = static_cast<Eigen::Index>(prof.size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> a, b;
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = u + 1; v < n; ++v) {
      a.clear();
      b.clear();
      const auto& pu = prof[static_cast<std::size_t>(u)];
      const auto& pv = prof[static_cast<std::size_t>(v)];
      for (std::size_t i = 0, j = 0; i < pu.size() && j < pv.size();) {
        if (pu[i].first < pv[j].first) {
          ++i;
        } else if (pv[j].first < pu[i].first) {
          ++j;
        } else {
          a.push_back(pu[i++].second);
          b.push_back(pv[j++].second);
        }
      }
      s(u, v) = s(v, u) = pearson(a, b);
    }
  return s;
}

Eigen::MatrixXd multi_criteria_similarity(const RatingDataset& train) {
  const std::size_t c = train.num_criteria();
  if (c == 0) throw DataError("multi-criteria similarity needs criteria ratings");
  Eigen::MatrixXd s = user_similarity_matrix(train, 0);
  for (std::size_t k = 1; k < c; ++k) s += user_similarity_matrix(train, static_cast<int>(k));
  return s / static_cast<double>(c);
}

std::vector<double> knn_predict(const RatingDataset& train, const Eigen::MatrixXd& similarity,
                                const std::vector<RatingRecord>& queries, std::size_t k) {
  const std::size_t users = train.num_users(), items = train.num_items();
  std::vector<std::vector<std::pair<std::size_t, double>>> raters(items);  // item -> (user, rating)
  std::vector<double> user_sum(users, 0.0);
  std::vector<std::size_t> user_count(users, 0);
  double global = 0.0;
  for (const auto& r : train.records()) {
    raters[r.item].emplace_back(r.user, r.overall);
    user_sum[r.user] += r.overall;
    ++user_count[r.user];
    global += r.overall;
  }
  if (train.empty()) throw EmptyDatasetError("knn baseline needs training ratings");
  global /= static_cast<double>(train.size());

  std::vector<double> out;
  out.reserve(queries.size());
  std::vector<std::pair<double, std::size_t>> cand;
  std::vector<double> rating_of(users, 0.0);
  for (const auto& q : queries) {
    cand.clear();
    if (q.item < items && q.user < users) {
      for (const auto& [v, rating] : raters[q.item]) {
        const double s = similarity(static_cast<Eigen::Index>(q.user), static_cast<Eigen::Index>(v));
        if (v == q.user || !(s > 0.0)) continue;
        cand.emplace_back(s, v);
        rating_of[v] = rating;
      }
    }
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (cand.size() > k) cand.resize(k);

    double pred;
    if (!cand.empty()) {
      double num = 0.0, den = 0.0;
      for (const auto& [s, v] : cand) {
        num += s * rating_of[v];
        den += s;
      }
      pred = num / den;
    } else if (q.user < users && user_count[q.user] > 0) {
      pred = user_sum[q.user] / static_cast<double>(user_count[q.user]);
    } else {
      pred = global;
    }
    out.push_back(std::clamp(pred, kMinRating, kMaxRating));
  }
  return out;
}

std::vector<double> baseline_user_knn(const RatingDataset& train, const RatingDataset& test,
                                      std::size_t k_neighbors) {
  return knn_predict(train, user_similarity_matrix(train), test.records(), k_neighbors);
}

std::vector<double> baseline_multi_user_knn(const RatingDataset& train, const RatingDataset& test,
                                            std::size_t k_neighbors) {
  return knn_predict(train, multi_criteria_similarity(train), test.records(), k_neighbors);
}

double MlrModel::predict(const RatingRecord& record) const {
  const auto c = coefficients.size() - 1;
  if (static_cast<Eigen::Index>(record.criteria.size()) != c)
    throw ShapeError("mlr: record has the wrong number of criteria");
  double v = coefficients(0);
  for (Eigen::Index k = 0; k < c; ++k) v += coefficients(k + 1) * record.criteria[static_cast<std::size_t>(k)];
  return std::clamp(v, kMinRating, kMaxRating);
}

MlrModel fit_mlr(const RatingDataset& train) {
  const auto c = static_cast<Eigen::Index>(train.num_criteria());
  const auto n = static_cast<Eigen::Index>(train.size());
  if (n < c + 1)
    throw DataError("mlr needs at least " + std::to_string(c + 1) + " training records");
  Eigen::MatrixXd x(n, c + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& rec = train.records()[static_cast<std::size_t>(r)];
    x(r, 0) = 1.0;
    for (Eigen::Index k = 0; k < c; ++k) x(r, k + 1) = rec.criteria[static_cast<std::size_t>(k)];
    y(r) = rec.overall;
  }
  MlrModel m;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() == c + 1) {
    m.coefficients = qr.solve(y);
  } else {
    m.ridge = true;
    const Eigen::MatrixXd gram =
        x.transpose() * x + kRidgeFallback * Eigen::MatrixXd::Identity(c + 1, c + 1);
    m.coefficients = gram.ldlt().solve(x.transpose() * y);
  }
  return m;
}

std::vector<double> baseline_mlr(const RatingDataset& train, const RatingDataset& test) {
  const MlrModel m = fit_mlr(train);
  std::vector<double> out;
  out.reserve(test.size());
  for (const auto& r : test.records()) out.push_back(m.predict(r));
  return out;
}

}  // namespace mcgraph
