#include "mcgraph/graph.hpp"

#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>

#include "mcgraph/error.hpp"

namespace mcgraph {

std::vector<std::size_t> CriterionView::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (SparseMatrix::InnerIterator it(normalized, static_cast<Eigen::Index>(i)); it; ++it) {
    if (it.value() != 0.0) out.push_back(static_cast<std::size_t>(it.col()));
  }
  return out;
}

Eigen::MatrixXd extend_adjacency(const Eigen::MatrixXd& incidence) {
  const Eigen::Index n = incidence.rows(), m = incidence.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + m, n + m);
  out.topRightCorner(n, m) = incidence;
  out.bottomLeftCorner(m, n) = incidence.transpose();
  return out;
}

SparseMatrix extend_adjacency(const SparseMatrix& incidence) {
  const Eigen::Index n = incidence.rows(), m = incidence.cols();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * static_cast<std::size_t>(incidence.nonZeros()));
  for (Eigen::Index r = 0; r < incidence.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(incidence, r); it; ++it) {
      triplets.emplace_back(it.row(), n + it.col(), it.value());
      triplets.emplace_back(n + it.col(), it.row(), it.value());
    }
  }
  SparseMatrix out(n + m, n + m);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

namespace {

template <typename Vec>
Eigen::VectorXd inverse_or_zero(const Vec& degree) {
  Eigen::VectorXd inv(degree.size());
  for (Eigen::Index i = 0; i < degree.size(); ++i) inv[i] = degree[i] != 0.0 ? 1.0 / degree[i] : 0.0;
  return inv;
}

}  // namespace

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("normalize_adjacency: matrix not square");
  const Eigen::VectorXd inv = inverse_or_zero(adjacency.rowwise().sum());
  return (inv.asDiagonal() * adjacency + adjacency * inv.asDiagonal()) / 2.0;
}

SparseMatrix normalize_adjacency(const SparseMatrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("normalize_adjacency: matrix not square");
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(adjacency.rows());
  for (Eigen::Index r = 0; r < adjacency.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(adjacency, r); it; ++it) degree[r] += it.value();
  const Eigen::VectorXd inv = inverse_or_zero(degree);

  SparseMatrix out = adjacency;
  for (Eigen::Index r = 0; r < out.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(out, r); it; ++it)
      it.valueRef() = (inv[r] * it.value() + it.value() * inv[it.col()]) / 2.0;
  return out;
}

CriterionView build_view(const RatingDataset& train, std::size_t criterion) {
  if (criterion >= train.num_criteria())
    throw ConfigError("criterion index " + std::to_string(criterion) + " out of range");
  CriterionView view;
  view.criterion = criterion;
  view.num_users = train.num_users();
  view.num_items = train.num_items();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(train.size());
  for (const auto& r : train.records()) {
    const double w = r.criteria[criterion];
    if (w != 0.0)
      triplets.emplace_back(static_cast<Eigen::Index>(r.user), static_cast<Eigen::Index>(r.item), w);
  }
  view.incidence.resize(static_cast<Eigen::Index>(view.num_users),
                        static_cast<Eigen::Index>(view.num_items));
  view.incidence.setFromTriplets(triplets.begin(), triplets.end());

  view.extended = extend_adjacency(view.incidence);
  view.degree = Eigen::VectorXd::Zero(view.extended.rows());
  for (Eigen::Index r = 0; r < view.extended.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(view.extended, r); it; ++it) view.degree[r] += it.value();
  view.normalized = normalize_adjacency(view.extended);
  return view;
}

std::vector<CriterionView> build_views(const RatingDataset& train) {
  if (train.empty()) throw EmptyDatasetError("cannot build views from an empty training set");
  std::vector<std::future<CriterionView>> pending;
  for (std::size_t c = 0; c < train.num_criteria(); ++c)
    pending.push_back(std::async(std::launch::async, [&train, c] { return build_view(train, c); }));
  std::vector<CriterionView> views;
  views.reserve(pending.size());
  for (auto& f : pending) views.push_back(f.get());
  return views;
}

void dump_view(std::ostream& out, const CriterionView& view) {
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < view.normalized.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(view.normalized, r); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

void dump_view(const std::filesystem::path& path, const CriterionView& view) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  dump_view(out, view);
}

}  // namespace mcgraph
