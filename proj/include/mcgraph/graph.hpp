#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "mcgraph/dataset.hpp"

namespace mcgraph {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Bipartite user-item graph restricted to one rating criterion.
///
/// Node numbering: users occupy rows 0..N-1, items N..N+M-1.
struct CriterionView {
  std::size_t criterion = 0;  // 0-based column in the dataset
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  SparseMatrix incidence;   // N x M, entry = criterion rating, absent if unrated
  SparseMatrix extended;    // (N+M) x (N+M), [[0, B], [B^T, 0]]
  Eigen::VectorXd degree;   // weighted row sums of `extended`
  SparseMatrix normalized;  // (D^-1 B' + B' D^-1) / 2

  std::size_t num_nodes() const noexcept { return num_users + num_items; }
  /// Column indices of node `i`'s neighbours, ascending.
  std::vector<std::size_t> neighbors(std::size_t i) const;
};

/// One view per criterion, built from the ratings in `train`. Views are
/// independent and are constructed concurrently.
std::vector<CriterionView> build_views(const RatingDataset& train);
CriterionView build_view(const RatingDataset& train, std::size_t criterion);

Eigen::MatrixXd extend_adjacency(const Eigen::MatrixXd& incidence);
SparseMatrix extend_adjacency(const SparseMatrix& incidence);

/// Symmetric degree normalization; zero-degree rows and columns stay zero.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& adjacency);
SparseMatrix normalize_adjacency(const SparseMatrix& adjacency);

/// Writes `row col value` lines for every stored entry of the normalized matrix.
void dump_view(std::ostream& out, const CriterionView& view);
void dump_view(const std::filesystem::path& path, const CriterionView& view);

}  // namespace mcgraph
