#pragma once

// Reverse-mode differentiation over dense double matrices.
//
// A Graph records operations lazily: building an expression only wires nodes
// together, forward(root) evaluates the root's ancestors in creation order
// (which is a topological order), and backward(root) accumulates gradients
// into every node reachable from the root. Leaves not on any path to the root
// keep a zero gradient.

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace mcgraph::ad {

using Matrix = Eigen::MatrixXd;

/// Row-compressed sparsity pattern; edge k of row i lives at
/// row_ptr[i] <= k < row_ptr[i+1] and points at column col[k].
struct SparsePattern {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<Eigen::Index> row_ptr{0};
  std::vector<Eigen::Index> col;

  Eigen::Index edges() const noexcept { return static_cast<Eigen::Index>(col.size()); }
  /// Pattern of the explicitly stored nonzero entries of `m`.
  static SparsePattern from(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m);
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  std::size_t id() const noexcept { return id_; }
  Graph* graph() const noexcept { return graph_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

using Inputs = std::vector<const Matrix*>;
using ForwardFn = std::function<Matrix(const Inputs& in)>;
/// Adds the contribution of `grad_out` to each `grad_in[k]` (never assigns).
using BackwardFn = std::function<void(const Matrix& grad_out, const Matrix& out, const Inputs& in,
                                      const std::vector<Matrix*>& grad_in)>;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf node. Every leaf receives a gradient on backward.
  Var leaf(Matrix value, std::string name = "leaf");
  /// Replaces a leaf's value; invalidates the last forward pass.
  void set_value(Var leaf, Matrix value);
  /// Mutable access to a leaf's value; invalidates the last forward pass.
  Matrix& mutable_value(Var leaf);

  /// Registers an operation node. Used by the free-function primitives below.
  Var op(std::string_view name, std::vector<Var> inputs, ForwardFn forward, BackwardFn backward);

  const Matrix& forward(Var root);
  /// Requires a preceding forward(root) and a 1x1 root. A second backward
  /// without a new forward pass is an error.
  void backward(Var root);

  const Matrix& value(Var v) const;
  const Matrix& grad(Var v) const;
  std::string_view name(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::string name;
    std::vector<std::size_t> parents;
    ForwardFn forward;
    BackwardFn backward;
    Matrix value;
    Matrix grad;
    bool is_leaf = false;
    bool evaluated = false;
  };

  std::size_t check(Var v) const;
  void invalidate();

  std::vector<Node> nodes_;
  bool forward_valid_ = false;
  bool backward_done_ = false;
  bool has_grads_ = false;
  std::size_t forward_root_ = 0;
};

// Primitives. Shape mismatches raise ShapeError naming the operation.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // element-wise
Var scale(Var a, double factor);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var gather_rows(Var a, std::vector<Eigen::Index> rows);

Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var elu(Var a);
Var exp(Var a);
Var log(Var a);

Var sum(Var a);      // 1x1
Var mean(Var a);     // 1x1
Var sq_norm(Var a);  // 1x1, sum of squared entries
Var l2_norm(Var a);  // 1x1
Var row_sum(Var a);  // rows x 1
Var col_mean(Var a); // 1 x cols

/// Cosine similarity of corresponding rows; a zero row yields 0.
Var row_cosine(Var a, Var b);
/// Multiplies row i of `a` by s(i); `s` is rows x 1.
Var row_scale(Var a, Var s);
/// Softmax over all entries of a column vector.
Var softmax(Var a);

/// e_k = src(row_k) + dst(col_k) for every edge k of `pattern`; src and dst
/// are column vectors over the row and column nodes.
Var edge_scores(Var src, Var dst, std::shared_ptr<const SparsePattern> pattern);
/// Softmax over each row's edge set (the masked index set of that row).
Var segment_softmax(Var scores, std::shared_ptr<const SparsePattern> pattern);
/// out(i,:) = sum over edges k of row i of coeff(k) * values(col_k, :).
Var spmm(Var coeffs, std::shared_ptr<const SparsePattern> pattern, Var values);

// ---------------------------------------------------------------------------
// Gradient verification against central finite differences.

struct ParamBlock {
  std::string name;
  Matrix* value = nullptr;  // perturbed in place, restored afterwards
  Matrix analytic;          // gradient under test
};

struct BlockCheck {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = true;
};

struct FiniteDiffReport {
  std::vector<BlockCheck> blocks;
  bool passed() const;
  /// Names of failing blocks, comma separated.
  std::string failures() const;
};

/// Relative error per entry is |a - n| / max(|a|, |n|, abs_floor).
FiniteDiffReport finite_diff_check(const std::function<double()>& loss,
                                   std::vector<ParamBlock>& blocks, double step, double tolerance,
                                   double abs_floor = 1e-6);

/// Runs forward/backward on `root` and checks the listed leaves.
FiniteDiffReport finite_diff_check(Graph& graph, Var root,
                                   const std::vector<std::pair<std::string, Var>>& params,
                                   double step, double tolerance, double abs_floor = 1e-6);

}  // namespace mcgraph::ad
