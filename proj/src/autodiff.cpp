#include "mcgraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcgraph/error.hpp"

namespace mcgraph::ad {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// The detail message is only built on failure.
#define REQUIRE_SHAPE(ok, op, detail)                                    \
  do {                                                                   \
    if (!(ok)) throw ShapeError(std::string(op) + ": " + (detail));      \
  } while (0)

void require_same(std::string_view op, const Matrix& a, const Matrix& b) {
  REQUIRE_SHAPE(a.rows() == b.rows() && a.cols() == b.cols(), op,
          "operand shapes " + shape(a) + " and " + shape(b) + " differ");
}

Graph& owner(Var a) {
  if (!a.valid()) throw Error("operation on a default-constructed Var");
  return *a.graph();
}

Graph& owner(Var a, Var b) {
  Graph& g = owner(a);
  if (b.graph() != &g) throw Error("operands belong to different graphs");
  return g;
}

}  // namespace

SparsePattern SparsePattern::from(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m) {
  SparsePattern p;
  p.rows = m.rows();
  p.cols = m.cols();
  p.row_ptr.assign(1, 0);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, r); it; ++it)
      if (it.value() != 0.0) p.col.push_back(it.col());
    p.row_ptr.push_back(static_cast<Eigen::Index>(p.col.size()));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Graph

std::size_t Graph::check(Var v) const {
  if (v.graph_ != this || v.id_ >= nodes_.size()) throw Error("Var does not belong to this graph");
  return v.id_;
}

void Graph::invalidate() {
  forward_valid_ = false;
  backward_done_ = false;
  has_grads_ = false;
}

Var Graph::leaf(Matrix value, std::string name) {
  Node n;
  n.name = std::move(name);
  n.value = std::move(value);
  n.is_leaf = true;
  n.evaluated = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Graph::set_value(Var leaf, Matrix value) { mutable_value(leaf) = std::move(value); }

Matrix& Graph::mutable_value(Var leaf) {
  auto& n = nodes_[check(leaf)];
  if (!n.is_leaf) throw Error("set_value on non-leaf node '" + n.name + "'");
  invalidate();
  return n.value;
}

Var Graph::op(std::string_view name, std::vector<Var> inputs, ForwardFn forward,
              BackwardFn backward) {
  Node n;
  n.name = std::string(name);
  for (Var v : inputs) n.parents.push_back(check(v));
  n.forward = std::move(forward);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  invalidate();
  return Var(this, nodes_.size() - 1);
}

const Matrix& Graph::forward(Var root) {
  const std::size_t r = check(root);
  std::vector<char> needed(r + 1, 0);
  needed[r] = 1;
  for (std::size_t i = r + 1; i-- > 0;) {
    if (!needed[i]) continue;
    for (std::size_t p : nodes_[i].parents) needed[p] = 1;
  }
  for (auto& n : nodes_)
    if (!n.is_leaf) n.evaluated = false;
  Inputs in;
  for (std::size_t i = 0; i <= r; ++i) {
    Node& n = nodes_[i];
    if (!needed[i] || n.is_leaf) continue;
    in.clear();
    for (std::size_t p : n.parents) in.push_back(&nodes_[p].value);
    n.value = n.forward(in);
    n.evaluated = true;
  }
  forward_valid_ = true;
  backward_done_ = false;
  has_grads_ = false;
  forward_root_ = r;
  return nodes_[r].value;
}

void Graph::backward(Var root) {
  const std::size_t r = check(root);
  if (!forward_valid_ || forward_root_ != r) throw Error("backward called before forward");
  if (backward_done_) throw Error("double backward is not supported; run forward again");
  const Matrix& out = nodes_[r].value;
  if (out.rows() != 1 || out.cols() != 1)
    throw ShapeError("backward: root must be 1x1, got " + shape(out));

  for (auto& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[r].grad(0, 0) = 1.0;

  Inputs in;
  std::vector<Matrix*> grad_in;
  for (std::size_t i = r + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.is_leaf || !n.evaluated) continue;
    if (!n.grad.any()) continue;  // nothing flows through this node
    in.clear();
    grad_in.clear();
    for (std::size_t p : n.parents) {
      in.push_back(&nodes_[p].value);
      grad_in.push_back(&nodes_[p].grad);
    }
    n.backward(n.grad, n.value, in, grad_in);
  }
  backward_done_ = true;
  has_grads_ = true;
}

const Matrix& Graph::value(Var v) const {
  const auto& n = nodes_[check(v)];
  if (!n.evaluated) throw Error("value of '" + n.name + "' requested before forward");
  return n.value;
}

const Matrix& Graph::grad(Var v) const {
  const auto& n = nodes_[check(v)];
  if (!has_grads_) throw Error("gradient of '" + n.name + "' requested before backward");
  return n.grad;
}

std::string_view Graph::name(Var v) const { return nodes_[check(v)].name; }

// ---------------------------------------------------------------------------
// Primitives

Var matmul(Var a, Var b) {
  return owner(a, b).op(
      "matmul", {a, b},
      [](const Inputs& in) {
        REQUIRE_SHAPE(in[0]->cols() == in[1]->rows(), "matmul",
                "inner dimensions of " + shape(*in[0]) + " and " + shape(*in[1]) + " differ");
        return Matrix(*in[0] * *in[1]);
      },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        gi[0]->noalias() += g * in[1]->transpose();
        gi[1]->noalias() += in[0]->transpose() * g;
      });
}

Var add(Var a, Var b) {
  return owner(a, b).op(
      "add", {a, b},
      [](const Inputs& in) {
        require_same("add", *in[0], *in[1]);
        return Matrix(*in[0] + *in[1]);
      },
      [](const Matrix& g, const Matrix&, const Inputs&, const std::vector<Matrix*>& gi) {
        *gi[0] += g;
        *gi[1] += g;
      });
}

Var sub(Var a, Var b) {
  return owner(a, b).op(
      "sub", {a, b},
      [](const Inputs& in) {
        require_same("sub", *in[0], *in[1]);
        return Matrix(*in[0] - *in[1]);
      },
      [](const Matrix& g, const Matrix&, const Inputs&, const std::vector<Matrix*>& gi) {
        *gi[0] += g;
        *gi[1] -= g;
      });
}

Var mul(Var a, Var b) {
  return owner(a, b).op(
      "mul", {a, b},
      [](const Inputs& in) {
        require_same("mul", *in[0], *in[1]);
        return Matrix(in[0]->cwiseProduct(*in[1]));
      },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        *gi[0] += g.cwiseProduct(*in[1]);
        *gi[1] += g.cwiseProduct(*in[0]);
      });
}

Var scale(Var a, double factor) {
  return owner(a).op(
      "scale", {a}, [factor](const Inputs& in) { return Matrix(*in[0] * factor); },
      [factor](const Matrix& g, const Matrix&, const Inputs&, const std::vector<Matrix*>& gi) {
        *gi[0] += g * factor;
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Graph& g = owner(parts.front());
  for (Var p : parts) owner(parts.front(), p);
  return g.op(
      "concat_cols", parts,
      [](const Inputs& in) {
        Eigen::Index cols = 0;
        for (const Matrix* m : in) {
          REQUIRE_SHAPE(m->rows() == in[0]->rows(), "concat_cols",
                  "row counts " + shape(*in[0]) + " and " + shape(*m) + " differ");
          cols += m->cols();
        }
        Matrix out(in[0]->rows(), cols);
        Eigen::Index at = 0;
        for (const Matrix* m : in) {
          out.middleCols(at, m->cols()) = *m;
          at += m->cols();
        }
        return out;
      },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        Eigen::Index at = 0;
        for (std::size_t k = 0; k < in.size(); ++k) {
          *gi[k] += g.middleCols(at, in[k]->cols());
          at += in[k]->cols();
        }
      });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  return owner(a).op(
      "slice_rows", {a},
      [begin, count](const Inputs& in) {
        REQUIRE_SHAPE(begin >= 0 && count >= 0 && begin + count <= in[0]->rows(), "slice_rows",
                "range out of bounds for " + shape(*in[0]));
        return Matrix(in[0]->middleRows(begin, count));
      },
      [begin, count](const Matrix& g, const Matrix&, const Inputs&,
                     const std::vector<Matrix*>& gi) { gi[0]->middleRows(begin, count) += g; });
}

Var gather_rows(Var a, std::vector<Eigen::Index> rows) {
  auto idx = std::make_shared<const std::vector<Eigen::Index>>(std::move(rows));
  return owner(a).op(
      "gather_rows", {a},
      [idx](const Inputs& in) {
        Matrix out(static_cast<Eigen::Index>(idx->size()), in[0]->cols());
        for (std::size_t k = 0; k < idx->size(); ++k) {
          const Eigen::Index r = (*idx)[k];
          REQUIRE_SHAPE(r >= 0 && r < in[0]->rows(), "gather_rows",
                  "row " + std::to_string(r) + " outside " + shape(*in[0]));
          out.row(static_cast<Eigen::Index>(k)) = in[0]->row(r);
        }
        return out;
      },
      [idx](const Matrix& g, const Matrix&, const Inputs&, const std::vector<Matrix*>& gi) {
        for (std::size_t k = 0; k < idx->size(); ++k)
          gi[0]->row((*idx)[k]) += g.row(static_cast<Eigen::Index>(k));
      });
}

Var relu(Var a) {
  return owner(a).op(
      "relu", {a}, [](const Inputs& in) { return Matrix(in[0]->cwiseMax(0.0)); },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        *gi[0] += (in[0]->array() > 0.0).select(g, 0.0);
      });
}

Var leaky_relu(Var a, double slope) {
  return owner(a).op(
      "leaky_relu", {a},
      [slope](const Inputs& in) {
        return Matrix((in[0]->array() > 0.0).select(*in[0], slope * in[0]->array()));
      },
      [slope](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        *gi[0] += (in[0]->array() > 0.0).select(g, slope * g.array()).matrix();
      });
}

Var elu(Var a) {
  return owner(a).op(
      "elu", {a},
      [](const Inputs& in) {
        return Matrix((in[0]->array() > 0.0).select(*in[0], in[0]->array().exp() - 1.0));
      },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        *gi[0] += (in[0]->array() > 0.0).select(g, g.array() * in[0]->array().exp()).matrix();
      });
}

Var exp(Var a) {
  return owner(a).op(
      "exp", {a}, [](const Inputs& in) { return Matrix(in[0]->array().exp()); },
      [](const Matrix& g, const Matrix& out, const Inputs&, const std::vector<Matrix*>& gi) {
        *gi[0] += g.cwiseProduct(out);
      });
}

Var log(Var a) {
  return owner(a).op(
      "log", {a}, [](const Inputs& in) { return Matrix(in[0]->array().log()); },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        *gi[0] += g.cwiseQuotient(*in[0]);
      });
}

Var sum(Var a) {
  return owner(a).op(
      "sum", {a}, [](const Inputs& in) { return Matrix::Constant(1, 1, in[0]->sum()); },
      [](const Matrix& g, const Matrix&, const Inputs&, const std::vector<Matrix*>& gi) {
        gi[0]->array() += g(0, 0);
      });
}

Var mean(Var a) {
  return owner(a).op(
      "mean", {a},
      [](const Inputs& in) {
        REQUIRE_SHAPE(in[0]->size() > 0, "mean", "empty operand");
        return Matrix::Constant(1, 1, in[0]->mean());
      },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        gi[0]->array() += g(0, 0) / static_cast<double>(in[0]->size());
      });
}

Var sq_norm(Var a) {
  return owner(a).op(
      "sq_norm", {a}, [](const Inputs& in) { return Matrix::Constant(1, 1, in[0]->squaredNorm()); },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        *gi[0] += 2.0 * g(0, 0) * *in[0];
      });
}

Var l2_norm(Var a) {
  return owner(a).op(
      "l2_norm", {a}, [](const Inputs& in) { return Matrix::Constant(1, 1, in[0]->norm()); },
      [](const Matrix& g, const Matrix& out, const Inputs& in, const std::vector<Matrix*>& gi) {
        if (out(0, 0) > 0.0) *gi[0] += (g(0, 0) / out(0, 0)) * *in[0];
      });
}

Var row_sum(Var a) {
  return owner(a).op(
      "row_sum", {a}, [](const Inputs& in) { return Matrix(in[0]->rowwise().sum()); },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        gi[0]->colwise() += g.col(0);
        (void)in;
      });
}

Var col_mean(Var a) {
  return owner(a).op(
      "col_mean", {a},
      [](const Inputs& in) {
        REQUIRE_SHAPE(in[0]->rows() > 0, "col_mean", "operand has no rows");
        return Matrix(in[0]->colwise().mean());
      },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        gi[0]->rowwise() += g.row(0) / static_cast<double>(in[0]->rows());
      });
}

Var row_cosine(Var a, Var b) {
  return owner(a, b).op(
      "row_cosine", {a, b},
      [](const Inputs& in) {
        require_same("row_cosine", *in[0], *in[1]);
        Matrix out(in[0]->rows(), 1);
        for (Eigen::Index r = 0; r < in[0]->rows(); ++r) {
          const double na = in[0]->row(r).norm(), nb = in[1]->row(r).norm();
          out(r, 0) = (na > 0.0 && nb > 0.0) ? in[0]->row(r).dot(in[1]->row(r)) / (na * nb) : 0.0;
        }
        return out;
      },
      [](const Matrix& g, const Matrix& out, const Inputs& in, const std::vector<Matrix*>& gi) {
        for (Eigen::Index r = 0; r < in[0]->rows(); ++r) {
          const auto ra = in[0]->row(r);
          const auto rb = in[1]->row(r);
          const double na = ra.norm(), nb = rb.norm();
          if (na == 0.0 || nb == 0.0) continue;
          const double c = out(r, 0), gr = g(r, 0);
          gi[0]->row(r) += gr * (rb / (na * nb) - c * ra / (na * na));
          gi[1]->row(r) += gr * (ra / (na * nb) - c * rb / (nb * nb));
        }
      });
}

Var row_scale(Var a, Var s) {
  return owner(a, s).op(
      "row_scale", {a, s},
      [](const Inputs& in) {
        REQUIRE_SHAPE(in[1]->cols() == 1 && in[1]->rows() == in[0]->rows(), "row_scale",
                "scale " + shape(*in[1]) + " does not match " + shape(*in[0]));
        return Matrix(in[1]->col(0).asDiagonal() * *in[0]);
      },
      [](const Matrix& g, const Matrix&, const Inputs& in, const std::vector<Matrix*>& gi) {
        *gi[0] += in[1]->col(0).asDiagonal() * g;
        gi[1]->col(0) += g.cwiseProduct(*in[0]).rowwise().sum();
      });
}

Var softmax(Var a) {
  return owner(a).op(
      "softmax", {a},
      [](const Inputs& in) {
        REQUIRE_SHAPE(in[0]->cols() == 1 && in[0]->rows() > 0, "softmax",
                "expects a non-empty column vector, got " + shape(*in[0]));
        const double top = in[0]->maxCoeff();
        Matrix out = (in[0]->array() - top).exp();
        out /= out.sum();
        return out;
      },
      [](const Matrix& g, const Matrix& y, const Inputs&, const std::vector<Matrix*>& gi) {
        const double dot = g.col(0).dot(y.col(0));
        gi[0]->array() += y.array() * (g.array() - dot);
      });
}

Var edge_scores(Var src, Var dst, std::shared_ptr<const SparsePattern> pattern) {
  return owner(src, dst).op(
      "edge_scores", {src, dst},
      [pattern](const Inputs& in) {
        REQUIRE_SHAPE(in[0]->cols() == 1 && in[0]->rows() == pattern->rows, "edge_scores",
                "source scores " + shape(*in[0]) + " do not match pattern rows");
        REQUIRE_SHAPE(in[1]->cols() == 1 && in[1]->rows() == pattern->cols, "edge_scores",
                "target scores " + shape(*in[1]) + " do not match pattern cols");
        Matrix out(pattern->edges(), 1);
        for (Eigen::Index i = 0; i < pattern->rows; ++i)
          for (Eigen::Index k = pattern->row_ptr[i]; k < pattern->row_ptr[i + 1]; ++k)
            out(k, 0) = (*in[0])(i, 0) + (*in[1])(pattern->col[k], 0);
        return out;
      },
      [pattern](const Matrix& g, const Matrix&, const Inputs&, const std::vector<Matrix*>& gi) {
        for (Eigen::Index i = 0; i < pattern->rows; ++i)
          for (Eigen::Index k = pattern->row_ptr[i]; k < pattern->row_ptr[i + 1]; ++k) {
            (*gi[0])(i, 0) += g(k, 0);
            (*gi[1])(pattern->col[k], 0) += g(k, 0);
          }
      });
}

Var segment_softmax(Var scores, std::shared_ptr<const SparsePattern> pattern) {
  return owner(scores).op(
      "segment_softmax", {scores},
      [pattern](const Inputs& in) {
        REQUIRE_SHAPE(in[0]->cols() == 1 && in[0]->rows() == pattern->edges(), "segment_softmax",
                "scores " + shape(*in[0]) + " do not match " + std::to_string(pattern->edges()) +
                    " edges");
        Matrix out(in[0]->rows(), 1);
        for (Eigen::Index i = 0; i < pattern->rows; ++i) {
          const Eigen::Index b = pattern->row_ptr[i], e = pattern->row_ptr[i + 1];
          if (b == e) continue;
          const double top = in[0]->col(0).segment(b, e - b).maxCoeff();
          double total = 0.0;
          for (Eigen::Index k = b; k < e; ++k) total += out(k, 0) = std::exp((*in[0])(k, 0) - top);
          for (Eigen::Index k = b; k < e; ++k) out(k, 0) /= total;
        }
        return out;
      },
      [pattern](const Matrix& g, const Matrix& y, const Inputs&, const std::vector<Matrix*>& gi) {
        for (Eigen::Index i = 0; i < pattern->rows; ++i) {
          const Eigen::Index b = pattern->row_ptr[i], e = pattern->row_ptr[i + 1];
          double dot = 0.0;
          for (Eigen::Index k = b; k < e; ++k) dot += g(k, 0) * y(k, 0);
          for (Eigen::Index k = b; k < e; ++k) (*gi[0])(k, 0) += y(k, 0) * (g(k, 0) - dot);
        }
      });
}

Var spmm(Var coeffs, std::shared_ptr<const SparsePattern> pattern, Var values) {
  using Csr = Eigen::SparseMatrix<double, Eigen::RowMajor, Eigen::Index>;
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  auto as_csr = [pattern](const Matrix& c) {
    return Eigen::Map<const Csr>(pattern->rows, pattern->cols, pattern->edges(),
                                 pattern->row_ptr.data(), pattern->col.data(), c.data());
  };
  return owner(coeffs, values).op(
      "spmm", {coeffs, values},
      [pattern, as_csr](const Inputs& in) {
        REQUIRE_SHAPE(in[0]->cols() == 1 && in[0]->rows() == pattern->edges(), "spmm",
                      "coefficients " + shape(*in[0]) + " do not match pattern edges");
        REQUIRE_SHAPE(in[1]->rows() == pattern->cols, "spmm",
                      "values " + shape(*in[1]) + " do not match pattern cols");
        return Matrix(as_csr(*in[0]) * *in[1]);
      },
      [pattern, as_csr](const Matrix& g, const Matrix&, const Inputs& in,
                        const std::vector<Matrix*>& gi) {
        *gi[1] += as_csr(*in[0]).transpose() * g;
        const RowMatrix gr = g, vr = *in[1];
        for (Eigen::Index i = 0; i < pattern->rows; ++i)
          for (Eigen::Index k = pattern->row_ptr[i]; k < pattern->row_ptr[i + 1]; ++k)
            (*gi[0])(k, 0) += gr.row(i).dot(vr.row(pattern->col[k]));
      });
}

// ---------------------------------------------------------------------------
// Finite differences

bool FiniteDiffReport::passed() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const BlockCheck& b) { return b.passed; });
}

std::string FiniteDiffReport::failures() const {
  std::string out;
  for (const auto& b : blocks) {
    if (b.passed) continue;
    if (!out.empty()) out += ", ";
    out += b.name;
  }
  return out;
}

FiniteDiffReport finite_diff_check(const std::function<double()>& loss,
                                   std::vector<ParamBlock>& blocks, double step, double tolerance,
                                   double abs_floor) {
  FiniteDiffReport report;
  for (auto& block : blocks) {
    Matrix& value = *block.value;
    if (block.analytic.rows() != value.rows() || block.analytic.cols() != value.cols())
      throw ShapeError("finite_diff_check: gradient shape mismatch for block " + block.name);
    BlockCheck check;
    check.name = block.name;
    for (Eigen::Index k = 0; k < value.size(); ++k) {
      const double saved = value.data()[k];
      value.data()[k] = saved + step;
      const double plus = loss();
      value.data()[k] = saved - step;
      const double minus = loss();
      value.data()[k] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = block.analytic.data()[k];
      const double abs_err = std::abs(analytic - numeric);
      const double rel_err =
          abs_err / std::max({std::abs(analytic), std::abs(numeric), abs_floor});
      check.max_abs_error = std::max(check.max_abs_error, abs_err);
      check.max_rel_error = std::max(check.max_rel_error, rel_err);
    }
    check.passed = check.max_rel_error <= tolerance;
    report.blocks.push_back(std::move(check));
  }
  return report;
}

FiniteDiffReport finite_diff_check(Graph& graph, Var root,
                                   const std::vector<std::pair<std::string, Var>>& params,
                                   double step, double tolerance, double abs_floor) {
  graph.forward(root);
  graph.backward(root);
  std::vector<ParamBlock> blocks;
  blocks.reserve(params.size());
  for (const auto& [name, var] : params) blocks.push_back({name, nullptr, graph.grad(var)});
  for (std::size_t k = 0; k < params.size(); ++k)
    blocks[k].value = &graph.mutable_value(params[k].second);
  auto loss = [&graph, root] { return graph.forward(root)(0, 0); };
  return finite_diff_check(loss, blocks, step, tolerance, abs_floor);
}

}  // namespace mcgraph::ad
