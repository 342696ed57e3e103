#pragma once

// Per-view dual-attention encoder.
//
// Each criterion view runs two stacked graph-attention layers. A layer computes
// multi-head neighbour attention over the view's adjacency pattern (the local
// branch), then scores every node with a softmax over ReLU(x_i . w_G) (the
// global branch) and rescales node i's local output by n * a_G(i). A uniform
// global softmax therefore leaves the local output unchanged.
//
// The encoder input for a view is the shared learnable feature matrix X
// propagated once through that view's normalized adjacency, which is how the
// criterion ratings (edge weights) reach the embeddings.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcgraph/autodiff.hpp"
#include "mcgraph/graph.hpp"

namespace mcgraph {

using Matrix = Eigen::MatrixXd;

struct EncoderConfig {
  int heads = 2;
  int feature_dim = 64;  // F, width of X
  int hidden_dim = 32;   // F', per-head output width
  double leaky_slope = 0.2;
  double init_std = 0.1;  // std of the initial node features
  bool global_attention = true;

  int embedding_dim() const noexcept { return heads * hidden_dim; }
};

inline constexpr int kEncoderLayers = 2;

enum class Activation { kElu, kIdentity };

struct LayerParams {
  std::vector<Matrix> weight;     // per head, in_dim x F' (W^h stored transposed)
  std::vector<Matrix> attention;  // per head, 2F' x 1; top half scores the target node
  Matrix global;                  // heads*F' x 1 (W_G)
};

struct ViewParams {
  std::vector<LayerParams> layers;
};

struct EncoderParams {
  EncoderConfig config;
  Matrix features;  // (N+M) x F, shared by every view
  std::vector<ViewParams> views;

  /// All parameter matrices in a fixed order (features first).
  std::vector<Matrix*> blocks();
  std::vector<const Matrix*> blocks() const;
  std::vector<std::string> block_names() const;
  bool all_finite() const;
};

EncoderParams init_encoder(const EncoderConfig& config, std::size_t num_nodes,
                           std::size_t num_views, std::uint64_t seed);

struct ViewEmbedding {
  std::size_t criterion = 0;
  Matrix matrix;  // (N+M) x d
};

// ---------------------------------------------------------------------------
// Differentiable building blocks

/// Sparsity pattern and normalized edge weights of one view, ready for graph ops.
struct ViewTopology {
  std::shared_ptr<const ad::SparsePattern> pattern;
  Matrix edge_weights;  // edges x 1, aligned with `pattern`

  static ViewTopology from(const CriterionView& view);
};

struct LayerVars {
  std::vector<ad::Var> weight;
  std::vector<ad::Var> attention;
  ad::Var global;
};

struct ViewVars {
  std::vector<LayerVars> layers;
};

struct EncoderVars {
  ad::Var features;
  std::vector<ViewVars> views;

  /// (name, leaf) for every parameter, in EncoderParams::blocks() order.
  std::vector<std::pair<std::string, ad::Var>> named() const;
};

/// Registers every parameter of `params` as a leaf of `graph`.
EncoderVars bind(ad::Graph& graph, const EncoderParams& params);

/// Intermediate nodes exposed for inspection; filled when passed to encode.
struct EncodeTrace {
  std::vector<std::vector<ad::Var>> coefficients;  // [layer][head], edges x 1
  std::vector<ad::Var> local;                      // [layer], n x H*F'
  std::vector<ad::Var> global_scores;              // [layer], n x 1
};

/// Per-head attention coefficients over each node's neighbour set.
std::vector<ad::Var> local_attention_coeffs(const ViewTopology& topo, ad::Var h_in,
                                            const LayerVars& layer, double slope);

/// Concatenated multi-head neighbour aggregation followed by `act`.
ad::Var local_attention(const ViewTopology& topo, ad::Var h_in, const LayerVars& layer,
                        Activation act, double slope, std::vector<ad::Var>* coeffs = nullptr);

/// softmax_i(ReLU(h_local . w_G)); an n x 1 probability vector.
ad::Var global_attention_scores(ad::Var h_local, ad::Var w_global);

/// Two-layer dual-attention encoding of one view from node features `x`.
ad::Var encode_view(const ViewTopology& topo, const ViewVars& view, ad::Var x,
                    const EncoderConfig& config, EncodeTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Value-level conveniences (each builds a throwaway graph)

/// Per-head coefficient matrices (n x n, sparse, rows sum to 1 over neighbours).
std::vector<SparseMatrix> local_attention_coeffs(const CriterionView& view, const Matrix& h_in,
                                                 const LayerParams& layer, double slope = 0.2);

Matrix local_attention_forward(const CriterionView& view, const Matrix& h_in,
                               const LayerParams& layer, Activation act, double slope = 0.2);

Eigen::VectorXd global_attention_scores(const Matrix& h_local, const Matrix& w_global);

/// Encodes view `views[slot]` with params.views[slot].
ViewEmbedding encode_view(const CriterionView& view, const EncoderParams& params, std::size_t slot);

std::vector<ViewEmbedding> encode_views(const std::vector<CriterionView>& views,
                                        const EncoderParams& params);

}  // namespace mcgraph
