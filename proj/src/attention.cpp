#include "mcgraph/attention.hpp"

#include <cmath>
#include <random>

#include "mcgraph/error.hpp"
#include "mcgraph/random.hpp"

namespace mcgraph {

namespace {

Matrix glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = dist(rng);
  return m;
}

}  // namespace

std::vector<Matrix*> EncoderParams::blocks() {
  std::vector<Matrix*> out{&features};
  for (auto& v : views)
    for (auto& l : v.layers) {
      for (auto& w : l.weight) out.push_back(&w);
      for (auto& a : l.attention) out.push_back(&a);
      out.push_back(&l.global);
    }
  return out;
}

std::vector<const Matrix*> EncoderParams::blocks() const {
  auto mut = const_cast<EncoderParams*>(this)->blocks();
  return {mut.begin(), mut.end()};
}

std::vector<std::string> EncoderParams::block_names() const {
  std::vector<std::string> out{"features"};
  for (std::size_t v = 0; v < views.size(); ++v)
    for (std::size_t l = 0; l < views[v].layers.size(); ++l) {
      const auto prefix = "view" + std::to_string(v) + ".layer" + std::to_string(l);
      const auto& layer = views[v].layers[l];
      for (std::size_t h = 0; h < layer.weight.size(); ++h)
        out.push_back(prefix + ".weight" + std::to_string(h));
      for (std::size_t h = 0; h < layer.attention.size(); ++h)
        out.push_back(prefix + ".attention" + std::to_string(h));
      out.push_back(prefix + ".global");
    }
  return out;
}

bool EncoderParams::all_finite() const {
  for (const Matrix* m : blocks())
    if (!m->allFinite()) return false;
  return true;
}

EncoderParams init_encoder(const EncoderConfig& config, std::size_t num_nodes,
                           std::size_t num_views, std::uint64_t seed) {
  if (config.heads < 1 || config.feature_dim < 1 || config.hidden_dim < 1)
    throw ConfigError("encoder sizes must be positive");
  Rng rng = make_rng(seed, stream::kInit);
  EncoderParams p;
  p.config = config;

  std::normal_distribution<double> normal(0.0, config.init_std);
  p.features.resize(static_cast<Eigen::Index>(num_nodes), config.feature_dim);
  for (Eigen::Index k = 0; k < p.features.size(); ++k) p.features.data()[k] = normal(rng);

  const int width = config.embedding_dim();
  p.views.resize(num_views);
  for (auto& view : p.views) {
    view.layers.resize(kEncoderLayers);
    for (int l = 0; l < kEncoderLayers; ++l) {
      auto& layer = view.layers[static_cast<std::size_t>(l)];
      const int in_dim = l == 0 ? config.feature_dim : width;
      for (int h = 0; h < config.heads; ++h) {
        layer.weight.push_back(glorot(in_dim, config.hidden_dim, rng));
        layer.attention.push_back(glorot(2 * config.hidden_dim, 1, rng));
      }
      layer.global = glorot(width, 1, rng);
    }
  }
  return p;
}

ViewTopology ViewTopology::from(const CriterionView& view) {
  ViewTopology t;
  auto pattern = std::make_shared<ad::SparsePattern>(ad::SparsePattern::from(view.normalized));
  t.edge_weights.resize(pattern->edges(), 1);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < view.normalized.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(view.normalized, r); it; ++it)
      if (it.value() != 0.0) t.edge_weights(k++, 0) = it.value();
  t.pattern = std::move(pattern);
  return t;
}

std::vector<std::pair<std::string, ad::Var>> EncoderVars::named() const {
  std::vector<std::pair<std::string, ad::Var>> out{{"features", features}};
  for (std::size_t v = 0; v < views.size(); ++v)
    for (std::size_t l = 0; l < views[v].layers.size(); ++l) {
      const auto prefix = "view" + std::to_string(v) + ".layer" + std::to_string(l);
      const auto& layer = views[v].layers[l];
      for (std::size_t h = 0; h < layer.weight.size(); ++h)
        out.emplace_back(prefix + ".weight" + std::to_string(h), layer.weight[h]);
      for (std::size_t h = 0; h < layer.attention.size(); ++h)
        out.emplace_back(prefix + ".attention" + std::to_string(h), layer.attention[h]);
      out.emplace_back(prefix + ".global", layer.global);
    }
  return out;
}

EncoderVars bind(ad::Graph& graph, const EncoderParams& params) {
  EncoderVars vars;
  vars.features = graph.leaf(params.features, "features");
  for (const auto& view : params.views) {
    ViewVars vv;
    for (const auto& layer : view.layers) {
      LayerVars lv;
      for (const auto& w : layer.weight) lv.weight.push_back(graph.leaf(w, "weight"));
      for (const auto& a : layer.attention) lv.attention.push_back(graph.leaf(a, "attention"));
      lv.global = graph.leaf(layer.global, "global");
      vv.layers.push_back(std::move(lv));
    }
    vars.views.push_back(std::move(vv));
  }
  return vars;
}

namespace {

struct HeadVars {
  ad::Var transformed;  // h_in W^h
  ad::Var coeffs;
};

std::vector<HeadVars> attention_heads(const ViewTopology& topo, ad::Var h_in,
                                      const LayerVars& layer, double slope) {
  ad::Graph& g = *h_in.graph();
  std::vector<HeadVars> out;
  for (std::size_t h = 0; h < layer.weight.size(); ++h) {
    ad::Var z = ad::matmul(h_in, layer.weight[h]);
    const Eigen::Index width = g.value(layer.attention[h]).rows() / 2;
    ad::Var target = ad::matmul(z, ad::slice_rows(layer.attention[h], 0, width));
    ad::Var source = ad::matmul(z, ad::slice_rows(layer.attention[h], width, width));
    ad::Var scores = ad::leaky_relu(ad::edge_scores(target, source, topo.pattern), slope);
    out.push_back({z, ad::segment_softmax(scores, topo.pattern)});
  }
  return out;
}

}  // namespace

std::vector<ad::Var> local_attention_coeffs(const ViewTopology& topo, ad::Var h_in,
                                            const LayerVars& layer, double slope) {
  std::vector<ad::Var> out;
  for (const auto& head : attention_heads(topo, h_in, layer, slope)) out.push_back(head.coeffs);
  return out;
}

ad::Var local_attention(const ViewTopology& topo, ad::Var h_in, const LayerVars& layer,
                        Activation act, double slope, std::vector<ad::Var>* coeffs) {
  std::vector<ad::Var> outputs;
  if (coeffs) coeffs->clear();
  for (const auto& head : attention_heads(topo, h_in, layer, slope)) {
    ad::Var agg = ad::spmm(head.coeffs, topo.pattern, head.transformed);
    outputs.push_back(act == Activation::kElu ? ad::elu(agg) : agg);
    if (coeffs) coeffs->push_back(head.coeffs);
  }
  return outputs.size() == 1 ? outputs.front() : ad::concat_cols(outputs);
}

ad::Var global_attention_scores(ad::Var h_local, ad::Var w_global) {
  return ad::softmax(ad::relu(ad::matmul(h_local, w_global)));
}

ad::Var encode_view(const ViewTopology& topo, const ViewVars& view, ad::Var x,
                    const EncoderConfig& config, EncodeTrace* trace) {
  ad::Graph& g = *x.graph();
  const auto n = static_cast<double>(topo.pattern->rows);
  ad::Var h = ad::spmm(g.leaf(topo.edge_weights, "edge_weights"), topo.pattern, x);
  for (std::size_t l = 0; l < view.layers.size(); ++l) {
    const Activation act = l == 0 ? Activation::kElu : Activation::kIdentity;
    std::vector<ad::Var> coeffs;
    ad::Var local = local_attention(topo, h, view.layers[l], act, config.leaky_slope, &coeffs);
    if (trace) {
      trace->coefficients.push_back(coeffs);
      trace->local.push_back(local);
    }
    if (config.global_attention) {
      ad::Var scores = global_attention_scores(local, view.layers[l].global);
      if (trace) trace->global_scores.push_back(scores);
      h = ad::row_scale(local, ad::scale(scores, n));
    } else {
      h = local;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

namespace {

LayerVars bind_layer(ad::Graph& g, const LayerParams& layer) {
  LayerVars lv;
  for (const auto& w : layer.weight) lv.weight.push_back(g.leaf(w));
  for (const auto& a : layer.attention) lv.attention.push_back(g.leaf(a));
  lv.global = g.leaf(layer.global);
  return lv;
}

}  // namespace

std::vector<SparseMatrix> local_attention_coeffs(const CriterionView& view, const Matrix& h_in,
                                                 const LayerParams& layer, double slope) {
  const ViewTopology topo = ViewTopology::from(view);
  ad::Graph g;
  const LayerVars lv = bind_layer(g, layer);
  auto alpha = local_attention_coeffs(topo, g.leaf(h_in), lv, slope);
  std::vector<SparseMatrix> out;
  const auto& p = *topo.pattern;
  for (ad::Var a : alpha) {
    const Matrix& values = g.forward(a);
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index i = 0; i < p.rows; ++i)
      for (Eigen::Index k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k)
        triplets.emplace_back(i, p.col[k], values(k, 0));
    SparseMatrix m(p.rows, p.cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    out.push_back(std::move(m));
  }
  return out;
}

Matrix local_attention_forward(const CriterionView& view, const Matrix& h_in,
                               const LayerParams& layer, Activation act, double slope) {
  const ViewTopology topo = ViewTopology::from(view);
  ad::Graph g;
  const LayerVars lv = bind_layer(g, layer);
  return g.forward(local_attention(topo, g.leaf(h_in), lv, act, slope));
}

Eigen::VectorXd global_attention_scores(const Matrix& h_local, const Matrix& w_global) {
  ad::Graph g;
  return g.forward(global_attention_scores(g.leaf(h_local), g.leaf(w_global))).col(0);
}

ViewEmbedding encode_view(const CriterionView& view, const EncoderParams& params,
                          std::size_t slot) {
  if (slot >= params.views.size()) throw ConfigError("no encoder parameters for view slot");
  if (static_cast<std::size_t>(params.features.rows()) != view.num_nodes())
    throw ShapeError("encode_view: feature rows do not match the view's node count");
  const ViewTopology topo = ViewTopology::from(view);
  ad::Graph g;
  ViewVars vv;
  for (const auto& layer : params.views[slot].layers) vv.layers.push_back(bind_layer(g, layer));
  ad::Var out = encode_view(topo, vv, g.leaf(params.features), params.config);
  return {view.criterion, g.forward(out)};
}

std::vector<ViewEmbedding> encode_views(const std::vector<CriterionView>& views,
                                        const EncoderParams& params) {
  if (views.size() != params.views.size())
    throw ConfigError("encoder was trained on " + std::to_string(params.views.size()) +
                      " views, got " + std::to_string(views.size()));
  std::vector<ViewEmbedding> out;
  out.reserve(views.size());
  for (std::size_t c = 0; c < views.size(); ++c) out.push_back(encode_view(views[c], params, c));
  return out;
}

}  // namespace mcgraph
