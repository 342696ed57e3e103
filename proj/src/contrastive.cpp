#include "mcgraph/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "mcgraph/optimizer.hpp"

namespace mcgraph {

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (negatives < 1) throw ConfigError("negatives must be at least 1");
  if (theta_neg > theta_pos) throw ConfigError("theta_neg must not exceed theta_pos");
  if (alpha < 0.0 || beta < 0.0 || lambda < 0.0) throw ConfigError("loss weights must be >= 0");
}

namespace {

double cosine(const Matrix& e, std::size_t a, std::size_t b) {
  const auto ra = e.row(static_cast<Eigen::Index>(a));
  const auto rb = e.row(static_cast<Eigen::Index>(b));
  const double na = ra.norm(), nb = rb.norm();
  return (na > 0.0 && nb > 0.0) ? ra.dot(rb) / (na * nb) : 0.0;
}

bool is_connected(const CriterionView& view, std::size_t v) {
  for (SparseMatrix::InnerIterator it(view.normalized, static_cast<Eigen::Index>(v)); it; ++it)
    if (it.value() != 0.0) return true;
  return false;
}

}  // namespace

double neighborhood_similarity(const CriterionView& view, const Matrix& embeddings,
                               std::size_t v) {
  double total = 0.0;
  std::size_t count = 0;
  for (SparseMatrix::InnerIterator it(view.normalized, static_cast<Eigen::Index>(v)); it; ++it) {
    if (it.value() == 0.0) continue;
    total += cosine(embeddings, v, static_cast<std::size_t>(it.col()));
    ++count;
  }
  return count == 0 ? kIsolated : total / static_cast<double>(count);
}

std::size_t select_anchor(const CriterionView& view, const Matrix& embeddings) {
  std::size_t best = 0;
  double best_score = kIsolated;
  bool found = false;
  for (std::size_t v = 0; v < view.num_nodes(); ++v) {
    const double s = neighborhood_similarity(view, embeddings, v);
    if (s == kIsolated) continue;
    if (!found || s > best_score) {
      best = v;
      best_score = s;
      found = true;
    }
  }
  if (!found)
    throw DataError("view " + std::to_string(view.criterion) + " has no connected node");
  return best;
}

AnchorSet build_anchor_set(const CriterionView& view, const Matrix& embeddings,
                           const LossConfig& cfg) {
  AnchorSet set;
  set.anchor = select_anchor(view, embeddings);
  for (std::size_t v = 0; v < view.num_nodes(); ++v) {
    const double s = cosine(embeddings, v, set.anchor);
    if (v == set.anchor || s >= cfg.theta_pos) {
      set.positives.push_back(v);
    } else if (s < cfg.theta_neg && is_connected(view, v)) {
      set.negatives.push_back(v);
    }
  }
  return set;
}

std::size_t LocalSamples::terms() const {
  std::size_t n = 0;
  for (const auto& p : pairs) n += p.nodes.size();
  return n;
}

LocalSamples sample_local_negatives(const std::vector<AnchorSet>& anchors,
                                    const std::vector<CriterionView>& views, int k, Rng& rng) {
  LocalSamples out;
  const std::size_t c_count = anchors.size();
  std::vector<std::vector<std::size_t>> fallback(c_count);
  for (std::size_t c = 0; c < c_count; ++c) {
    const auto& pos = anchors[c].positives;
    for (std::size_t v = 0; v < views[c].num_nodes(); ++v)
      if (!std::binary_search(pos.begin(), pos.end(), v) && is_connected(views[c], v))
        fallback[c].push_back(v);
  }

  std::vector<std::size_t> candidates;
  for (std::size_t c = 0; c < c_count; ++c) {
    for (std::size_t other = 0; other < c_count; ++other) {
      if (other == c) continue;
      LocalSamples::Pair pair;
      pair.view = c;
      pair.other = other;
      pair.nodes = anchors[c].positives;
      const auto& pool = anchors[other].negatives.empty() ? fallback[other] : anchors[other].negatives;
      for (std::size_t i : pair.nodes) {
        candidates.clear();
        for (std::size_t v : pool)
          if (v != i) candidates.push_back(v);
        std::vector<std::size_t> drawn;
        if (!candidates.empty()) {
          std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
          for (int j = 0; j < k; ++j) drawn.push_back(candidates[pick(rng)]);
        }
        pair.negatives.push_back(std::move(drawn));
      }
      out.pairs.push_back(std::move(pair));
    }
  }
  return out;
}

namespace {

std::vector<Eigen::Index> as_index(const std::vector<std::size_t>& v) {
  return {v.begin(), v.end()};
}

/// Sum over rows of log(sum_j exp(logits_j)) - logits_0, logits = sims / tau.
ad::Var info_nce_sum(ad::Var positive, const std::vector<ad::Var>& negatives, double tau) {
  std::vector<ad::Var> cols{positive};
  cols.insert(cols.end(), negatives.begin(), negatives.end());
  ad::Var logits = ad::scale(ad::concat_cols(cols), 1.0 / tau);
  ad::Var lse = ad::log(ad::row_sum(ad::exp(logits)));
  return ad::sum(ad::sub(lse, ad::scale(positive, 1.0 / tau)));
}

ad::Var zero(ad::Graph& g) { return g.leaf(Matrix::Zero(1, 1), "zero"); }

ad::Var sum_all(ad::Graph& g, const std::vector<ad::Var>& parts) {
  if (parts.empty()) return zero(g);
  ad::Var acc = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) acc = ad::add(acc, parts[k]);
  return acc;
}

}  // namespace

ad::Var local_contrastive_loss(const std::vector<ad::Var>& embeddings, const LocalSamples& samples,
                               double tau) {
  if (embeddings.empty()) throw ShapeError("local_contrastive_loss: no embeddings");
  ad::Graph& g = *embeddings.front().graph();
  const std::size_t terms = samples.terms();
  if (terms == 0) return zero(g);

  std::vector<ad::Var> sums;
  for (const auto& pair : samples.pairs) {
    // Terms without negatives contribute -log(1) = 0 and only count.
    std::vector<std::size_t> rows;
    std::vector<std::size_t> row_slot;
    for (std::size_t t = 0; t < pair.nodes.size(); ++t) {
      if (!pair.negatives[t].empty()) {
        rows.push_back(pair.nodes[t]);
        row_slot.push_back(t);
      }
    }
    if (rows.empty()) continue;
    const std::size_t k = pair.negatives[row_slot.front()].size();
    ad::Var anchor_rows = ad::gather_rows(embeddings[pair.view], as_index(rows));
    ad::Var positive = ad::row_cosine(anchor_rows, ad::gather_rows(embeddings[pair.other], as_index(rows)));
    std::vector<ad::Var> negatives;
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<Eigen::Index> neg_rows;
      for (std::size_t t : row_slot) {
        if (pair.negatives[t].size() != k)
          throw ShapeError("local_contrastive_loss: ragged negative samples");
        neg_rows.push_back(static_cast<Eigen::Index>(pair.negatives[t][j]));
      }
      negatives.push_back(ad::row_cosine(anchor_rows, ad::gather_rows(embeddings[pair.other], neg_rows)));
    }
    sums.push_back(info_nce_sum(positive, negatives, tau));
  }
  return ad::scale(sum_all(g, sums), 1.0 / static_cast<double>(terms));
}

double local_contrastive_loss(const std::vector<Matrix>& embeddings, const LocalSamples& samples,
                              double tau) {
  ad::Graph g;
  std::vector<ad::Var> vars;
  for (const auto& e : embeddings) vars.push_back(g.leaf(e));
  return g.forward(local_contrastive_loss(vars, samples, tau))(0, 0);
}

ad::Var global_contrastive_loss(const std::vector<ad::Var>& embeddings,
                                const std::vector<std::vector<ad::Var>>& corrupted, double tau) {
  if (embeddings.empty()) throw ShapeError("global_contrastive_loss: no embeddings");
  ad::Graph& g = *embeddings.front().graph();
  const std::size_t c_count = embeddings.size();
  if (c_count < 2) return zero(g);
  if (corrupted.size() != c_count)
    throw ShapeError("global_contrastive_loss: one negative list per view required");

  std::vector<ad::Var> summary, terms;
  std::vector<std::vector<ad::Var>> negative_summary(c_count);
  for (std::size_t c = 0; c < c_count; ++c) {
    summary.push_back(ad::col_mean(embeddings[c]));
    for (ad::Var e : corrupted[c]) negative_summary[c].push_back(ad::col_mean(e));
  }
  for (std::size_t c = 0; c < c_count; ++c)
    for (std::size_t other = 0; other < c_count; ++other) {
      if (other == c) continue;
      ad::Var positive = ad::row_cosine(summary[c], summary[other]);
      std::vector<ad::Var> negatives;
      for (ad::Var neg : negative_summary[other]) negatives.push_back(ad::row_cosine(summary[c], neg));
      terms.push_back(info_nce_sum(positive, negatives, tau));
    }
  return ad::scale(sum_all(g, terms), 1.0 / static_cast<double>(terms.size()));
}

double global_contrastive_loss(const std::vector<Matrix>& embeddings,
                               const std::vector<std::vector<Matrix>>& corrupted, double tau) {
  ad::Graph g;
  std::vector<ad::Var> vars;
  std::vector<std::vector<ad::Var>> neg(corrupted.size());
  for (const auto& e : embeddings) vars.push_back(g.leaf(e));
  for (std::size_t c = 0; c < corrupted.size(); ++c)
    for (const auto& e : corrupted[c]) neg[c].push_back(g.leaf(e));
  return g.forward(global_contrastive_loss(vars, neg, tau))(0, 0);
}

double l2_penalty(const EncoderParams& params) {
  double total = 0.0;
  for (const Matrix* m : params.blocks()) total += m->squaredNorm();
  return total;
}

LossReport total_loss(double l_lcl, double l_hgcl, double l2, const LossConfig& cfg, int epoch) {
  LossReport r;
  r.l_lcl = l_lcl;
  r.l_hgcl = l_hgcl;
  r.l2_term = l2;
  r.l_total = cfg.alpha * l_lcl + cfg.beta * l_hgcl + cfg.lambda * l2;
  r.epoch = epoch;
  return r;
}

LossReport total_loss(double l_lcl, double l_hgcl, const EncoderParams& params,
                      const LossConfig& cfg, int epoch) {
  return total_loss(l_lcl, l_hgcl, l2_penalty(params), cfg, epoch);
}

LossGraph build_loss_graph(ad::Graph& graph, const EncoderParams& params,
                           const std::vector<ViewTopology>& topologies,
                           const std::vector<CriterionView>& views,
                           const std::vector<AnchorSet>& anchors, const TrainConfig& cfg,
                           Rng& rng) {
  LossGraph lg;
  lg.params = bind(graph, params);
  const std::size_t c_count = topologies.size();
  for (std::size_t c = 0; c < c_count; ++c)
    lg.embeddings.push_back(
        encode_view(topologies[c], lg.params.views[c], lg.params.features, params.config));

  std::vector<ad::Var> squares;
  for (const auto& [name, var] : lg.params.named()) squares.push_back(ad::sq_norm(var));
  lg.l2 = sum_all(graph, squares);

  lg.has_contrastive = cfg.contrastive && c_count >= 2;
  if (lg.has_contrastive) {
    if (anchors.size() != c_count) throw ConfigError("one anchor set per view required");
    const LocalSamples samples = sample_local_negatives(anchors, views, cfg.loss.negatives, rng);
    lg.lcl = local_contrastive_loss(lg.embeddings, samples, cfg.loss.tau);

    const auto n = static_cast<Eigen::Index>(params.features.rows());
    std::vector<std::vector<ad::Var>> corrupted(c_count);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < c_count; ++c)
      for (int k = 0; k < cfg.loss.negatives; ++k) {
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        ad::Var shuffled = ad::gather_rows(lg.params.features, perm);
        corrupted[c].push_back(
            encode_view(topologies[c], lg.params.views[c], shuffled, params.config));
      }
    lg.hgcl = global_contrastive_loss(lg.embeddings, corrupted, cfg.loss.tau);
  } else {
    lg.lcl = zero(graph);
    lg.hgcl = zero(graph);
  }
  lg.total = ad::add(ad::add(ad::scale(lg.lcl, cfg.loss.alpha), ad::scale(lg.hgcl, cfg.loss.beta)),
                     ad::scale(lg.l2, cfg.loss.lambda));
  return lg;
}

TrainResult train(const std::vector<CriterionView>& views, const EncoderConfig& encoder,
                  const TrainConfig& cfg, std::uint64_t seed) {
  if (views.empty()) throw ConfigError("training needs at least one view");
  cfg.loss.validate();
  if (cfg.anchor_refresh < 1) throw ConfigError("anchor_refresh must be at least 1");

  TrainResult result;
  result.params = init_encoder(encoder, views.front().num_nodes(), views.size(), seed);
  std::vector<ViewTopology> topologies;
  for (const auto& v : views) topologies.push_back(ViewTopology::from(v));

  Rng rng = make_rng(seed, stream::kSampling);
  ad::Adam adam(cfg.learning_rate);
  std::vector<AnchorSet> anchors;
  const bool contrastive = cfg.contrastive && views.size() >= 2;
  LossReport last;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (contrastive && (epoch - 1) % cfg.anchor_refresh == 0) {
      anchors.clear();
      for (std::size_t c = 0; c < views.size(); ++c)
        anchors.push_back(
            build_anchor_set(views[c], encode_view(views[c], result.params, c).matrix, cfg.loss));
    }

    ad::Graph graph;
    LossGraph lg = build_loss_graph(graph, result.params, topologies, views, anchors, cfg, rng);
    graph.forward(lg.total);
    LossReport report = total_loss(graph.value(lg.lcl)(0, 0), graph.value(lg.hgcl)(0, 0),
                                   graph.value(lg.l2)(0, 0), cfg.loss, epoch);
    if (!std::isfinite(report.l_total)) throw TrainingAborted(epoch, last);

    graph.backward(lg.total);
    std::vector<Matrix> grads;
    for (const auto& [name, var] : lg.params.named()) grads.push_back(graph.grad(var));
    ad::clip_global_norm(grads, cfg.grad_clip);
    adam.step(result.params.blocks(), grads);
    if (!result.params.all_finite()) throw TrainingAborted(epoch, report);

    result.trace.push_back(report);
    last = report;
  }
  return result;
}

void write_loss_trace(std::ostream& out, const std::vector<LossReport>& trace) {
  out << "epoch,l_lcl,l_hgcl,l2,l_total\n" << std::setprecision(17);
  for (const auto& r : trace)
    out << r.epoch << ',' << r.l_lcl << ',' << r.l_hgcl << ',' << r.l2_term << ',' << r.l_total
        << '\n';
}

}  // namespace mcgraph
