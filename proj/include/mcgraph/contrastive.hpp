#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "mcgraph/attention.hpp"
#include "mcgraph/error.hpp"
#include "mcgraph/graph.hpp"
#include "mcgraph/random.hpp"

namespace mcgraph {

struct LossConfig {
  double tau = 0.5;
  double alpha = 0.5;   // weight of the local contrastive loss
  double beta = 0.5;    // weight of the global contrastive loss
  double lambda = 0.1;  // weight of the squared L2 norm of all parameters
  int negatives = 5;    // K, negatives per positive pair
  double theta_pos = 0.5;
  double theta_neg = 0.3;

  void validate() const;
};

struct TrainConfig {
  LossConfig loss;
  int epochs = 200;
  int anchor_refresh = 10;  // anchors and sample pools are recomputed every this many epochs
  double learning_rate = 0.005;
  double grad_clip = 5.0;
  bool contrastive = true;  // false trains on the L2 term alone
};

/// Anchor and sampling pools of one view.
struct AnchorSet {
  std::size_t anchor = 0;
  std::vector<std::size_t> positives;  // ascending, contains the anchor
  std::vector<std::size_t> negatives;  // ascending, disjoint from positives
};

struct LossReport {
  double l_lcl = 0.0;
  double l_hgcl = 0.0;
  double l2_term = 0.0;
  double l_total = 0.0;
  int epoch = 0;
};

inline constexpr double kIsolated = -std::numeric_limits<double>::infinity();

/// Mean cosine similarity between node v and its neighbours in `view`;
/// kIsolated when v has no neighbour.
double neighborhood_similarity(const CriterionView& view, const Matrix& embeddings, std::size_t v);

/// Node with the highest neighbourhood similarity, lowest index on ties.
std::size_t select_anchor(const CriterionView& view, const Matrix& embeddings);

/// Anchor, nodes at least theta_pos-similar to it, and the pool of connected
/// nodes below theta_neg.
AnchorSet build_anchor_set(const CriterionView& view, const Matrix& embeddings,
                           const LossConfig& cfg);

/// Sampled negatives for every (positive node, ordered view pair) term.
struct LocalSamples {
  struct Pair {
    std::size_t view = 0;   // c, the view whose positives are contrasted
    std::size_t other = 0;  // c'
    std::vector<std::size_t> nodes;                  // positives of view c
    std::vector<std::vector<std::size_t>> negatives; // per node, indices into view c'
  };
  std::vector<Pair> pairs;
  std::size_t terms() const;
};

/// Draws up to K negatives per term from the other view's pool, falling back
/// to its non-positive connected nodes when the pool is empty.
LocalSamples sample_local_negatives(const std::vector<AnchorSet>& anchors,
                                    const std::vector<CriterionView>& views, int k, Rng& rng);

/// Mean over terms of -log(e^{s+/t} / (e^{s+/t} + sum e^{s-/t})).
ad::Var local_contrastive_loss(const std::vector<ad::Var>& embeddings, const LocalSamples& samples,
                               double tau);

/// Same loss over fixed embedding matrices.
double local_contrastive_loss(const std::vector<Matrix>& embeddings, const LocalSamples& samples,
                              double tau);

/// Mean over ordered view pairs of the global InfoNCE term. `corrupted[c]`
/// holds the negative encodings of view c; their column means are the
/// negative global embeddings for pairs (., c).
ad::Var global_contrastive_loss(const std::vector<ad::Var>& embeddings,
                                const std::vector<std::vector<ad::Var>>& corrupted, double tau);

double global_contrastive_loss(const std::vector<Matrix>& embeddings,
                               const std::vector<std::vector<Matrix>>& corrupted, double tau);

/// Sum of squared entries of every encoder parameter, node features included.
double l2_penalty(const EncoderParams& params);

LossReport total_loss(double l_lcl, double l_hgcl, double l2, const LossConfig& cfg,
                      int epoch = 0);
LossReport total_loss(double l_lcl, double l_hgcl, const EncoderParams& params,
                      const LossConfig& cfg, int epoch = 0);

/// Every differentiable piece of one training objective, for inspection and
/// gradient checks.
struct LossGraph {
  EncoderVars params;
  std::vector<ad::Var> embeddings;
  ad::Var lcl, hgcl, l2, total;
  bool has_contrastive = false;
};

/// Builds L_total on `graph` with fixed anchors (one per view). Negative
/// samples and feature permutations are drawn from `rng`.
LossGraph build_loss_graph(ad::Graph& graph, const EncoderParams& params,
                           const std::vector<ViewTopology>& topologies,
                           const std::vector<CriterionView>& views,
                           const std::vector<AnchorSet>& anchors, const TrainConfig& cfg, Rng& rng);

class TrainingAborted : public NumericError {
 public:
  TrainingAborted(int epoch, LossReport last_finite)
      : NumericError(epoch, "non-finite training loss"), last_finite_(last_finite) {}
  const LossReport& last_finite() const noexcept { return last_finite_; }

 private:
  LossReport last_finite_;
};

struct TrainResult {
  EncoderParams params;
  std::vector<LossReport> trace;
};

/// Full-batch contrastive training. Deterministic for a fixed seed.
TrainResult train(const std::vector<CriterionView>& views, const EncoderConfig& encoder,
                  const TrainConfig& cfg, std::uint64_t seed);

/// `epoch,l_lcl,l_hgcl,l2,l_total` rows.
void write_loss_trace(std::ostream& out, const std::vector<LossReport>& trace);

}  // namespace mcgraph
