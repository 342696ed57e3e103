#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "mcgraph/contrastive.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mcgraph;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

LocalSamples one_term(std::size_t node, std::vector<std::size_t> negatives) {
  LocalSamples s;
  LocalSamples::Pair p;
  p.view = 0;
  p.other = 1;
  p.nodes = {node};
  p.negatives = {std::move(negatives)};
  s.pairs.push_back(p);
  return s;
}

// user 0 - item 0 (node 2), user 0 - item 1 (node 3), user 1 - item 0
CriterionView tiny_view() {
  Eigen::MatrixXd b(2, 2);
  b << 1, 1, 1, 0;
  return testing::view_from(b);
}

}  // namespace

TEST_SUITE("contrastive") {

TEST_CASE("neighbourhood similarity") {
  const auto view = tiny_view();
  SUBCASE("identical neighbours") {
    const Matrix e = rows({{1, 2}, {0, 1}, {1, 2}, {2, 4}});
    CHECK(neighborhood_similarity(view, e, 0) == doctest::Approx(1.0));
  }
  SUBCASE("cosines one and zero") {
    const Matrix e = rows({{1, 0}, {0, 1}, {3, 0}, {0, 2}});
    CHECK(neighborhood_similarity(view, e, 0) == doctest::Approx(0.5));
  }
  SUBCASE("isolated node") {
    Eigen::MatrixXd b(2, 1);
    b << 1, 0;
    const Matrix e = Matrix::Ones(3, 2);
    CHECK(neighborhood_similarity(testing::view_from(b), e, 1) == kIsolated);
  }
}

TEST_CASE("anchor selection") {
  const auto view = tiny_view();
  SUBCASE("unique argmax") {
    // node 1's only neighbour (node 2) points the same way; others do not
    const Matrix e = rows({{1, 0}, {1, 1}, {1, 1}, {-1, 0}});
    CHECK(select_anchor(view, e) == 1);
    CHECK(select_anchor(view, 3.5 * e) == 1);
  }
  SUBCASE("ties go to the lowest index") {
    CHECK(select_anchor(view, Matrix::Ones(4, 3)) == 0);
  }
  SUBCASE("isolated nodes are skipped") {
    Eigen::MatrixXd b(2, 2);
    b << 0, 0, 1, 1;
    CHECK(select_anchor(testing::view_from(b), Matrix::Ones(4, 2)) == 1);
  }
  SUBCASE("no connected node") {
    CHECK_THROWS_AS(select_anchor(testing::view_from(Eigen::MatrixXd::Zero(2, 2)), Matrix::Ones(4, 2)),
                    DataError);
  }
}

TEST_CASE("anchor set pools") {
  std::mt19937_64 rng(1);
  const auto view = testing::view_from(testing::random_incidence(8, 6, 0.4, rng));
  const Matrix e = Matrix::Random(14, 4);
  const LossConfig cfg;
  const AnchorSet s = build_anchor_set(view, e, cfg);
  CHECK(std::find(s.positives.begin(), s.positives.end(), s.anchor) != s.positives.end());
  const Eigen::VectorXd a = e.row(static_cast<Eigen::Index>(s.anchor)).transpose();
  for (std::size_t v : s.positives)
    if (v != s.anchor) CHECK(oracle::cosine(e.row(static_cast<Eigen::Index>(v)).transpose(), a) >= 0.5);
  for (std::size_t v : s.negatives) {
    CHECK(oracle::cosine(e.row(static_cast<Eigen::Index>(v)).transpose(), a) < 0.3);
    CHECK_FALSE(view.neighbors(v).empty());
    CHECK(std::find(s.positives.begin(), s.positives.end(), v) == s.positives.end());
  }
  CHECK(std::is_sorted(s.negatives.begin(), s.negatives.end()));
}

TEST_CASE("negative sampling") {
  const auto view = tiny_view();
  std::vector<AnchorSet> anchors(2);
  anchors[0] = {0, {0, 1}, {2, 3}};
  anchors[1] = {0, {0}, {1, 2}};
  Rng rng(3);
  const auto s = sample_local_negatives(anchors, {view, view}, 4, rng);
  REQUIRE(s.pairs.size() == 2);
  CHECK(s.terms() == 3);
  const auto& p01 = s.pairs[0];
  CHECK(p01.view == 0);
  CHECK(p01.other == 1);
  // node 1 may not draw itself from {1, 2}
  for (std::size_t v : p01.negatives[1]) CHECK(v == 2);
  for (const auto& negs : p01.negatives) CHECK(negs.size() == 4);
  for (std::size_t v : s.pairs[1].negatives[0]) CHECK((v == 2 || v == 3));

  SUBCASE("fallback to non-positive connected nodes") {
    anchors[1].negatives.clear();
    Rng r2(4);
    const auto f = sample_local_negatives(anchors, {view, view}, 3, r2);
    for (const auto& negs : f.pairs[0].negatives)
      for (std::size_t v : negs) CHECK((v == 1 || v == 2 || v == 3));
  }
  SUBCASE("nothing to draw") {
    anchors[1] = {0, {0, 1, 2, 3}, {}};
    Rng r3(5);
    const auto f = sample_local_negatives(anchors, {view, view}, 3, r3);
    for (const auto& negs : f.pairs[0].negatives) CHECK(negs.empty());
  }
}

TEST_CASE("local loss closed forms") {
  SUBCASE("equal similarities give ln 2") {
    const Matrix a = rows({{1, 0}, {0, 1}});
    const Matrix b = rows({{1, 1}, {1, 1}});
    CHECK(std::abs(local_contrastive_loss({a, b}, one_term(0, {1}), 0.5) - std::log(2.0)) <= 1e-9);
  }
  SUBCASE("tau one, +1 against -1") {
    const Matrix a = rows({{1, 0}, {0, 1}});
    const Matrix b = rows({{2, 0}, {-1, 0}});
    CHECK(std::abs(local_contrastive_loss({a, b}, one_term(0, {1}), 1.0) -
                   std::log(1.0 + std::exp(-2.0))) <= 1e-9);
    CHECK(std::log(1.0 + std::exp(-2.0)) == doctest::Approx(0.1269).epsilon(1e-3));
  }
  SUBCASE("no negatives contributes zero but counts") {
    const Matrix a = rows({{1, 0}, {0, 1}});
    const Matrix b = rows({{1, 1}, {1, 1}});
    LocalSamples s = one_term(0, {});
    CHECK(local_contrastive_loss({a, b}, s, 0.5) == 0.0);
    s.pairs[0].nodes.push_back(1);
    s.pairs[0].negatives.push_back({0});
    const double only = oracle::info_nce(oracle::cosine(a.row(1).transpose(), b.row(1).transpose()),
                                         {oracle::cosine(a.row(1).transpose(), b.row(0).transpose())}, 0.5);
    CHECK(local_contrastive_loss({a, b}, s, 0.5) == doctest::Approx(only / 2.0));
  }
}

TEST_CASE("local loss against the oracle on sampled terms") {
  std::mt19937_64 gen(2);
  const auto view = testing::view_from(testing::random_incidence(6, 5, 0.5, gen));
  std::vector<Matrix> e{Matrix::Random(11, 3), Matrix::Random(11, 3), Matrix::Random(11, 3)};
  const LossConfig cfg;
  std::vector<AnchorSet> anchors;
  for (const auto& m : e) anchors.push_back(build_anchor_set(view, m, cfg));
  Rng rng(7);
  const auto s = sample_local_negatives(anchors, {view, view, view}, 3, rng);
  double total = 0.0;
  for (const auto& p : s.pairs)
    for (std::size_t t = 0; t < p.nodes.size(); ++t) {
      const Eigen::VectorXd zi = e[p.view].row(static_cast<Eigen::Index>(p.nodes[t])).transpose();
      const double pos = oracle::cosine(zi, e[p.other].row(static_cast<Eigen::Index>(p.nodes[t])).transpose());
      std::vector<double> neg;
      for (std::size_t v : p.negatives[t])
        neg.push_back(oracle::cosine(zi, e[p.other].row(static_cast<Eigen::Index>(v)).transpose()));
      total += neg.empty() ? 0.0 : oracle::info_nce(pos, neg, 0.5);
    }
  CHECK(local_contrastive_loss(e, s, 0.5) == doctest::Approx(total / static_cast<double>(s.terms())).epsilon(1e-12));
}

TEST_CASE("global loss closed forms") {
  SUBCASE("orthogonal negative, tau one") {
    const Matrix g = rows({{1, 0}, {1, 0}});
    const Matrix neg = rows({{0, 1}, {0, 1}});
    CHECK(std::abs(global_contrastive_loss({g, g}, {{neg}, {neg}}, 1.0) -
                   std::log(1.0 + std::exp(-1.0))) <= 1e-9);
    CHECK(std::log(1.0 + std::exp(-1.0)) == doctest::Approx(0.3133).epsilon(1e-3));
  }
  SUBCASE("negative identical to the positive") {
    const Matrix g = rows({{1, 2}, {3, 1}});
    CHECK(std::abs(global_contrastive_loss({g, g}, {{g}, {g}}, 0.5) - std::log(2.0)) <= 1e-9);
  }
  SUBCASE("two views give two ordered pair terms") {
    const Matrix a = rows({{1, 0}, {0.5, 0.2}}), b = rows({{0.3, 1}, {1, 1}});
    const Matrix na = rows({{-1, 0.2}, {0, 1}}), nb = rows({{0.2, -0.4}, {1, -1}});
    auto mean_row = [](const Matrix& m) { return Eigen::VectorXd(m.colwise().mean().transpose()); };
    const double ab = oracle::info_nce(oracle::cosine(mean_row(a), mean_row(b)),
                                       {oracle::cosine(mean_row(a), mean_row(nb))}, 0.5);
    const double ba = oracle::info_nce(oracle::cosine(mean_row(b), mean_row(a)),
                                       {oracle::cosine(mean_row(b), mean_row(na))}, 0.5);
    CHECK(global_contrastive_loss({a, b}, {{na}, {nb}}, 0.5) == doctest::Approx((ab + ba) / 2.0));
  }
  SUBCASE("single view has no term") {
    CHECK(global_contrastive_loss({Matrix::Ones(2, 2)}, {{}}, 0.5) == 0.0);
  }
}

TEST_CASE("losses are non-negative on random inputs") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Matrix> e(3, Matrix(7, 3));
    for (auto& m : e)
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(gen);
    LocalSamples s;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t o = 0; o < 3; ++o) {
        if (c == o) continue;
        LocalSamples::Pair p{c, o, {0, 3, 5}, {{1, 2}, {4, 6}, {0, 2}}};
        s.pairs.push_back(p);
      }
    CHECK(local_contrastive_loss(e, s, 0.5) >= 0.0);
    CHECK(global_contrastive_loss(e, {{e[1]}, {e[2]}, {e[0]}}, 0.5) >= 0.0);
  }
}

TEST_CASE("total loss") {
  LossConfig cfg;
  CHECK(total_loss(2.0, 1.0, 10.0, cfg).l_total == doctest::Approx(2.5));
  cfg.alpha = cfg.beta = cfg.lambda = 0.0;
  CHECK(total_loss(2.0, 1.0, 10.0, cfg).l_total == 0.0);
  cfg.lambda = 0.0;
  cfg.alpha = 0.5;
  CHECK(total_loss(2.0, 1.0, 1e6, cfg).l_total == total_loss(2.0, 1.0, 1.0, cfg).l_total);

  EncoderConfig ec;
  ec.feature_dim = 3;
  ec.hidden_dim = 2;
  const EncoderParams p = init_encoder(ec, 4, 2, 1);
  double expect = 0.0;
  for (const Matrix* m : p.blocks())
    for (Eigen::Index k = 0; k < m->size(); ++k) expect += m->data()[k] * m->data()[k];
  CHECK(l2_penalty(p) == doctest::Approx(expect));
}

TEST_CASE("config validation") {
  LossConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.theta_neg = 0.9;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.negatives = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("loss graph gradient on a small planted graph") {
  const auto ds = testing::small_planted(6, 4, 3, 21, 0.5);
  const auto views = build_views(ds);
  EncoderConfig ec;
  ec.feature_dim = 4;
  ec.hidden_dim = 2;
  const EncoderParams params = init_encoder(ec, ds.num_nodes(), views.size(), 3);
  std::vector<ViewTopology> topo;
  std::vector<AnchorSet> anchors;
  TrainConfig tc;
  for (std::size_t c = 0; c < views.size(); ++c) {
    topo.push_back(ViewTopology::from(views[c]));
    anchors.push_back(build_anchor_set(views[c], encode_view(views[c], params, c).matrix, tc.loss));
  }
  ad::Graph g;
  Rng rng(5);
  const LossGraph lg = build_loss_graph(g, params, topo, views, anchors, tc, rng);
  CHECK(lg.has_contrastive);
  const auto report = ad::finite_diff_check(g, lg.total, lg.params.named(), 1e-6, 1e-4);
  INFO(report.failures());
  CHECK(report.passed());
  CHECK(g.value(lg.total)(0, 0) ==
        doctest::Approx(total_loss(g.value(lg.lcl)(0, 0), g.value(lg.hgcl)(0, 0), params, tc.loss).l_total));
}

TEST_CASE("training") {
  const auto ds = testing::small_planted(8, 6, 2, 4, 0.5);
  const auto views = build_views(ds);
  EncoderConfig ec;
  ec.feature_dim = 4;
  ec.hidden_dim = 2;
  TrainConfig tc;
  tc.epochs = 0;
  const auto none = train(views, ec, tc, 1);
  CHECK(none.trace.empty());
  CHECK(none.params.features == init_encoder(ec, ds.num_nodes(), 2, 1).features);

  tc.epochs = 15;
  const auto a = train(views, ec, tc, 2), b = train(views, ec, tc, 2);
  REQUIRE(a.trace.size() == 15);
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].l_total == b.trace[k].l_total);
    CHECK(a.trace[k].epoch == static_cast<int>(k + 1));
  }
  CHECK(a.params.features == b.params.features);
  CHECK(a.trace.back().l_total < a.trace.front().l_total);

  SUBCASE("non-finite loss aborts with the epoch") {
    ec.init_std = 1e200;
    try {
      train(views, ec, tc, 3);
      FAIL("expected TrainingAborted");
    } catch (const TrainingAborted& e) {
      CHECK(e.epoch() == 1);
    }
  }
}

TEST_CASE("loss trace format") {
  std::ostringstream out;
  write_loss_trace(out, {total_loss(1.0, 2.0, 3.0, LossConfig{}, 1)});
  CHECK(out.str() == "epoch,l_lcl,l_hgcl,l2,l_total\n1,1,2,3,1.8\n");
}

}  // TEST_SUITE
