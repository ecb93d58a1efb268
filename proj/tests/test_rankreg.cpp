#include <catch2/catch_amalgamated.hpp>

#include "aurec/rankreg.hpp"
#include "helpers.hpp"

using namespace aurec;

namespace {

EmbeddingTable random_table(std::uint32_t M, std::uint32_t N, std::uint32_t d, std::uint64_t seed) {
  auto t = init_embeddings(M, N, d, seed);
  t.user_emb *= 100.0;  // spread scores out of the tiny-init regime
  t.item_emb *= 100.0;
  return t;
}

double min_abs_hinge_argument(const EmbeddingTable& t, const TopKSnapshot& snap, double lambda) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t u = 0; u < t.num_users(); ++u) {
    for (std::uint32_t j = 0; j + 1 < snap.k; ++j) {
      const double z = score(t, u, snap.tops[u][j + 1]) - score(t, u, snap.tops[u][j]) +
                       snap.wpos(u, j) * lambda;
      best = std::min(best, std::abs(z));
    }
    for (std::uint32_t j = 0; j < snap.k; ++j) {
      const double z = score(t, u, snap.negs[u][j]) - score(t, u, snap.tops[u][j]) +
                       snap.wneg(u, j) * lambda;
      best = std::min(best, std::abs(z));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("adaptive weight pins known cosine values") {
  Eigen::RowVectorXd ex(3), ey(3), zero(3);
  ex << 1, 0, 0;
  ey << 0, 1, 0;
  zero << 0, 0, 0;
  REQUIRE(adaptive_weight(ex, ey, 1000.0) == Catch::Approx(0.5).epsilon(1e-15));
  const double similar = adaptive_weight(ex, ex, 1000.0);
  REQUIRE(similar == Catch::Approx(1.0 - 1.0 / (1.0 + std::exp(-1e-3))).epsilon(1e-12));
  REQUIRE(similar < 0.5);
  const double dissimilar = adaptive_weight(ex, (-ex).eval(), 1000.0);
  REQUIRE(dissimilar > 0.5);
  REQUIRE(similar < adaptive_weight(ex, ey, 1000.0));
  REQUIRE(adaptive_weight(ex, ey, 1000.0) < dissimilar);
  REQUIRE(adaptive_weight(ex, zero, 1000.0) == Catch::Approx(0.5).epsilon(1e-15));
  for (const double tau : {1.0, 10.0, 1000.0}) {
    const double w = adaptive_weight(ex, ey, tau);
    REQUIRE(w > 0.0);
    REQUIRE(w < 1.0);
  }
  REQUIRE_THROWS_AS(adaptive_weight(ex, ey, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(adaptive_weight(ex, ey, -1.0), std::invalid_argument);
}

TEST_CASE("snapshot records the current top-k with negatives from outside it") {
  EmbeddingTable t;
  t.user_emb.resize(1, 2);
  t.user_emb << 1, 0;
  t.item_emb.resize(8, 2);
  // scores: 9, 7, 8, 1, 2, 3, 4, 5
  t.item_emb << 9, 0, 7, 0, 8, 0, 1, 0, 2, 0, 3, 0, 4, 0, 5, 0;
  const std::vector<std::vector<std::uint32_t>> train = {{0}};  // best item is off-limits
  RegConfig cfg;
  cfg.k = 2;
  const auto snap = make_snapshot(t, train, cfg, 77);
  REQUIRE(snap.k == 2);
  REQUIRE(snap.tops[0] == std::vector<std::uint32_t>{2, 1});
  REQUIRE(snap.negs[0].size() == 2);
  REQUIRE(snap.negs[0][0] != snap.negs[0][1]);
  for (const auto v : snap.negs[0]) {
    REQUIRE(v >= 3);  // not the train item, not a top-k member
  }
  REQUIRE(snap.wpos.rows() == 1);
  REQUIRE(snap.wpos.cols() == 1);
  REQUIRE(snap.wneg.cols() == 2);
  REQUIRE(snap.wpos(0, 0) ==
          Catch::Approx(adaptive_weight(t.item_emb.row(1), t.item_emb.row(2), cfg.tau)));
  REQUIRE(snap.wneg(0, 1) ==
          Catch::Approx(adaptive_weight(t.item_emb.row(snap.negs[0][1]), t.item_emb.row(1), cfg.tau)));

  const auto again = make_snapshot(t, train, cfg, 77);
  REQUIRE(again.tops == snap.tops);
  REQUIRE(again.negs == snap.negs);
  REQUIRE(again.wpos == snap.wpos);
  REQUIRE(again.wneg == snap.wneg);
}

TEST_CASE("snapshot fails when too few negative candidates remain") {
  const auto t = random_table(1, 5, 2, 1);
  RegConfig cfg;
  cfg.k = 3;
  const std::vector<std::vector<std::uint32_t>> train = {{0}};
  REQUIRE_THROWS_AS(make_snapshot(t, train, cfg, 1), std::runtime_error);
  cfg.k = 0;
  REQUIRE_THROWS_AS(make_snapshot(t, train, cfg, 1), std::invalid_argument);
  cfg.k = 1;
  REQUIRE_THROWS_AS(make_snapshot(t, {}, cfg, 1), std::invalid_argument);
}

TEST_CASE("ordering loss on a hand-built snapshot") {
  EmbeddingTable t;
  t.user_emb.resize(1, 1);
  t.user_emb << 1.0;
  t.item_emb.resize(4, 1);
  t.item_emb << 1.0, 1.2, -100.0, -100.0;
  TopKSnapshot snap;
  snap.k = 2;
  snap.tops = {{0, 1}};  // the snapshot claims item 0 should outrank item 1
  snap.negs = {{2, 3}};
  snap.wpos.resize(1, 1);
  snap.wpos << 0.5;
  snap.wneg.resize(1, 2);
  snap.wneg << 0.5, 0.5;
  // only the adjacent pair is violated: 1.2 - 1.0 + 0.5 * 0.05 = 0.225
  REQUIRE(rank_reg_loss(t, snap, 0.05) == Catch::Approx(0.225).epsilon(1e-12));

  snap.tops = {{1, 0}};  // ordering now satisfied with room beyond the margin
  REQUIRE(rank_reg_loss(t, snap, 0.05) == 0.0);

  Mat gu, gv;
  REQUIRE(rank_reg_loss_grad(t, snap, 0.05, gu, gv) == 0.0);
  REQUIRE(gu.isZero(0.0));
  REQUIRE(gv.isZero(0.0));
}

TEST_CASE("ordering loss at snapshot time never exceeds the margin budget") {
  for (const std::uint64_t seed : {3u, 4u, 5u}) {
    const auto t = random_table(6, 30, 4, seed);
    const auto split = testutil::toy_split(6, 30, 5, seed);
    RegConfig cfg;
    cfg.k = 4;
    cfg.lambda = 0.05;
    const auto snap = make_snapshot(t, split.train_items, cfg, seed);
    const double loss = rank_reg_loss(t, snap, cfg.lambda);
    REQUIRE(loss >= 0.0);
    // each of the 2k-1 terms per user is at most w * lambda <= lambda
    REQUIRE(loss <= 6.0 * (2.0 * cfg.k - 1.0) * cfg.lambda + 1e-12);
  }
}

TEST_CASE("ordering loss gradients match finite differences away from kinks") {
  const auto t0 = random_table(4, 16, 3, 9);
  const auto split = testutil::toy_split(4, 16, 4, 9);
  RegConfig cfg;
  cfg.k = 3;
  cfg.lambda = 0.4;  // wide margins keep plenty of hinges active
  auto snap = make_snapshot(t0, split.train_items, cfg, 9);
  EmbeddingTable t = t0;
  // drift away from the snapshot so the loss surface is non-trivial
  Rng rng(10, "rankreg-drift");
  for (Eigen::Index i = 0; i < t.user_emb.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.user_emb.cols(); ++j) t.user_emb(i, j) += rng.gaussian(0, 0.3);
  }
  REQUIRE(min_abs_hinge_argument(t, snap, cfg.lambda) > 1e-3);  // finite differences stay valid

  Mat gu, gv;
  const double loss = rank_reg_loss_grad(t, snap, cfg.lambda, gu, gv);
  REQUIRE(loss == Catch::Approx(rank_reg_loss(t, snap, cfg.lambda)).epsilon(1e-12));
  REQUIRE(loss > 0.0);

  const auto loss_fn = [&]() { return rank_reg_loss(t, snap, cfg.lambda); };
  REQUIRE(testutil::max_fd_rel_error(t.user_emb, gu, loss_fn) < 1e-4);
  REQUIRE(testutil::max_fd_rel_error(t.item_emb, gv, loss_fn) < 1e-4);
}

TEST_CASE("parameter-space pullback loss and gradient") {
  Mat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b.setZero();
  REQUIRE(l2_reg_loss(a, a) == 0.0);
  REQUIRE(l2_reg_loss(a, b) == Catch::Approx(30.0));
  const Mat g = l2_reg_grad(a, b);
  REQUIRE(g == (2.0 * a).eval());
  Mat wrong(3, 2);
  wrong.setZero();
  REQUIRE_THROWS_AS(l2_reg_loss(a, wrong), std::invalid_argument);
  REQUIRE_THROWS_AS(l2_reg_grad(a, wrong), std::invalid_argument);

  // finite-difference check through a scalar wrapper
  Mat theta = a;
  const Mat analytic = l2_reg_grad(theta, b);
  const auto loss_fn = [&]() { return l2_reg_loss(theta, b); };
  REQUIRE(testutil::max_fd_rel_error(theta, analytic, loss_fn) < 1e-6);
}
