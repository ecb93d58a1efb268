#include <catch2/catch_amalgamated.hpp>

#include "aurec/metrics.hpp"
#include "helpers.hpp"

using namespace aurec;

namespace {

// One user over six items with hand-set scores 5, 3, 9, 1, 3, 0.
EmbeddingTable scored_table() {
  EmbeddingTable t;
  t.user_emb.resize(1, 1);
  t.user_emb << 1.0;
  t.item_emb.resize(6, 1);
  t.item_emb << 5, 3, 9, 1, 3, 0;
  return t;
}

}  // namespace

TEST_CASE("test item rank excludes train and valid and breaks ties by id") {
  const auto t = scored_table();
  SplitSet s;
  s.num_users = 1;
  s.num_items = 6;
  s.train_items = {{0}};  // score 5 no longer competes
  s.valid = {2};          // score 9 no longer competes
  s.test = {4};           // score 3; item 1 ties at 3 and has the smaller id
  const auto ranks = test_item_ranks(t, s);
  REQUIRE(ranks == std::vector<std::uint32_t>{2});

  s.test = {1};  // same score but now the tied competitor has the larger id
  REQUIRE(test_item_ranks(t, s) == std::vector<std::uint32_t>{1});

  s.train_items = {{}};
  s.valid = {5};
  s.test = {3};  // score 1; beaten by 5, 9, 3, 3
  REQUIRE(test_item_ranks(t, s) == std::vector<std::uint32_t>{5});
}

TEST_CASE("hit ratio and ndcg at K from a known rank") {
  const auto t = scored_table();
  SplitSet s;
  s.num_users = 1;
  s.num_items = 6;
  s.train_items = {{0}};
  s.valid = {2};
  s.test = {4};  // rank 2
  const auto rep = eval_ranking(t, s, {1, 2, 5});
  REQUIRE(rep.hr.at(1) == 0.0);
  REQUIRE(rep.ndcg.at(1) == 0.0);
  REQUIRE(rep.hr.at(2) == 1.0);
  REQUIRE(rep.ndcg.at(2) == Catch::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
  REQUIRE(rep.hr.at(5) == 1.0);
  REQUIRE(rep.rbo10_vs_original < 0.0);  // not evaluated by eval_ranking
}

TEST_CASE("ranking metrics keep their structural relations on random data") {
  const auto split = testutil::toy_split(25, 60, 8, 17);
  const auto t = init_embeddings(split.num_users, split.num_items, 6, 17);
  const auto rep = eval_ranking(t, split, {1, 5, 10, 60});
  double prev_hr = 0.0, prev_ndcg = 0.0;
  for (const auto k : {1u, 5u, 10u, 60u}) {
    REQUIRE(rep.hr.at(k) >= prev_hr);
    REQUIRE(rep.ndcg.at(k) >= prev_ndcg);
    REQUIRE(rep.hr.at(k) >= rep.ndcg.at(k));
    REQUIRE(rep.ndcg.at(k) >= 0.0);
    REQUIRE(rep.hr.at(k) <= 1.0);
    prev_hr = rep.hr.at(k);
    prev_ndcg = rep.ndcg.at(k);
  }
  REQUIRE(rep.hr.at(60) == 1.0);  // every rank fits inside the full catalogue
}

TEST_CASE("rank-biased overlap oracle values") {
  REQUIRE(rbo({1, 2, 3}, {1, 2, 3}, 0.9) == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(rbo({1, 2, 3}, {1, 3, 2}, 0.9) == Catch::Approx(0.8339483394833948).epsilon(1e-12));
  REQUIRE(rbo({1, 2, 3}, {4, 5, 6}, 0.9) == 0.0);
  // swapped head weighs more than an identical head with swapped tail
  REQUIRE(rbo({2, 1, 3}, {1, 2, 3}, 0.9) < rbo({1, 3, 2}, {1, 2, 3}, 0.9));
}

TEST_CASE("rank-biased overlap stays within [0,1] on random permutations") {
  Rng rng(99, "rbo-prop");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint32_t> a(12), b(12);
    for (std::uint32_t i = 0; i < 12; ++i) a[i] = b[i] = i;
    rng.shuffle(a);
    rng.shuffle(b);
    const double v = rbo(a, b, 0.9);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0 + 1e-12);
    REQUIRE(rbo(a, b, 0.9) == Catch::Approx(rbo(b, a, 0.9)).epsilon(1e-12));
  }
}

TEST_CASE("rank-biased overlap input validation") {
  REQUIRE_THROWS_AS(rbo({1, 2}, {1}, 0.9), std::invalid_argument);
  REQUIRE_THROWS_AS(rbo({}, {}, 0.9), std::invalid_argument);
  REQUIRE_THROWS_AS(rbo({1}, {1}, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(rbo({1}, {1}, 1.0), std::invalid_argument);
}

TEST_CASE("micro f1 equals accuracy for single-label predictions") {
  REQUIRE(micro_f1({0, 1, 1, 2}, {0, 1, 2, 2}) == Catch::Approx(0.75));
  REQUIRE(micro_f1({3, 3}, {3, 3}) == 1.0);
  REQUIRE_THROWS_AS(micro_f1({0, 1}, {0}), std::invalid_argument);
  REQUIRE_THROWS_AS(micro_f1({}, {}), std::invalid_argument);
}

TEST_CASE("balanced accuracy averages per-class recall") {
  REQUIRE(balanced_accuracy({0, 0, 0, 1}, {0, 0, 0, 0}) == Catch::Approx(0.5));
  // a constant predictor on a T-class problem scores exactly 1/T
  REQUIRE(balanced_accuracy({0, 0, 1, 2, 2, 2}, {1, 1, 1, 1, 1, 1}) == Catch::Approx(1.0 / 3.0));
  // absent classes do not contribute
  REQUIRE(balanced_accuracy({0, 2}, {0, 0}) == Catch::Approx(0.5));
  REQUIRE(balanced_accuracy({1, 0, 1, 0}, {1, 0, 1, 0}) == 1.0);
}

TEST_CASE("weighted balanced accuracy uses class-count weights") {
  REQUIRE(wbacc({0.5, 0.4}, {2, 3}) == Catch::Approx(0.44).epsilon(1e-12));
  REQUIRE(wbacc({0.7, 0.1}, {5, 5}) == Catch::Approx(0.4));
  const double v = wbacc({0.9, 0.2, 0.6}, {2, 3, 3});
  REQUIRE(v >= 0.2);
  REQUIRE(v <= 0.9);
  REQUIRE_THROWS_AS(wbacc({0.5}, {1, 2}), std::invalid_argument);
  REQUIRE_THROWS_AS(wbacc({0.5, 0.5}, {1, 0}), std::invalid_argument);
  REQUIRE_THROWS_AS(wbacc({}, {}), std::invalid_argument);
}

TEST_CASE("pearson correlation endpoints") {
  REQUIRE(pearson({1, 2, 3, 4}, {3, 5, 7, 9}) == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(pearson({1, 2, 3}, {-1, -2, -3}) == Catch::Approx(-1.0).epsilon(1e-12));
  REQUIRE(pearson({-1, 0, 1}, {1, 0, 1}) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
  REQUIRE_THROWS_AS(pearson({1}, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(pearson({1, 2}, {1, 2, 3}), std::invalid_argument);
}
