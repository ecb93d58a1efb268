#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "aurec/model.hpp"
#include "helpers.hpp"

using namespace aurec;

namespace {

// One user, two items, a single training pair (0, 0): the only possible
// sampled negative is item 1, which makes the epoch's losses and gradients
// available in closed form.
SplitSet forced_negative_split() {
  SplitSet s;
  s.num_users = 1;
  s.num_items = 2;
  s.train = {{0, 0}};
  s.train_items = {{0}};
  s.valid = {1};
  s.test = {1};
  return s;
}

}  // namespace

TEST_CASE("init_embeddings draws small centered values deterministically") {
  const auto a = init_embeddings(40, 60, 8, 9);
  const auto b = init_embeddings(40, 60, 8, 9);
  REQUIRE(a.user_emb == b.user_emb);
  REQUIRE(a.item_emb == b.item_emb);
  REQUIRE(a.num_users() == 40);
  REQUIRE(a.num_items() == 60);
  REQUIRE(a.dim() == 8);
  const auto c = init_embeddings(40, 60, 8, 10);
  REQUIRE(a.user_emb != c.user_emb);
  const double mean = a.user_emb.mean();
  const double var = (a.user_emb.array() - mean).square().mean();
  REQUIRE(std::abs(mean) < 0.002);
  REQUIRE(std::sqrt(var) == Catch::Approx(0.01).margin(0.002));
  REQUIRE_THROWS_AS(init_embeddings(0, 5, 4, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(init_embeddings(5, 5, 0, 1), std::invalid_argument);
}

TEST_CASE("score is the user-item dot product") {
  EmbeddingTable t;
  t.user_emb.resize(2, 3);
  t.user_emb << 1, 2, 3, 0, -1, 0;
  t.item_emb.resize(2, 3);
  t.item_emb << 4, 5, 6, 1, 1, 1;
  REQUIRE(score(t, 0, 0) == Catch::Approx(32.0));
  REQUIRE(score(t, 1, 1) == Catch::Approx(-1.0));
  REQUIRE_THROWS_AS(score(t, 2, 0), std::out_of_range);
  REQUIRE_THROWS_AS(score(t, 0, 2), std::out_of_range);
}

TEST_CASE("recommend_topk orders by score with ascending-id ties") {
  EmbeddingTable t;
  t.user_emb.resize(1, 2);
  t.user_emb << 1, 0;
  t.item_emb.resize(5, 2);
  // scores: 0.5, 2.0, 1.0, -1.0, 1.0 (items 2 and 4 tie)
  t.item_emb << 0.5, 9, 2.0, 9, 1.0, 9, -1.0, 9, 1.0, 9;
  const auto top = recommend_topk(t, 0, 4, {});
  REQUIRE(top.size() == 4);
  REQUIRE(top[0].item == 1);
  REQUIRE(top[1].item == 2);  // tie with 4 broken by smaller id
  REQUIRE(top[2].item == 4);
  REQUIRE(top[3].item == 0);
  REQUIRE(top[0].score == Catch::Approx(2.0));

  const auto excl = recommend_topk(t, 0, 2, {1, 2});
  REQUIRE(excl[0].item == 4);
  REQUIRE(excl[1].item == 0);

  REQUIRE_THROWS_AS(recommend_topk(t, 0, 4, {1, 2}), std::invalid_argument);
  REQUIRE_THROWS_AS(recommend_topk(t, 1, 1, {}), std::out_of_range);
}

TEST_CASE("bpr training reduces the loss and is deterministic") {
  const auto split = testutil::toy_split(30, 50, 8, 5);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 15;
  cfg.batch_size = 64;
  cfg.seed = 2;
  auto t1 = init_embeddings(split.num_users, split.num_items, 8, cfg.seed);
  const auto trace1 = train_bpr(t1, split, cfg);
  REQUIRE(trace1.epoch_loss.size() == cfg.epochs);
  REQUIRE(trace1.epoch_loss.back() < trace1.epoch_loss.front());
  auto t2 = init_embeddings(split.num_users, split.num_items, 8, cfg.seed);
  const auto trace2 = train_bpr(t2, split, cfg);
  REQUIRE(t1.user_emb == t2.user_emb);
  REQUIRE(t1.item_emb == t2.item_emb);
  REQUIRE(trace1.epoch_loss == trace2.epoch_loss);
}

TEST_CASE("ce training reduces the loss") {
  const auto split = testutil::toy_split(30, 50, 8, 6);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 15;
  cfg.batch_size = 64;
  cfg.seed = 2;
  cfg.loss = LossKind::ce;
  auto t = init_embeddings(split.num_users, split.num_items, 8, cfg.seed);
  const auto trace = train(t, split, cfg);
  REQUIRE(trace.epoch_loss.back() < trace.epoch_loss.front());
}

TEST_CASE("bpr epoch applies the closed-form gradient of its loss") {
  const auto split = forced_negative_split();
  auto t0 = init_embeddings(1, 2, 4, 42);
  t0.user_emb *= 60.0;  // lift away from the tiny init so gradients are non-trivial
  t0.item_emb *= 60.0;
  TrainConfig cfg;
  cfg.learning_rate = 0.125;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.seed = 3;
  auto t = t0;
  const auto trace = train_bpr(t, split, cfg);

  const Eigen::RowVectorXd u = t0.user_emb.row(0);
  const Eigen::RowVectorXd diff = t0.item_emb.row(0) - t0.item_emb.row(1);
  const double x = u.dot(diff);
  const double expected_loss = std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0);
  REQUIRE(trace.epoch_loss[0] == Catch::Approx(expected_loss).epsilon(1e-12));

  const double g = -sigmoid(-x);
  const Eigen::RowVectorXd gu = (t0.user_emb.row(0) - t.user_emb.row(0)) / cfg.learning_rate;
  const Eigen::RowVectorXd gv0 = (t0.item_emb.row(0) - t.item_emb.row(0)) / cfg.learning_rate;
  const Eigen::RowVectorXd gv1 = (t0.item_emb.row(1) - t.item_emb.row(1)) / cfg.learning_rate;
  REQUIRE((gu - g * diff).norm() < 1e-12);
  REQUIRE((gv0 - g * u).norm() < 1e-12);
  REQUIRE((gv1 + g * u).norm() < 1e-12);

  // cross-check the analytic user gradient against finite differences of the loss
  Mat user_param = t0.user_emb;
  Mat analytic(1, 4);
  analytic.row(0) = g * diff;
  const auto loss_fn = [&]() {
    const double xx = user_param.row(0).dot(t0.item_emb.row(0) - t0.item_emb.row(1));
    return std::log1p(std::exp(-std::abs(xx))) + std::max(-xx, 0.0);
  };
  REQUIRE(testutil::max_fd_rel_error(user_param, analytic, loss_fn) < 1e-5);
}

TEST_CASE("ce epoch applies the closed-form gradient of its loss") {
  const auto split = forced_negative_split();
  auto t0 = init_embeddings(1, 2, 4, 11);
  t0.user_emb *= 60.0;
  t0.item_emb *= 60.0;
  TrainConfig cfg;
  cfg.learning_rate = 0.125;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.seed = 3;
  cfg.loss = LossKind::ce;
  auto t = t0;
  const auto trace = train_ce(t, split, cfg);

  const Eigen::RowVectorXd u = t0.user_emb.row(0);
  const Eigen::RowVectorXd v0 = t0.item_emb.row(0);
  const Eigen::RowVectorXd v1 = t0.item_emb.row(1);
  const double s_pos = u.dot(v0);
  const double s_neg = u.dot(v1);
  const auto softplus = [](double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); };
  // positive labeled 1: softplus(-s); negative labeled 0: softplus(s); trace stores the mean
  const double expected_loss = 0.5 * (softplus(-s_pos) + softplus(s_neg));
  REQUIRE(trace.epoch_loss[0] == Catch::Approx(expected_loss).epsilon(1e-12));

  const double g_pos = sigmoid(s_pos) - 1.0;
  const double g_neg = sigmoid(s_neg);
  const Eigen::RowVectorXd gu = (t0.user_emb.row(0) - t.user_emb.row(0)) / cfg.learning_rate;
  const Eigen::RowVectorXd gv0 = (t0.item_emb.row(0) - t.item_emb.row(0)) / cfg.learning_rate;
  const Eigen::RowVectorXd gv1 = (t0.item_emb.row(1) - t.item_emb.row(1)) / cfg.learning_rate;
  REQUIRE((gu - (g_pos * v0 + g_neg * v1)).norm() < 1e-12);
  REQUIRE((gv0 - g_pos * u).norm() < 1e-12);
  REQUIRE((gv1 - g_neg * u).norm() < 1e-12);
}

TEST_CASE("training a user who interacted with every item fails") {
  SplitSet s;
  s.num_users = 1;
  s.num_items = 1;
  s.train = {{0, 0}};
  s.train_items = {{0}};
  s.valid = {0};
  s.test = {0};
  auto t = init_embeddings(1, 1, 4, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  REQUIRE_THROWS_AS(train_bpr(t, s, cfg), std::runtime_error);
}

TEST_CASE("train config validation") {
  const auto split = forced_negative_split();
  auto t = init_embeddings(1, 2, 4, 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  REQUIRE_THROWS_AS(train_bpr(t, split, cfg), std::invalid_argument);
  cfg.learning_rate = 0.1;
  cfg.epochs = 0;
  REQUIRE_THROWS_AS(train_bpr(t, split, cfg), std::invalid_argument);
  cfg.epochs = 1;
  cfg.loss = LossKind::ce;
  cfg.neg_per_pos = 0;
  REQUIRE_THROWS_AS(train_ce(t, split, cfg), std::invalid_argument);
}

TEST_CASE("embedding files round-trip bit-exactly after float32 quantization") {
  auto t = init_embeddings(7, 9, 5, 21);
  t.user_emb *= 3.7;  // values that do not round-trip through float32 unchanged
  quantize_f32(t);
  const auto before_user = t.user_emb;
  const auto before_item = t.item_emb;
  quantize_f32(t);  // idempotent once snapped
  REQUIRE(t.user_emb == before_user);
  REQUIRE(t.item_emb == before_item);

  const auto path = testutil::scratch() / "roundtrip.emb";
  save_embeddings(t, path);
  const auto back = load_embeddings(path);
  REQUIRE(back.user_emb == t.user_emb);
  REQUIRE(back.item_emb == t.item_emb);

  // header layout: magic then three little-endian u32 sizes
  std::ifstream in(path, std::ios::binary);
  char magic[4];
  std::uint32_t dims[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  REQUIRE(std::string(magic, 4) == "EMB1");
  REQUIRE(dims[0] == 7);
  REQUIRE(dims[1] == 9);
  REQUIRE(dims[2] == 5);
}

TEST_CASE("corrupt embedding files are rejected") {
  const auto bad_magic = testutil::scratch() / "bad_magic.emb";
  {
    std::ofstream out(bad_magic, std::ios::binary);
    out << "NOPE" << std::string(12, '\0');
  }
  REQUIRE_THROWS_WITH(load_embeddings(bad_magic), Catch::Matchers::ContainsSubstring("bad magic"));

  auto t = init_embeddings(4, 4, 4, 1);
  const auto full = testutil::scratch() / "full.emb";
  save_embeddings(t, full);
  const auto truncated = testutil::scratch() / "truncated.emb";
  {
    const std::string bytes = testutil::slurp(full);
    std::ofstream out(truncated, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  REQUIRE_THROWS_WITH(load_embeddings(truncated), Catch::Matchers::ContainsSubstring("truncated"));
  REQUIRE_THROWS(load_embeddings(testutil::scratch() / "does_not_exist.emb"));
}
