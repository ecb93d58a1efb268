#pragma once
// Embedding-table collaborative filtering: dot-product scoring, BPR/CE
// training with negative sampling, top-k recommendation, binary persistence.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "aurec/dataset.hpp"
#include "aurec/rng.hpp"

namespace aurec {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EmbeddingTable {
  Mat user_emb;  // M x d
  Mat item_emb;  // N x d

  std::uint32_t num_users() const { return static_cast<std::uint32_t>(user_emb.rows()); }
  std::uint32_t num_items() const { return static_cast<std::uint32_t>(item_emb.rows()); }
  std::uint32_t dim() const { return static_cast<std::uint32_t>(user_emb.cols()); }
};

inline EmbeddingTable init_embeddings(std::uint32_t M, std::uint32_t N, std::uint32_t d,
                                      std::uint64_t seed) {
  if (M < 1 || N < 1 || d < 1) throw std::invalid_argument("init_embeddings: M, N, d must be >= 1");
  Rng rng(seed, "init");
  EmbeddingTable t;
  t.user_emb.resize(M, d);
  t.item_emb.resize(N, d);
  for (Eigen::Index i = 0; i < t.user_emb.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.user_emb.cols(); ++j) t.user_emb(i, j) = rng.gaussian(0.0, 0.01);
  }
  for (Eigen::Index i = 0; i < t.item_emb.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.item_emb.cols(); ++j) t.item_emb(i, j) = rng.gaussian(0.0, 0.01);
  }
  return t;
}

inline double score(const EmbeddingTable& t, std::uint32_t u, std::uint32_t v) {
  if (u >= t.num_users()) throw std::out_of_range("score: user id out of range");
  if (v >= t.num_items()) throw std::out_of_range("score: item id out of range");
  return t.user_emb.row(u).dot(t.item_emb.row(v));
}

struct ScoredItem {
  std::uint32_t item;
  double score;
};

// k best-scoring items for u excluding `exclude`, descending score, ties by ascending id.
inline std::vector<ScoredItem> recommend_topk(const EmbeddingTable& t, std::uint32_t u,
                                              std::uint32_t k,
                                              const std::vector<std::uint32_t>& exclude) {
  if (u >= t.num_users()) throw std::out_of_range("recommend_topk: user id out of range");
  const std::uint32_t N = t.num_items();
  std::vector<char> banned(N, 0);
  std::uint32_t eligible = N;
  for (const auto v : exclude) {
    if (v < N && !banned[v]) {
      banned[v] = 1;
      --eligible;
    }
  }
  if (k > eligible) throw std::invalid_argument("recommend_topk: k exceeds candidate count");
  const Eigen::VectorXd s = t.item_emb * t.user_emb.row(u).transpose();
  std::vector<std::uint32_t> cand;
  cand.reserve(eligible);
  for (std::uint32_t v = 0; v < N; ++v) {
    if (!banned[v]) cand.push_back(v);
  }
  const auto better = [&s](std::uint32_t a, std::uint32_t b) {
    return s[a] != s[b] ? s[a] > s[b] : a < b;
  };
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), better);
  std::vector<ScoredItem> out;
  out.reserve(k);
  for (std::uint32_t i = 0; i < k; ++i) out.push_back({cand[i], s[cand[i]]});
  return out;
}

enum class LossKind { bpr, ce };

struct TrainConfig {
  double learning_rate = 0.001;
  std::uint32_t epochs = 20;
  std::uint32_t batch_size = 1024;
  std::uint32_t neg_per_pos = 1;  // CE only
  std::uint64_t seed = 1;
  LossKind loss = LossKind::bpr;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

// Per-user interacted-item sets for negative-sample rejection.
inline std::vector<std::unordered_set<std::uint32_t>> interacted_sets(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& train, std::uint32_t M) {
  std::vector<std::unordered_set<std::uint32_t>> sets(M);
  for (const auto& [u, i] : train) sets[u].insert(i);
  return sets;
}

inline std::uint32_t sample_negative(Rng& rng, const std::unordered_set<std::uint32_t>& seen,
                                     std::uint32_t N) {
  if (seen.size() >= N) throw std::runtime_error("no negative items available");
  while (true) {
    const auto v = static_cast<std::uint32_t>(rng.below(N));
    if (!seen.count(v)) return v;
  }
}

// Sparse accumulator: dense delta rows + touched-row list, reset after each batch.
class RowDelta {
 public:
  RowDelta(Eigen::Index rows, Eigen::Index cols) : delta_(rows, cols), touched_flag_(rows, 0) {
    delta_.setZero();
  }
  template <typename Expr>
  void add(std::uint32_t row, const Expr& v) {
    if (!touched_flag_[row]) {
      touched_flag_[row] = 1;
      touched_.push_back(row);
    }
    delta_.row(row) += v;
  }
  void apply_and_reset(Mat& target, double lr) {
    for (const auto r : touched_) {
      target.row(r) -= lr * delta_.row(r);
      delta_.row(r).setZero();
      touched_flag_[r] = 0;
    }
    touched_.clear();
  }

 private:
  Mat delta_;
  std::vector<char> touched_flag_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace detail

struct TrainTrace {
  std::vector<double> epoch_loss;  // mean per-sample loss per epoch
};

namespace detail {

// BPR core; `epoch_hook(table, epoch)` runs after each epoch's batch updates
// and must not touch this function's RNG stream, so a no-op hook leaves the
// optimization byte-identical to not having one.
template <typename Hook>
TrainTrace train_bpr_hooked(EmbeddingTable& t, const SplitSet& split, const TrainConfig& cfg,
                            Hook&& epoch_hook) {
  if (cfg.learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  const std::uint32_t M = t.num_users();
  const std::uint32_t N = t.num_items();
  const auto seen = detail::interacted_sets(split.train, M);
  std::vector<std::uint32_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  Rng rng(cfg.seed, "train:bpr");
  detail::RowDelta du(t.user_emb.rows(), t.user_emb.cols());
  detail::RowDelta dv(t.item_emb.rows(), t.item_emb.cols());
  TrainTrace trace;
  Eigen::RowVectorXd diff(t.dim());
  for (std::uint32_t ep = 0; ep < cfg.epochs; ++ep) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::uint32_t in_batch = 0;
    for (const auto idx : order) {
      const auto [u, v] = split.train[idx];
      const auto vn = detail::sample_negative(rng, seen[u], N);
      diff = t.item_emb.row(v) - t.item_emb.row(vn);
      const double x = t.user_emb.row(u).dot(diff);
      // -log sigmoid(x); d/dx = -sigmoid(-x)
      loss_sum += x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
      const double g = -sigmoid(-x);
      du.add(u, g * diff);
      dv.add(v, g * t.user_emb.row(u));
      dv.add(vn, -g * t.user_emb.row(u));
      if (++in_batch == cfg.batch_size) {
        du.apply_and_reset(t.user_emb, cfg.learning_rate);
        dv.apply_and_reset(t.item_emb, cfg.learning_rate);
        in_batch = 0;
      }
    }
    if (in_batch > 0) {
      du.apply_and_reset(t.user_emb, cfg.learning_rate);
      dv.apply_and_reset(t.item_emb, cfg.learning_rate);
    }
    const double mean_loss = loss_sum / static_cast<double>(split.train.size());
    if (!std::isfinite(mean_loss)) {
      throw std::runtime_error("train_bpr: non-finite loss at epoch " + std::to_string(ep));
    }
    trace.epoch_loss.push_back(mean_loss);
    epoch_hook(t, ep);
  }
  return trace;
}

}  // namespace detail

// BPR: minimize mean over positives of -log sigmoid(s_uv - s_uv-), one fresh
// uniform non-interacted negative per positive per epoch. Mini-batch SGD where
// each batch applies the sum of its per-sample gradients.
inline TrainTrace train_bpr(EmbeddingTable& t, const SplitSet& split, const TrainConfig& cfg) {
  return detail::train_bpr_hooked(t, split, cfg, [](EmbeddingTable&, std::uint32_t) {});
}

// Binary cross-entropy on sigmoid(score): positives labeled 1, cfg.neg_per_pos
// fresh uniform non-interacted negatives labeled 0, resampled each epoch.
inline TrainTrace train_ce(EmbeddingTable& t, const SplitSet& split, const TrainConfig& cfg) {
  if (cfg.learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.neg_per_pos < 1) throw std::invalid_argument("neg_per_pos must be >= 1");
  const std::uint32_t M = t.num_users();
  const std::uint32_t N = t.num_items();
  const auto seen = detail::interacted_sets(split.train, M);
  std::vector<std::uint32_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  Rng rng(cfg.seed, "train:ce");
  detail::RowDelta du(t.user_emb.rows(), t.user_emb.cols());
  detail::RowDelta dv(t.item_emb.rows(), t.item_emb.cols());
  TrainTrace trace;
  for (std::uint32_t ep = 0; ep < cfg.epochs; ++ep) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t terms = 0;
    std::uint32_t in_batch = 0;
    auto step_pair = [&](std::uint32_t u, std::uint32_t v, double label) {
      const double x = t.user_emb.row(u).dot(t.item_emb.row(v));
      const double p = sigmoid(x);
      // -[label log p + (1-label) log(1-p)], numerically via softplus
      loss_sum += (x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x))) +
                  (1.0 - label) * x;
      const double g = p - label;  // d loss / d x
      du.add(u, g * t.item_emb.row(v));
      dv.add(v, g * t.user_emb.row(u));
      ++terms;
    };
    for (const auto idx : order) {
      const auto [u, v] = split.train[idx];
      step_pair(u, v, 1.0);
      for (std::uint32_t n = 0; n < cfg.neg_per_pos; ++n) {
        step_pair(u, detail::sample_negative(rng, seen[u], N), 0.0);
      }
      if (++in_batch == cfg.batch_size) {
        du.apply_and_reset(t.user_emb, cfg.learning_rate);
        dv.apply_and_reset(t.item_emb, cfg.learning_rate);
        in_batch = 0;
      }
    }
    if (in_batch > 0) {
      du.apply_and_reset(t.user_emb, cfg.learning_rate);
      dv.apply_and_reset(t.item_emb, cfg.learning_rate);
    }
    const double mean_loss = loss_sum / static_cast<double>(terms);
    if (!std::isfinite(mean_loss)) {
      throw std::runtime_error("train_ce: non-finite loss at epoch " + std::to_string(ep));
    }
    trace.epoch_loss.push_back(mean_loss);
  }
  return trace;
}

inline TrainTrace train(EmbeddingTable& t, const SplitSet& split, const TrainConfig& cfg) {
  return cfg.loss == LossKind::bpr ? train_bpr(t, split, cfg) : train_ce(t, split, cfg);
}

// Snap every entry to its nearest float32 value. Applied at the end of
// training/unlearning so that in-memory results match persisted ones exactly.
inline void quantize_f32(EmbeddingTable& t) {
  for (auto* m : {&t.user_emb, &t.item_emb}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) {
        (*m)(i, j) = static_cast<double>(static_cast<float>((*m)(i, j)));
      }
    }
  }
}

// ---- binary persistence ----
// layout: "EMB1" magic, little-endian u32 M, N, d, then M*d float32 user rows
// (row-major) followed by N*d float32 item rows.

inline void save_embeddings(const EmbeddingTable& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out.write("EMB1", 4);
  const std::uint32_t dims[3] = {t.num_users(), t.num_items(), t.dim()};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<float> row(t.dim());
  for (const auto* m : {&t.user_emb, &t.item_emb}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) row[static_cast<std::size_t>(j)] = static_cast<float>((*m)(i, j));
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embeddings file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "EMB1", 4) != 0) {
    throw std::runtime_error("bad magic in embeddings file: " + path.string());
  }
  std::uint32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw std::runtime_error("truncated embeddings header: " + path.string());
  EmbeddingTable t;
  t.user_emb.resize(dims[0], dims[2]);
  t.item_emb.resize(dims[1], dims[2]);
  std::vector<float> row(dims[2]);
  for (auto* m : {&t.user_emb, &t.item_emb}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
      if (!in) throw std::runtime_error("truncated embeddings data: " + path.string());
      for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = static_cast<double>(row[static_cast<std::size_t>(j)]);
    }
  }
  return t;
}

}  // namespace aurec
