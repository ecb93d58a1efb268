#pragma once
// Recommendation-preserving regularizers used during unlearning: a hinge loss
// that keeps each user's pre-unlearning top-k ordering (with per-pair adaptive
// margins frozen at snapshot time), and a plain parameter-space l2 pull-back.
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aurec/model.hpp"
#include "aurec/rng.hpp"

namespace aurec {

struct RegConfig {
  std::uint32_t k = 20;     // length of the protected top-k list
  double lambda = 0.05;     // base margin
  double tau = 1000.0;      // similarity temperature for adaptive weights
};

// w(a, b) = 1 - sigmoid(cos(a, b) / tau): similar item pairs get margins near
// lambda/2, dissimilar pairs larger ones. Zero vectors count as orthogonal.
inline double adaptive_weight(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                              const Eigen::Ref<const Eigen::RowVectorXd>& b, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("adaptive_weight: tau must be positive");
  const double na = a.norm();
  const double nb = b.norm();
  const double cos = (na > 0.0 && nb > 0.0) ? a.dot(b) / (na * nb) : 0.0;
  return 1.0 - sigmoid(cos / tau);
}

// Frozen at unlearning start: per-user top-k lists, one sampled negative per
// list slot (outside train and top-k), and the adaptive margin weights
// computed from the item embeddings as they were at snapshot time.
struct TopKSnapshot {
  std::uint32_t k = 0;
  std::vector<std::vector<std::uint32_t>> tops;  // [user][j], ranked best first
  std::vector<std::vector<std::uint32_t>> negs;  // [user][j]
  Mat wpos;  // [user][j] weight for pair (tops[j+1], tops[j]); k-1 columns
  Mat wneg;  // [user][j] weight for pair (negs[j], tops[j]); k columns
};

inline TopKSnapshot make_snapshot(const EmbeddingTable& table,
                                  const std::vector<std::vector<std::uint32_t>>& train_items,
                                  const RegConfig& cfg, std::uint64_t seed) {
  const std::uint32_t M = table.num_users();
  const std::uint32_t N = table.num_items();
  if (cfg.k < 1) throw std::invalid_argument("make_snapshot: k must be >= 1");
  if (train_items.size() != M) throw std::invalid_argument("make_snapshot: train_items size mismatch");
  TopKSnapshot snap;
  snap.k = cfg.k;
  snap.tops.resize(M);
  snap.negs.resize(M);
  snap.wpos.resize(M, cfg.k > 1 ? cfg.k - 1 : 0);
  snap.wneg.resize(M, cfg.k);
  Rng rng(seed, "snapshot:negs");
  std::vector<char> banned(N);
  for (std::uint32_t u = 0; u < M; ++u) {
    const auto top = recommend_topk(table, u, cfg.k, train_items[u]);
    snap.tops[u].reserve(cfg.k);
    for (const auto& s : top) snap.tops[u].push_back(s.item);
    std::fill(banned.begin(), banned.end(), 0);
    for (auto v : train_items[u]) banned[v] = 1;
    for (auto v : snap.tops[u]) banned[v] = 1;
    std::vector<std::uint32_t> cand;
    cand.reserve(N);
    for (std::uint32_t v = 0; v < N; ++v) {
      if (!banned[v]) cand.push_back(v);
    }
    if (cand.size() < cfg.k) {
      throw std::runtime_error("make_snapshot: user " + std::to_string(u) +
                               " has fewer than k items outside train and top-k");
    }
    const auto pick = rng.sample_without_replacement(static_cast<std::uint32_t>(cand.size()), cfg.k);
    snap.negs[u].reserve(cfg.k);
    for (auto idx : pick) snap.negs[u].push_back(cand[idx]);
    for (std::uint32_t j = 0; j + 1 < cfg.k; ++j) {
      snap.wpos(u, j) = adaptive_weight(table.item_emb.row(snap.tops[u][j + 1]),
                                        table.item_emb.row(snap.tops[u][j]), cfg.tau);
    }
    for (std::uint32_t j = 0; j < cfg.k; ++j) {
      snap.wneg(u, j) = adaptive_weight(table.item_emb.row(snap.negs[u][j]),
                                        table.item_emb.row(snap.tops[u][j]), cfg.tau);
    }
  }
  return snap;
}

// Hinge loss over every user: adjacent top-k pairs must stay ordered and each
// top item must stay above its sampled negative, both with margin w * lambda.
// Summed (not averaged) over users and terms.
inline double rank_reg_loss(const EmbeddingTable& table, const TopKSnapshot& snap, double lambda) {
  const std::uint32_t M = table.num_users();
  if (snap.tops.size() != M) throw std::invalid_argument("rank_reg_loss: snapshot size mismatch");
  double loss = 0.0;
  for (std::uint32_t u = 0; u < M; ++u) {
    const auto& tops = snap.tops[u];
    const auto& negs = snap.negs[u];
    for (std::uint32_t j = 0; j + 1 < snap.k; ++j) {
      const double z = score(table, u, tops[j + 1]) - score(table, u, tops[j]) +
                       snap.wpos(u, j) * lambda;
      if (z > 0.0) loss += z;
    }
    for (std::uint32_t j = 0; j < snap.k; ++j) {
      const double z = score(table, u, negs[j]) - score(table, u, tops[j]) +
                       snap.wneg(u, j) * lambda;
      if (z > 0.0) loss += z;
    }
  }
  return loss;
}

// Loss plus subgradients w.r.t. user and item embeddings (zero at hinge kinks).
inline double rank_reg_loss_grad(const EmbeddingTable& table, const TopKSnapshot& snap,
                                 double lambda, Mat& grad_user, Mat& grad_item) {
  const std::uint32_t M = table.num_users();
  if (snap.tops.size() != M) throw std::invalid_argument("rank_reg_loss_grad: snapshot size mismatch");
  grad_user.resize(table.user_emb.rows(), table.user_emb.cols());
  grad_user.setZero();
  grad_item.resize(table.item_emb.rows(), table.item_emb.cols());
  grad_item.setZero();
  double loss = 0.0;
  for (std::uint32_t u = 0; u < M; ++u) {
    const auto& tops = snap.tops[u];
    const auto& negs = snap.negs[u];
    for (std::uint32_t j = 0; j + 1 < snap.k; ++j) {
      const std::uint32_t lo = tops[j + 1];
      const std::uint32_t hi = tops[j];
      const double z = score(table, u, lo) - score(table, u, hi) + snap.wpos(u, j) * lambda;
      if (z > 0.0) {
        loss += z;
        grad_user.row(u) += table.item_emb.row(lo) - table.item_emb.row(hi);
        grad_item.row(lo) += table.user_emb.row(u);
        grad_item.row(hi) -= table.user_emb.row(u);
      }
    }
    for (std::uint32_t j = 0; j < snap.k; ++j) {
      const std::uint32_t vn = negs[j];
      const std::uint32_t vp = tops[j];
      const double z = score(table, u, vn) - score(table, u, vp) + snap.wneg(u, j) * lambda;
      if (z > 0.0) {
        loss += z;
        grad_user.row(u) += table.item_emb.row(vn) - table.item_emb.row(vp);
        grad_item.row(vn) += table.user_emb.row(u);
        grad_item.row(vp) -= table.user_emb.row(u);
      }
    }
  }
  return loss;
}

// Squared Frobenius distance of the user table from its pre-unlearning state.
inline double l2_reg_loss(const Mat& theta, const Mat& theta0) {
  if (theta.rows() != theta0.rows() || theta.cols() != theta0.cols()) {
    throw std::invalid_argument("l2_reg_loss: shape mismatch");
  }
  return (theta - theta0).squaredNorm();
}

inline Mat l2_reg_grad(const Mat& theta, const Mat& theta0) {
  if (theta.rows() != theta0.rows() || theta.cols() != theta0.cols()) {
    throw std::invalid_argument("l2_reg_grad: shape mismatch");
  }
  return 2.0 * (theta - theta0);
}

}  // namespace aurec
