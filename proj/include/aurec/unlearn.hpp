#pragma once
// Post-training attribute unlearning on user embeddings. Two variants:
//   d2d_fr: anchor-based distinguishability loss + top-k ranking regularizer,
//           L = l_u + alpha * l_r (function-space preservation);
//   d2d_pr: pairwise MMD + pull-back to the original parameters,
//           L = mmd2 + alpha * |theta - theta*|_F^2 (parameter-space).
// Plus a multi-attribute variant (L = l_r + a1*l_u1 + a2*l_u2) and a
// retrain-from-scratch baseline mixing the distinguishability loss into BPR.
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aurec/mmd.hpp"
#include "aurec/model.hpp"
#include "aurec/rankreg.hpp"
#include "aurec/rng.hpp"

namespace aurec {

enum class UnlearnMethod { d2d_fr, d2d_pr };

inline UnlearnMethod parse_unlearn_method(const std::string& s) {
  if (s == "d2d_fr") return UnlearnMethod::d2d_fr;
  if (s == "d2d_pr") return UnlearnMethod::d2d_pr;
  throw std::invalid_argument("unknown unlearn method: " + s);
}

struct UnlearnConfig {
  UnlearnMethod method = UnlearnMethod::d2d_fr;
  double alpha = 2.5e-4;       // trade-off weight on the regularizer
  double learning_rate = 0.001;
  std::uint32_t epochs = 500;
  std::uint64_t seed = 1;
  RegConfig reg;               // top-k snapshot settings (d2d_fr only)
  std::uint32_t anchor_size = 2048;      // capped at the number of users
  std::uint32_t group_cap = 1024;        // per-epoch subsample cap per class
  std::uint32_t bandwidth_sample = 1000; // points used for the median heuristic
  bool freeze_items = false;   // d2d_fr: skip item-embedding updates from l_r
};

struct UnlearnTraceRow {
  std::uint32_t epoch = 0;
  double l_u = 0.0;    // distinguishability component (weighted sum in multi mode)
  double l_reg = 0.0;  // regularizer component
  double total = 0.0;  // l_u + alpha * l_reg (alpha folded into l_u in multi mode)
};

struct UnlearnResult {
  EmbeddingTable table;
  std::vector<UnlearnTraceRow> trace;
  double sigma = 0.0;          // kernel bandwidth frozen at the start
  bool diverged = false;
  std::string diagnostic;
  EvalCounter counter;
  std::vector<double> trace_lu1, trace_lu2;  // per-attribute parts (multi mode)
};

namespace detail {

inline void validate_unlearn_config(const UnlearnConfig& cfg) {
  if (cfg.alpha < 0.0) throw std::invalid_argument("unlearn: alpha must be >= 0");
  if (cfg.epochs < 1) throw std::invalid_argument("unlearn: epochs must be >= 1");
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("unlearn: learning_rate must be > 0");
}

// Per-epoch view of the groups: classes larger than `cap` are subsampled
// without replacement (fresh draw each epoch), smaller ones used whole.
inline GroupIndex subsample_groups(const GroupIndex& groups, std::uint32_t cap, std::uint64_t seed,
                                   std::uint32_t epoch) {
  bool needed = false;
  for (const auto& g : groups.groups) {
    if (g.size() > cap) needed = true;
  }
  if (!needed) return groups;
  Rng rng(seed, "groupsub:" + std::to_string(epoch));
  GroupIndex out = groups;
  for (auto& g : out.groups) {
    if (g.size() <= cap) continue;
    const auto pick = rng.sample_without_replacement(static_cast<std::uint32_t>(g.size()), cap);
    std::vector<std::uint32_t> sub;
    sub.reserve(cap);
    for (auto idx : pick) sub.push_back(g[idx]);
    g = std::move(sub);
  }
  return out;
}

inline bool table_finite(const EmbeddingTable& t) {
  return t.user_emb.allFinite() && t.item_emb.allFinite();
}

}  // namespace detail

// Single-attribute unlearning. The top-k snapshot (d2d_fr) and the original
// parameters (d2d_pr) are captured once before epoch 1; the anchor sample and
// any group subsampling are refreshed every epoch; the kernel bandwidth is the
// median heuristic on the starting user embeddings, frozen for the whole run.
// On a non-finite loss or update the run aborts and returns the last finite
// state with `diverged` set.
inline UnlearnResult unlearn(const EmbeddingTable& table, const GroupIndex& groups,
                             const std::vector<std::vector<std::uint32_t>>& train_items,
                             const UnlearnConfig& cfg) {
  detail::validate_unlearn_config(cfg);
  UnlearnResult res;
  res.table = table;
  const std::uint32_t M = table.num_users();
  KernelSpec kernel{median_bandwidth(table.user_emb, cfg.seed, cfg.bandwidth_sample)};
  res.sigma = kernel.sigma;
  const std::uint32_t S = std::min(M, cfg.anchor_size);

  TopKSnapshot snap;
  Mat theta0;
  if (cfg.method == UnlearnMethod::d2d_fr) {
    snap = make_snapshot(table, train_items, cfg.reg, cfg.seed);
  } else {
    theta0 = table.user_emb;
  }

  Mat backup_user = res.table.user_emb;
  Mat backup_item = res.table.item_emb;
  for (std::uint32_t ep = 0; ep < cfg.epochs; ++ep) {
    const GroupIndex g_ep = detail::subsample_groups(groups, cfg.group_cap, cfg.seed, ep);
    double l_u = 0.0;
    double l_reg = 0.0;
    Mat grad_user_mmd;
    if (cfg.method == UnlearnMethod::d2d_fr) {
      const Mat anchor = sample_anchor(res.table, S, sub_seed(cfg.seed, "epoch:" + std::to_string(ep)));
      l_u = distinguishability_loss_grad(res.table, g_ep, anchor, kernel, grad_user_mmd,
                                         &res.counter);
      Mat grad_user_reg, grad_item_reg;
      if (cfg.alpha > 0.0) {
        l_reg = rank_reg_loss_grad(res.table, snap, cfg.reg.lambda, grad_user_reg, grad_item_reg);
      } else {
        l_reg = rank_reg_loss(res.table, snap, cfg.reg.lambda);
      }
      if (!std::isfinite(l_u) || !std::isfinite(l_reg)) {
        res.diverged = true;
        res.diagnostic = "non-finite loss at epoch " + std::to_string(ep);
        break;
      }
      if (cfg.alpha > 0.0) {
        res.table.user_emb -= cfg.learning_rate * (grad_user_mmd + cfg.alpha * grad_user_reg);
        if (!cfg.freeze_items) res.table.item_emb -= (cfg.learning_rate * cfg.alpha) * grad_item_reg;
      } else {
        res.table.user_emb -= cfg.learning_rate * grad_user_mmd;
      }
    } else {
      l_u = mmd2_pairwise_loss_grad(res.table, g_ep, kernel, grad_user_mmd, &res.counter);
      l_reg = l2_reg_loss(res.table.user_emb, theta0);
      if (!std::isfinite(l_u) || !std::isfinite(l_reg)) {
        res.diverged = true;
        res.diagnostic = "non-finite loss at epoch " + std::to_string(ep);
        break;
      }
      res.table.user_emb -=
          cfg.learning_rate * (grad_user_mmd + cfg.alpha * l2_reg_grad(res.table.user_emb, theta0));
    }
    if (!detail::table_finite(res.table)) {
      res.table.user_emb = backup_user;
      res.table.item_emb = backup_item;
      res.diverged = true;
      res.diagnostic = "non-finite embeddings after epoch " + std::to_string(ep) +
                       "; restored previous state";
      break;
    }
    backup_user = res.table.user_emb;
    backup_item = res.table.item_emb;
    res.trace.push_back({ep, l_u, l_reg, l_u + cfg.alpha * l_reg});
  }
  quantize_f32(res.table);
  return res;
}

// Simultaneous unlearning of two attributes: L = l_r + a1*l_u1 + a2*l_u2 (the
// trade-offs weight the distinguishability terms here, unlike single-attribute
// mode). One anchor sample per epoch serves both attributes. Trace rows carry
// l_u = a1*l_u1 + a2*l_u2 and l_reg = l_r, so total = l_u + l_reg.
inline UnlearnResult unlearn_multi(const EmbeddingTable& table, const GroupIndex& groups1,
                                   const GroupIndex& groups2, double alpha1, double alpha2,
                                   const std::vector<std::vector<std::uint32_t>>& train_items,
                                   const UnlearnConfig& cfg) {
  detail::validate_unlearn_config(cfg);
  if (alpha1 < 0.0 || alpha2 < 0.0) throw std::invalid_argument("unlearn_multi: alphas must be >= 0");
  UnlearnResult res;
  res.table = table;
  const std::uint32_t M = table.num_users();
  KernelSpec kernel{median_bandwidth(table.user_emb, cfg.seed, cfg.bandwidth_sample)};
  res.sigma = kernel.sigma;
  const std::uint32_t S = std::min(M, cfg.anchor_size);
  const TopKSnapshot snap = make_snapshot(table, train_items, cfg.reg, cfg.seed);

  Mat backup_user = res.table.user_emb;
  Mat backup_item = res.table.item_emb;
  for (std::uint32_t ep = 0; ep < cfg.epochs; ++ep) {
    const GroupIndex g1 = detail::subsample_groups(groups1, cfg.group_cap, cfg.seed, ep);
    const GroupIndex g2 = detail::subsample_groups(groups2, cfg.group_cap,
                                                   sub_seed(cfg.seed, "attr2"), ep);
    const Mat anchor = sample_anchor(res.table, S, sub_seed(cfg.seed, "epoch:" + std::to_string(ep)));
    Mat gm1, gm2, grad_user_reg, grad_item_reg;
    gm1.setZero(res.table.user_emb.rows(), res.table.user_emb.cols());
    gm2.setZero(res.table.user_emb.rows(), res.table.user_emb.cols());
    const double lu1 =
        alpha1 > 0.0 ? distinguishability_loss_grad(res.table, g1, anchor, kernel, gm1, &res.counter)
                     : distinguishability_loss(res.table, g1, anchor, kernel, &res.counter);
    const double lu2 =
        alpha2 > 0.0 ? distinguishability_loss_grad(res.table, g2, anchor, kernel, gm2, &res.counter)
                     : distinguishability_loss(res.table, g2, anchor, kernel, &res.counter);
    const double l_r = rank_reg_loss_grad(res.table, snap, cfg.reg.lambda, grad_user_reg, grad_item_reg);
    if (!std::isfinite(lu1) || !std::isfinite(lu2) || !std::isfinite(l_r)) {
      res.diverged = true;
      res.diagnostic = "non-finite loss at epoch " + std::to_string(ep);
      break;
    }
    res.table.user_emb -= cfg.learning_rate * (grad_user_reg + alpha1 * gm1 + alpha2 * gm2);
    if (!cfg.freeze_items) res.table.item_emb -= cfg.learning_rate * grad_item_reg;
    if (!detail::table_finite(res.table)) {
      res.table.user_emb = backup_user;
      res.table.item_emb = backup_item;
      res.diverged = true;
      res.diagnostic = "non-finite embeddings after epoch " + std::to_string(ep) +
                       "; restored previous state";
      break;
    }
    backup_user = res.table.user_emb;
    backup_item = res.table.item_emb;
    const double wlu = alpha1 * lu1 + alpha2 * lu2;
    res.trace.push_back({ep, wlu, l_r, wlu + l_r});
    res.trace_lu1.push_back(lu1);
    res.trace_lu2.push_back(lu2);
  }
  quantize_f32(res.table);
  return res;
}

struct RetrainResult {
  EmbeddingTable table;
  std::vector<double> rec_loss;  // mean per-sample BPR loss per epoch
  std::vector<double> l_u;       // distinguishability loss per epoch (post rec updates)
};

// Retrain-from-scratch baseline: BPR training with the distinguishability loss
// mixed in, L = L_bpr + alpha * l_u. The l_u term is applied as one full-batch
// step at the end of each epoch, drawing only from its own RNG streams, so
// alpha = 0 yields embeddings bit-identical to plain train_bpr with the same
// seed. The kernel bandwidth is re-estimated each epoch (embedding scale grows
// from the near-zero init, so a frozen bandwidth would stale immediately).
inline RetrainResult retrain_baseline(const SplitSet& split, const GroupIndex& groups,
                                      std::uint32_t dim, const TrainConfig& cfg, double alpha,
                                      std::uint32_t anchor_size = 2048,
                                      std::uint32_t group_cap = 1024,
                                      std::uint32_t bandwidth_sample = 1000) {
  if (alpha < 0.0) throw std::invalid_argument("retrain_baseline: alpha must be >= 0");
  RetrainResult res;
  res.table = init_embeddings(split.num_users, split.num_items, dim, cfg.seed);
  const std::uint32_t S = std::min(split.num_users, anchor_size);
  auto hook = [&](EmbeddingTable& t, std::uint32_t ep) {
    const std::string tag = std::to_string(ep);
    const KernelSpec kernel{
        median_bandwidth(t.user_emb, sub_seed(cfg.seed, "retrain:bw:" + tag), bandwidth_sample)};
    const GroupIndex g_ep =
        detail::subsample_groups(groups, group_cap, sub_seed(cfg.seed, "retrain"), ep);
    const Mat anchor = sample_anchor(t, S, sub_seed(cfg.seed, "retrain:epoch:" + tag));
    double l_u = 0.0;
    if (alpha == 0.0) {
      l_u = distinguishability_loss(t, g_ep, anchor, kernel);
    } else {
      Mat grad;
      l_u = distinguishability_loss_grad(t, g_ep, anchor, kernel, grad);
      if (!std::isfinite(l_u)) {
        throw std::runtime_error("retrain_baseline: non-finite l_u at epoch " + tag);
      }
      t.user_emb -= (cfg.learning_rate * alpha) * grad;
    }
    res.l_u.push_back(l_u);
  };
  TrainConfig bpr_cfg = cfg;
  bpr_cfg.loss = LossKind::bpr;
  const TrainTrace trace = detail::train_bpr_hooked(res.table, split, bpr_cfg, hook);
  res.rec_loss = trace.epoch_loss;
  return res;
}

}  // namespace aurec
