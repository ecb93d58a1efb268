#pragma once
// Evaluation metrics: full-ranking HR@K / NDCG@K, rank-biased overlap,
// classification scores (micro-F1, balanced accuracy, weighted BAcc), Pearson.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "aurec/dataset.hpp"
#include "aurec/model.hpp"

namespace aurec {

struct RecReport {
  std::map<std::uint32_t, double> hr;    // K -> hit ratio
  std::map<std::uint32_t, double> ndcg;  // K -> NDCG
  double rbo10_vs_original = -1.0;       // < 0 means "not evaluated"
};

// Rank of each user's test item among all items except the user's train and
// valid items; 1-based, ties broken by ascending item id.
inline std::vector<std::uint32_t> test_item_ranks(const EmbeddingTable& t, const SplitSet& split) {
  const std::uint32_t M = split.num_users;
  std::vector<std::uint32_t> ranks(M);
  for (std::uint32_t u = 0; u < M; ++u) {
    const Eigen::VectorXd s = t.item_emb * t.user_emb.row(u).transpose();
    std::vector<char> excluded(t.num_items(), 0);
    for (const auto v : split.train_items[u]) excluded[v] = 1;
    excluded[split.valid[u]] = 1;
    const std::uint32_t test_item = split.test[u];
    excluded[test_item] = 0;  // the test item always competes
    const double st = s[test_item];
    std::uint32_t rank = 1;
    for (std::uint32_t v = 0; v < t.num_items(); ++v) {
      if (excluded[v] || v == test_item) continue;
      if (s[v] > st || (s[v] == st && v < test_item)) ++rank;
    }
    ranks[u] = rank;
  }
  return ranks;
}

inline RecReport eval_ranking(const EmbeddingTable& t, const SplitSet& split,
                              const std::vector<std::uint32_t>& Ks) {
  const auto ranks = test_item_ranks(t, split);
  RecReport rep;
  for (const auto K : Ks) {
    double hit = 0.0, gain = 0.0;
    for (const auto r : ranks) {
      if (r <= K) {
        hit += 1.0;
        gain += 1.0 / std::log2(1.0 + static_cast<double>(r));
      }
    }
    rep.hr[K] = hit / static_cast<double>(ranks.size());
    rep.ndcg[K] = gain / static_cast<double>(ranks.size());
  }
  return rep;
}

// Truncated, normalized rank-biased overlap of two equal-length lists:
// RBO@L = [sum_t (overlap@t / t) p^(t-1)] * (1-p) / (1-p^L); identical lists -> 1.
inline double rbo(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                  double p) {
  if (a.size() != b.size()) throw std::invalid_argument("rbo: length mismatch");
  if (a.empty()) throw std::invalid_argument("rbo: empty lists");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("rbo: p must be in (0,1)");
  std::unordered_set<std::uint32_t> sa, sb;
  double num = 0.0, den = 0.0, weight = 1.0;
  std::uint32_t overlap = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const auto x = a[t], y = b[t];
    if (x == y) {
      ++overlap;
    } else {
      if (sb.count(x)) {
        ++overlap;
        sb.erase(x);
      } else {
        sa.insert(x);
      }
      if (sa.count(y)) {
        ++overlap;
        sa.erase(y);
      } else {
        sb.insert(y);
      }
    }
    num += weight * static_cast<double>(overlap) / static_cast<double>(t + 1);
    den += weight;
    weight *= p;
  }
  return num / den;
}

// micro-F1 for single-label multi-class predictions (equals plain accuracy).
inline double micro_f1(const std::vector<std::uint32_t>& truth,
                       const std::vector<std::uint32_t>& pred) {
  if (truth.size() != pred.size() || truth.empty()) {
    throw std::invalid_argument("micro_f1: size mismatch or empty");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

// Balanced accuracy: unweighted mean of per-class recall over classes present in truth.
inline double balanced_accuracy(const std::vector<std::uint32_t>& truth,
                                const std::vector<std::uint32_t>& pred) {
  if (truth.size() != pred.size() || truth.empty()) {
    throw std::invalid_argument("balanced_accuracy: size mismatch or empty");
  }
  const std::uint32_t T = *std::max_element(truth.begin(), truth.end()) + 1;
  std::vector<std::size_t> total(T, 0), correct(T, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++total[truth[i]];
    correct[truth[i]] += truth[i] == pred[i];
  }
  double sum = 0.0;
  std::uint32_t present = 0;
  for (std::uint32_t c = 0; c < T; ++c) {
    if (total[c] > 0) {
      sum += static_cast<double>(correct[c]) / static_cast<double>(total[c]);
      ++present;
    }
  }
  return sum / static_cast<double>(present);
}

// Weighted mean of per-attribute balanced accuracies, weights = class counts c_i.
inline double wbacc(const std::vector<double>& baccs, const std::vector<std::uint32_t>& class_counts) {
  if (baccs.size() != class_counts.size() || baccs.empty()) {
    throw std::invalid_argument("wbacc: length mismatch or empty");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < baccs.size(); ++i) {
    if (class_counts[i] == 0) throw std::invalid_argument("wbacc: zero weight");
    num += static_cast<double>(class_counts[i]) * baccs[i];
    den += static_cast<double>(class_counts[i]);
  }
  return num / den;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("pearson: need two equal-length series of length >= 2");
  }
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace aurec
