#pragma once
// Gaussian-kernel maximum mean discrepancy: unbiased/biased estimators, the
// anchor-distribution trick that evaluates one MMD per class instead of one
// per class pair, and analytic gradients w.r.t. user embeddings.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aurec/model.hpp"
#include "aurec/rng.hpp"

namespace aurec {

struct KernelSpec {
  double sigma = 1.0;
};

// Counts MMD^2 evaluations; the anchor loss performs T per call, the pairwise
// baseline T(T-1)/2.
struct EvalCounter {
  std::uint64_t mmd_evaluations = 0;
};

struct GroupIndex {
  std::vector<std::vector<std::uint32_t>> groups;  // per class: member user ids
  std::vector<double> weights;                     // |P_i| / M

  std::uint32_t num_classes() const { return static_cast<std::uint32_t>(groups.size()); }
};

// Partition users by label; requires T >= 2 and every class non-empty.
inline GroupIndex build_groups(const std::vector<std::uint32_t>& labels) {
  if (labels.empty()) throw std::invalid_argument("build_groups: empty labels");
  const std::uint32_t T = *std::max_element(labels.begin(), labels.end()) + 1;
  if (T < 2) throw std::invalid_argument("build_groups: need at least 2 classes");
  GroupIndex gi;
  gi.groups.resize(T);
  for (std::uint32_t u = 0; u < labels.size(); ++u) gi.groups[labels[u]].push_back(u);
  for (std::uint32_t c = 0; c < T; ++c) {
    if (gi.groups[c].empty()) {
      throw std::invalid_argument("build_groups: class " + std::to_string(c) + " has no members");
    }
    gi.weights.push_back(static_cast<double>(gi.groups[c].size()) /
                         static_cast<double>(labels.size()));
  }
  return gi;
}

// sigma = median pairwise distance over a deterministic subsample of <= 1000 rows.
inline double median_bandwidth(const Mat& points, std::uint64_t seed, std::uint32_t max_points = 1000) {
  const auto n = static_cast<std::uint32_t>(points.rows());
  if (n < 2) throw std::invalid_argument("median_bandwidth: need at least 2 points");
  Rng rng(seed, "bandwidth");
  std::vector<std::uint32_t> idx;
  if (n <= max_points) {
    idx.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
  } else {
    idx = rng.sample_without_replacement(n, max_points);
  }
  std::vector<double> dists;
  dists.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      dists.push_back((points.row(idx[i]) - points.row(idx[j])).norm());
    }
  }
  const auto mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double med = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lo = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (lo + med);
  }
  return std::max(med, 1e-6);
}

namespace detail {

// Pairwise Gaussian kernel matrix K[i][j] = exp(-|a_i - b_j|^2 / (2 sigma^2)).
inline Mat kernel_matrix(const Mat& A, const Mat& B, double sigma) {
  const Eigen::VectorXd na = A.rowwise().squaredNorm();
  const Eigen::VectorXd nb = B.rowwise().squaredNorm();
  Mat d2 = (-2.0 * A * B.transpose());
  d2.colwise() += na;
  d2.rowwise() += nb.transpose();
  return (d2.cwiseMax(0.0) * (-1.0 / (2.0 * sigma * sigma))).array().exp().matrix();
}

inline Mat gather_rows(const Mat& m, const std::vector<std::uint32_t>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace detail

// Unbiased MMD^2 estimator: off-diagonal within-group means plus the full
// cross term; may be slightly negative on finite samples.
inline double mmd2_unbiased(const Mat& A, const Mat& B, const KernelSpec& kernel,
                            EvalCounter* counter = nullptr) {
  const auto n = static_cast<double>(A.rows());
  const auto m = static_cast<double>(B.rows());
  if (A.rows() < 2 || B.rows() < 2) throw std::invalid_argument("mmd2_unbiased: need >= 2 rows per sample");
  if (counter) ++counter->mmd_evaluations;
  const Mat kaa = detail::kernel_matrix(A, A, kernel.sigma);
  const Mat kbb = detail::kernel_matrix(B, B, kernel.sigma);
  const Mat kab = detail::kernel_matrix(A, B, kernel.sigma);
  const double t1 = (kaa.sum() - kaa.trace()) / (n * (n - 1.0));
  const double t2 = (kbb.sum() - kbb.trace()) / (m * (m - 1.0));
  const double t3 = 2.0 * kab.sum() / (n * m);
  return t1 + t2 - t3;
}

// Biased V-statistic variant (diagonals kept, divide by n^2 / m^2); always >= 0.
inline double mmd2_biased(const Mat& A, const Mat& B, const KernelSpec& kernel) {
  const auto n = static_cast<double>(A.rows());
  const auto m = static_cast<double>(B.rows());
  if (A.rows() < 1 || B.rows() < 1) throw std::invalid_argument("mmd2_biased: empty sample");
  const Mat kaa = detail::kernel_matrix(A, A, kernel.sigma);
  const Mat kbb = detail::kernel_matrix(B, B, kernel.sigma);
  const Mat kab = detail::kernel_matrix(A, B, kernel.sigma);
  return kaa.sum() / (n * n) + kbb.sum() / (m * m) - 2.0 * kab.sum() / (n * m);
}

// S user rows drawn uniformly with replacement over all users: a sample of the
// class-weighted mixture (weights |P_i|/M) without touching group structure.
inline Mat sample_anchor(const EmbeddingTable& table, std::uint32_t S, std::uint64_t seed) {
  if (S < 2) throw std::invalid_argument("sample_anchor: S must be >= 2");
  Rng rng(seed, "anchor");
  Mat out(S, table.dim());
  for (std::uint32_t i = 0; i < S; ++i) {
    out.row(i) = table.user_emb.row(static_cast<Eigen::Index>(rng.below(table.num_users())));
  }
  return out;
}

// Distinguishability loss: mean over classes of MMD^2(class embeddings, anchor).
// The anchor appears in every term, so its self-term is computed once and
// shared; each class then costs one within-group block and one cross block.
inline double distinguishability_loss(const EmbeddingTable& table, const GroupIndex& groups,
                                      const Mat& anchor, const KernelSpec& kernel,
                                      EvalCounter* counter = nullptr) {
  const std::uint32_t T = groups.num_classes();
  const auto S = static_cast<double>(anchor.rows());
  if (anchor.rows() < 2) throw std::invalid_argument("distinguishability_loss: anchor needs >= 2 rows");
  const Mat kss = detail::kernel_matrix(anchor, anchor, kernel.sigma);
  const double anchor_self = (kss.sum() - kss.trace()) / (S * (S - 1.0));
  double total = 0.0;
  for (std::uint32_t c = 0; c < T; ++c) {
    if (groups.groups[c].size() < 2) {
      throw std::invalid_argument("distinguishability_loss: class " + std::to_string(c) +
                                  " has fewer than 2 members");
    }
    if (counter) ++counter->mmd_evaluations;
    const auto n = static_cast<double>(groups.groups[c].size());
    const Mat X = detail::gather_rows(table.user_emb, groups.groups[c]);
    const Mat kxx = detail::kernel_matrix(X, X, kernel.sigma);
    const Mat kxa = detail::kernel_matrix(X, anchor, kernel.sigma);
    total += (kxx.sum() - kxx.trace()) / (n * (n - 1.0)) + anchor_self - 2.0 * kxa.sum() / (n * S);
  }
  return total / static_cast<double>(T);
}

// Loss plus analytic gradient w.r.t. all user embeddings; anchor rows are
// constants (no gradient flows into the anchor sample). The anchor self-term
// is computed once and shared across classes.
inline double distinguishability_loss_grad(const EmbeddingTable& table, const GroupIndex& groups,
                                           const Mat& anchor, const KernelSpec& kernel, Mat& grad,
                                           EvalCounter* counter = nullptr) {
  const std::uint32_t T = groups.num_classes();
  const double sigma2 = kernel.sigma * kernel.sigma;
  const auto S = static_cast<double>(anchor.rows());
  grad.resize(table.user_emb.rows(), table.user_emb.cols());
  grad.setZero();
  const Mat kss = detail::kernel_matrix(anchor, anchor, kernel.sigma);
  const double anchor_self = (kss.sum() - kss.trace()) / (S * (S - 1.0));
  double total = 0.0;
  for (std::uint32_t c = 0; c < T; ++c) {
    const auto& members = groups.groups[c];
    if (members.size() < 2) {
      throw std::invalid_argument("distinguishability_loss_grad: class " + std::to_string(c) +
                                  " has fewer than 2 members");
    }
    if (counter) ++counter->mmd_evaluations;
    const auto n = static_cast<double>(members.size());
    const Mat X = detail::gather_rows(table.user_emb, members);
    Mat kxx = detail::kernel_matrix(X, X, kernel.sigma);
    kxx.diagonal().setZero();
    const Mat kxa = detail::kernel_matrix(X, anchor, kernel.sigma);
    total += kxx.sum() / (n * (n - 1.0)) + anchor_self - 2.0 * kxa.sum() / (n * S);
    // d/dx_i of the within term: (2/(n(n-1) s^2)) sum_j k_ij (x_j - x_i)
    const Mat gw = (2.0 / (n * (n - 1.0) * sigma2)) *
                   (kxx * X - kxx.rowwise().sum().asDiagonal() * X);
    // d/dx_i of the cross term: -(2/(n S s^2)) sum_j k_ij (a_j - x_i)
    const Mat gc = (-2.0 / (n * S * sigma2)) *
                   (kxa * anchor - kxa.rowwise().sum().asDiagonal() * X);
    const Mat g = (gw + gc) / static_cast<double>(T);
    for (std::size_t i = 0; i < members.size(); ++i) {
      grad.row(members[i]) += g.row(static_cast<Eigen::Index>(i));
    }
  }
  return total / static_cast<double>(T);
}

// O(T^2) baseline: plain MMD^2 for T = 2, otherwise the mean over all class pairs.
inline double mmd2_pairwise_loss(const EmbeddingTable& table, const GroupIndex& groups,
                                 const KernelSpec& kernel, EvalCounter* counter = nullptr) {
  const std::uint32_t T = groups.num_classes();
  double total = 0.0;
  std::uint32_t pairs = 0;
  for (std::uint32_t i = 0; i < T; ++i) {
    for (std::uint32_t j = i + 1; j < T; ++j) {
      const Mat A = detail::gather_rows(table.user_emb, groups.groups[i]);
      const Mat B = detail::gather_rows(table.user_emb, groups.groups[j]);
      total += mmd2_unbiased(A, B, kernel, counter);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

// Loss plus gradient for the pairwise baseline (mean over class pairs).
inline double mmd2_pairwise_loss_grad(const EmbeddingTable& table, const GroupIndex& groups,
                                      const KernelSpec& kernel, Mat& grad,
                                      EvalCounter* counter = nullptr) {
  const std::uint32_t T = groups.num_classes();
  const double sigma2 = kernel.sigma * kernel.sigma;
  grad.resize(table.user_emb.rows(), table.user_emb.cols());
  grad.setZero();
  double total = 0.0;
  std::uint32_t pairs = 0;
  for (std::uint32_t gi = 0; gi < T; ++gi) {
    for (std::uint32_t gj = gi + 1; gj < T; ++gj) {
      const auto& ma = groups.groups[gi];
      const auto& mb = groups.groups[gj];
      if (ma.size() < 2 || mb.size() < 2) {
        throw std::invalid_argument("mmd2_pairwise_loss_grad: class with fewer than 2 members");
      }
      if (counter) ++counter->mmd_evaluations;
      const auto n = static_cast<double>(ma.size());
      const auto m = static_cast<double>(mb.size());
      const Mat A = detail::gather_rows(table.user_emb, ma);
      const Mat B = detail::gather_rows(table.user_emb, mb);
      Mat kaa = detail::kernel_matrix(A, A, kernel.sigma);
      kaa.diagonal().setZero();
      Mat kbb = detail::kernel_matrix(B, B, kernel.sigma);
      kbb.diagonal().setZero();
      const Mat kab = detail::kernel_matrix(A, B, kernel.sigma);
      total += kaa.sum() / (n * (n - 1.0)) + kbb.sum() / (m * (m - 1.0)) - 2.0 * kab.sum() / (n * m);
      const Mat ga = (2.0 / (n * (n - 1.0) * sigma2)) * (kaa * A - kaa.rowwise().sum().asDiagonal() * A) -
                     (2.0 / (n * m * sigma2)) * (kab * B - kab.rowwise().sum().asDiagonal() * A);
      const Mat gb = (2.0 / (m * (m - 1.0) * sigma2)) * (kbb * B - kbb.rowwise().sum().asDiagonal() * B) -
                     (2.0 / (n * m * sigma2)) *
                         (kab.transpose() * A - kab.colwise().sum().transpose().asDiagonal() * B);
      for (std::size_t i = 0; i < ma.size(); ++i) grad.row(ma[i]) += ga.row(static_cast<Eigen::Index>(i));
      for (std::size_t i = 0; i < mb.size(); ++i) grad.row(mb[i]) += gb.row(static_cast<Eigen::Index>(i));
      ++pairs;
    }
  }
  grad /= static_cast<double>(pairs);
  return total / static_cast<double>(pairs);
}

}  // namespace aurec
