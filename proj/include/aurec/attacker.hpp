#pragma once
// Attribute-inference attacker: an MLP softmax classifier trained on user
// embeddings with minibatch gradient descent, evaluated by stratified k-fold
// cross-validation (micro-F1 and balanced accuracy averaged over folds).
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aurec/metrics.hpp"
#include "aurec/model.hpp"
#include "aurec/rng.hpp"

namespace aurec {

struct AttackConfig {
  std::vector<std::uint32_t> hidden{100};  // hidden layer widths (ReLU)
  std::uint32_t folds = 5;
  std::uint32_t repeats = 1;          // independent CV runs with distinct fold splits
  double learning_rate = 0.001;
  double l2 = 1.0;                    // weight penalty: l2/(2n) * sum ||W||^2
  std::uint32_t max_epochs = 500;
  std::uint32_t batch_size = 64;
  double tol = 1e-5;                  // min full-train loss improvement
  std::uint32_t patience = 10;        // epochs without improvement before stopping
  std::uint64_t seed = 7;
};

// Fully connected net: ReLU on hidden layers, raw logits at the output.
struct MlpModel {
  std::vector<Mat> weights;
  std::vector<Eigen::RowVectorXd> biases;

  std::size_t num_layers() const { return weights.size(); }
};

// He-normal for layers feeding a ReLU, Glorot-uniform for the output layer.
inline MlpModel init_mlp(std::uint32_t d_in, const std::vector<std::uint32_t>& hidden,
                         std::uint32_t d_out, Rng& rng) {
  if (d_in < 1 || d_out < 1) throw std::invalid_argument("init_mlp: dimensions must be positive");
  std::vector<std::uint32_t> dims{d_in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(d_out);
  MlpModel net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto fin = static_cast<Eigen::Index>(dims[i]);
    const auto fout = static_cast<Eigen::Index>(dims[i + 1]);
    Mat w(fin, fout);
    const bool feeds_relu = (i + 2 < dims.size());
    if (feeds_relu) {
      const double stddev = std::sqrt(2.0 / static_cast<double>(fin));
      for (Eigen::Index r = 0; r < fin; ++r) {
        for (Eigen::Index c = 0; c < fout; ++c) w(r, c) = rng.gaussian(0.0, stddev);
      }
    } else {
      const double lim = std::sqrt(6.0 / static_cast<double>(fin + fout));
      for (Eigen::Index r = 0; r < fin; ++r) {
        for (Eigen::Index c = 0; c < fout; ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * lim;
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(Eigen::RowVectorXd::Zero(fout));
  }
  return net;
}

namespace detail {

// Activations per layer; front() is the input, back() the logits.
inline std::vector<Mat> mlp_forward(const MlpModel& net, const Mat& x) {
  std::vector<Mat> acts;
  acts.reserve(net.num_layers() + 1);
  acts.push_back(x);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Mat z = (acts.back() * net.weights[i]).rowwise() + net.biases[i];
    if (i + 1 < net.num_layers()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

inline Mat softmax_rows(const Mat& logits) {
  Mat p = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp().matrix();
  for (Eigen::Index r = 0; r < p.rows(); ++r) p.row(r) /= p.row(r).sum();
  return p;
}

}  // namespace detail

// Mean cross-entropy over the batch plus l2/(2n) * sum of squared weights.
inline double mlp_loss(const MlpModel& net, const Mat& x, const std::vector<std::uint32_t>& y,
                       double l2) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()) || y.empty()) {
    throw std::invalid_argument("mlp_loss: batch size mismatch");
  }
  const Mat logits = detail::mlp_forward(net, x).back();
  double ce = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    ce += lse - logits(r, static_cast<Eigen::Index>(y[static_cast<std::size_t>(r)]));
  }
  ce /= static_cast<double>(y.size());
  double reg = 0.0;
  for (const auto& w : net.weights) reg += w.squaredNorm();
  return ce + l2 / (2.0 * static_cast<double>(y.size())) * reg;
}

// Backprop gradients: mean cross-entropy term plus (l2/n_reg) * W per layer.
// Using n_reg = batch size makes these exact gradients of mlp_loss on the batch.
inline void mlp_gradients(const MlpModel& net, const Mat& x, const std::vector<std::uint32_t>& y,
                          double l2, double n_reg, std::vector<Mat>& grad_w,
                          std::vector<Eigen::RowVectorXd>& grad_b) {
  const auto nb = static_cast<double>(y.size());
  const auto acts = detail::mlp_forward(net, x);
  Mat delta = detail::softmax_rows(acts.back());
  for (Eigen::Index r = 0; r < delta.rows(); ++r) {
    delta(r, static_cast<Eigen::Index>(y[static_cast<std::size_t>(r)])) -= 1.0;
  }
  delta /= nb;
  grad_w.assign(net.num_layers(), Mat());
  grad_b.assign(net.num_layers(), Eigen::RowVectorXd());
  for (std::size_t i = net.num_layers(); i-- > 0;) {
    grad_w[i] = acts[i].transpose() * delta + (l2 / n_reg) * net.weights[i];
    grad_b[i] = delta.colwise().sum();
    if (i > 0) {
      delta = ((delta * net.weights[i].transpose()).array() * (acts[i].array() > 0.0).cast<double>())
                  .matrix();
    }
  }
}

inline void mlp_step(MlpModel& net, const Mat& x, const std::vector<std::uint32_t>& y, double lr,
                     double l2, double n_total) {
  std::vector<Mat> gw;
  std::vector<Eigen::RowVectorXd> gb;
  mlp_gradients(net, x, y, l2, n_total, gw, gb);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    net.weights[i] -= lr * gw[i];
    net.biases[i] -= lr * gb[i];
  }
}

// Argmax of the logits per row (first index on ties).
inline std::vector<std::uint32_t> mlp_predict(const MlpModel& net, const Mat& x) {
  const Mat logits = detail::mlp_forward(net, x).back();
  std::vector<std::uint32_t> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

struct TrainedMlp {
  MlpModel net;
  std::uint32_t epochs_run = 0;
};

// Minibatch descent with early stopping on the full-train loss: stop once the
// best loss has not improved by tol for `patience` consecutive epochs.
inline TrainedMlp train_attacker(const Mat& x, const std::vector<std::uint32_t>& y,
                                 std::uint32_t num_classes, const AttackConfig& cfg, Rng& rng) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()) || y.empty()) {
    throw std::invalid_argument("train_attacker: data size mismatch");
  }
  for (auto label : y) {
    if (label >= num_classes) throw std::invalid_argument("train_attacker: label out of range");
  }
  TrainedMlp out{init_mlp(static_cast<std::uint32_t>(x.cols()), cfg.hidden, num_classes, rng), 0};
  const auto n = static_cast<std::uint32_t>(y.size());
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) perm[i] = i;
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t bad = 0;
  for (std::uint32_t ep = 0; ep < cfg.max_epochs; ++ep) {
    rng.shuffle(perm);
    for (std::uint32_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
      const std::uint32_t b1 = std::min(b0 + cfg.batch_size, n);
      Mat xb(b1 - b0, x.cols());
      std::vector<std::uint32_t> yb(b1 - b0);
      for (std::uint32_t i = b0; i < b1; ++i) {
        xb.row(i - b0) = x.row(perm[i]);
        yb[i - b0] = y[perm[i]];
      }
      mlp_step(out.net, xb, yb, cfg.learning_rate, cfg.l2, static_cast<double>(n));
    }
    out.epochs_run = ep + 1;
    const double full = mlp_loss(out.net, x, y, cfg.l2);
    if (full < best - cfg.tol) {
      best = full;
      bad = 0;
    } else if (++bad >= cfg.patience) break;
  }
  return out;
}

// Deal each class's shuffled members round-robin across folds; every fold's
// class mix then tracks the overall one as closely as integer counts allow.
inline std::vector<std::vector<std::uint32_t>> stratified_folds(const std::vector<std::uint32_t>& y,
                                                                std::uint32_t folds, Rng& rng) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
  if (y.size() < folds) throw std::invalid_argument("stratified_folds: fewer samples than folds");
  const std::uint32_t T = *std::max_element(y.begin(), y.end()) + 1;
  std::vector<std::vector<std::uint32_t>> out(folds);
  for (std::uint32_t c = 0; c < T; ++c) {
    std::vector<std::uint32_t> idx;
    for (std::uint32_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) idx.push_back(i);
    }
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) out[k % folds].push_back(idx[k]);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

struct AttackReport {
  double micro_f1 = 0.0;       // mean over folds (and repeats)
  double balanced_acc = 0.0;   // mean over folds (and repeats)
  std::uint32_t num_classes = 0;
  std::uint32_t folds = 0;
  std::uint32_t repeats = 0;
  std::vector<double> fold_f1;           // per fold, repeats concatenated
  std::vector<double> fold_balanced_acc;
  std::vector<std::uint32_t> fold_epochs;
};

// Full attack evaluation: `repeats` independent stratified CV runs, one MLP
// trained per fold, scores averaged over every fold of every run.
inline AttackReport evaluate_attack(const Mat& x, const std::vector<std::uint32_t>& y,
                                    const AttackConfig& cfg) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()) || y.empty()) {
    throw std::invalid_argument("evaluate_attack: data size mismatch");
  }
  if (cfg.repeats < 1) throw std::invalid_argument("evaluate_attack: repeats must be >= 1");
  const std::uint32_t T = *std::max_element(y.begin(), y.end()) + 1;
  if (T < 2) throw std::invalid_argument("evaluate_attack: need at least 2 classes");
  AttackReport report;
  report.num_classes = T;
  report.folds = cfg.folds;
  report.repeats = cfg.repeats;
  for (std::uint32_t r = 0; r < cfg.repeats; ++r) {
    Rng fold_rng(cfg.seed, "attack:folds:" + std::to_string(r));
    const auto folds = stratified_folds(y, cfg.folds, fold_rng);
    for (std::uint32_t k = 0; k < cfg.folds; ++k) {
      const auto& test_idx = folds[k];
      std::vector<char> in_test(y.size(), 0);
      for (auto i : test_idx) in_test[i] = 1;
      std::vector<std::uint32_t> train_idx;
      train_idx.reserve(y.size() - test_idx.size());
      for (std::uint32_t i = 0; i < y.size(); ++i) {
        if (!in_test[i]) train_idx.push_back(i);
      }
      Mat xtr(static_cast<Eigen::Index>(train_idx.size()), x.cols());
      std::vector<std::uint32_t> ytr(train_idx.size());
      for (std::size_t i = 0; i < train_idx.size(); ++i) {
        xtr.row(static_cast<Eigen::Index>(i)) = x.row(train_idx[i]);
        ytr[i] = y[train_idx[i]];
      }
      Mat xte(static_cast<Eigen::Index>(test_idx.size()), x.cols());
      std::vector<std::uint32_t> yte(test_idx.size());
      for (std::size_t i = 0; i < test_idx.size(); ++i) {
        xte.row(static_cast<Eigen::Index>(i)) = x.row(test_idx[i]);
        yte[i] = y[test_idx[i]];
      }
      Rng net_rng(cfg.seed, "attack:net:" + std::to_string(r) + ":" + std::to_string(k));
      const auto trained = train_attacker(xtr, ytr, T, cfg, net_rng);
      const auto pred = mlp_predict(trained.net, xte);
      report.fold_f1.push_back(micro_f1(yte, pred));
      report.fold_balanced_acc.push_back(balanced_accuracy(yte, pred));
      report.fold_epochs.push_back(trained.epochs_run);
    }
  }
  const auto runs = static_cast<double>(report.fold_f1.size());
  for (auto v : report.fold_f1) report.micro_f1 += v / runs;
  for (auto v : report.fold_balanced_acc) report.balanced_acc += v / runs;
  return report;
}

}  // namespace aurec
