// Command-line driver: prepare / train / unlearn / attack / evaluate /
// perturb-study. Every command is byte-reproducible given --seed; outputs are
// EMB1 binaries, JSON reports, and CSV traces. Exit codes: 0 success, 2 usage
// error, 1 runtime failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aurec/attacker.hpp"
#include "aurec/dataset.hpp"
#include "aurec/metrics.hpp"
#include "aurec/mmd.hpp"
#include "aurec/model.hpp"
#include "aurec/rankreg.hpp"
#include "aurec/rng.hpp"
#include "aurec/unlearn.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json metrics_json(const aurec::RecReport& report) {
  json hr = json::object(), ndcg = json::object();
  for (const auto& [k, v] : report.hr) hr[std::to_string(k)] = v;
  for (const auto& [k, v] : report.ndcg) ndcg[std::to_string(k)] = v;
  json out{{"hr", hr}, {"ndcg", ndcg}};
  if (report.rbo10_vs_original >= 0.0) out["rbo10_vs_original"] = report.rbo10_vs_original;
  return out;
}

void print_metrics_table(const aurec::RecReport& report) {
  std::printf("%-6s %-10s %-10s\n", "K", "HR@K", "NDCG@K");
  for (const auto& [k, hr] : report.hr) {
    std::printf("%-6u %-10s %-10s\n", k, fmt("%.6f", hr).c_str(),
                fmt("%.6f", report.ndcg.at(k)).c_str());
  }
  if (report.rbo10_vs_original >= 0.0) {
    std::printf("RBO@10 vs reference: %s\n", fmt("%.6f", report.rbo10_vs_original).c_str());
  }
}

struct SplitBundle {
  aurec::SplitSet split;
  aurec::AttributeTable attrs;
};

SplitBundle read_bundle(const fs::path& dir, bool need_attrs) {
  SplitBundle b;
  b.split = aurec::read_split(dir);
  const fs::path ap = dir / "attributes.tsv";
  if (fs::exists(ap)) {
    b.attrs = aurec::read_attributes_tsv(ap);
  } else if (need_attrs) {
    throw std::runtime_error("missing attributes file: " + ap.string());
  }
  return b;
}

const std::vector<std::uint32_t>& labels_for(const aurec::AttributeTable& attrs,
                                             const std::string& name) {
  return attrs.labels[attrs.index_of(name)];
}

void check_table_matches(const aurec::EmbeddingTable& t, const aurec::SplitSet& split) {
  if (t.num_users() != split.num_users || t.num_items() != split.num_items) {
    throw std::runtime_error("embedding table shape (" + std::to_string(t.num_users()) + "x" +
                             std::to_string(t.num_items()) + " items) does not match split (" +
                             std::to_string(split.num_users) + "x" +
                             std::to_string(split.num_items) + ")");
  }
}

std::vector<std::uint32_t> parse_arch(const std::string& s) {
  std::vector<std::uint32_t> out;
  if (s.empty() || s == "none") return out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(tok, &pos);
      if (pos != tok.size() || v < 1) throw std::invalid_argument(tok);
      out.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--arch", "bad layer width '" + tok + "' in '" + s + "'");
    }
  }
  return out;
}

// Mean truncated RBO@depth over users between two tables' top-k lists.
double mean_rbo_topk(const aurec::EmbeddingTable& a, const aurec::EmbeddingTable& b,
                     const std::vector<std::vector<std::uint32_t>>& train_items,
                     std::uint32_t depth, double p) {
  double total = 0.0;
  for (std::uint32_t u = 0; u < a.num_users(); ++u) {
    std::vector<std::uint32_t> la, lb;
    for (const auto& s : aurec::recommend_topk(a, u, depth, train_items[u])) la.push_back(s.item);
    for (const auto& s : aurec::recommend_topk(b, u, depth, train_items[u])) lb.push_back(s.item);
    total += aurec::rbo(la, lb, p);
  }
  return total / static_cast<double>(a.num_users());
}

// ---------------------------------------------------------------- prepare --
struct PrepareArgs {
  std::string interactions, attributes, format = "ml100k", attr_format = "ml100k", out;
  std::uint32_t min_user = 5, min_item = 5;
};

void cmd_prepare(const PrepareArgs& a) {
  const auto fmt_kind = aurec::parse_format(a.format);
  auto set = aurec::load_interactions(a.interactions, fmt_kind);
  set = aurec::filter_sparse(set, a.min_user, a.min_item);
  const auto split = aurec::leave_one_out(set);
  aurec::AttributeTable attrs;
  if (!a.attributes.empty()) {
    attrs = (a.attr_format == "csv") ? aurec::load_attributes_csv(a.attributes, set)
                                     : aurec::load_attributes_ml100k(a.attributes, set);
  }
  aurec::write_split(split, attrs, a.out);
  std::printf("users=%u items=%u interactions=%zu\n", set.num_users, set.num_items,
              set.rows.size());
}

// ------------------------------------------------------------------ train --
struct TrainArgs {
  std::string split, out, loss = "bpr";
  std::uint32_t dim = 32, epochs = 20, batch = 1024, neg_per_pos = 1;
  double lr = 0.001;
  std::uint64_t seed = 1;
  std::vector<std::uint32_t> ks{5, 10};
};

void cmd_train(const TrainArgs& a) {
  const auto bundle = read_bundle(a.split, false);
  auto table = aurec::init_embeddings(bundle.split.num_users, bundle.split.num_items, a.dim, a.seed);
  aurec::TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.neg_per_pos = a.neg_per_pos;
  cfg.seed = a.seed;
  cfg.loss = (a.loss == "ce") ? aurec::LossKind::ce : aurec::LossKind::bpr;
  const auto trace = aurec::train(table, bundle.split, cfg);
  aurec::quantize_f32(table);
  aurec::save_embeddings(table, a.out);
  const auto report = aurec::eval_ranking(table, bundle.split, a.ks);
  print_metrics_table(report);
  json meta{{"command", "train"},
            {"loss", a.loss},
            {"dim", a.dim},
            {"epochs", a.epochs},
            {"learning_rate", a.lr},
            {"batch_size", a.batch},
            {"neg_per_pos", a.neg_per_pos},
            {"seed", a.seed},
            {"users", table.num_users()},
            {"items", table.num_items()},
            {"final_train_loss", trace.epoch_loss.back()},
            {"metrics", metrics_json(report)}};
  write_json(a.out + ".meta.json", meta);
}

// ---------------------------------------------------------------- unlearn --
struct UnlearnArgs {
  std::string split, emb, out, trace, method = "d2d_fr";
  std::vector<std::string> attrs;
  double alpha = 2.5e-4, alpha1 = -1.0, alpha2 = -1.0;
  double lr = 0.001, lambda = 0.05, tau = 1000.0;
  std::uint32_t epochs = 500, k = 20, anchor_size = 2048, group_cap = 1024;
  std::uint64_t seed = 1;
  bool freeze_items = false;
};

void write_trace_csv(const fs::path& path, const std::vector<aurec::UnlearnTraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,l_u,l_reg,total\n";
  char buf[160];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof(buf), "%u,%.6g,%.6g,%.6g\n", row.epoch, row.l_u, row.l_reg,
                  row.total);
    out << buf;
  }
}

void cmd_unlearn(const UnlearnArgs& a) {
  if (a.attrs.empty()) throw CLI::ValidationError("--attr", "at least one attribute required");
  if (a.attrs.size() > 2) throw CLI::ValidationError("--attr", "at most two attributes supported");
  const bool multi = a.attrs.size() == 2;
  if (multi && (a.alpha1 < 0.0 || a.alpha2 < 0.0)) {
    throw CLI::ValidationError("--alpha1/--alpha2", "required for two-attribute unlearning");
  }
  const auto bundle = read_bundle(a.split, true);
  auto table = aurec::load_embeddings(a.emb);
  check_table_matches(table, bundle.split);
  aurec::UnlearnConfig cfg;
  cfg.method = aurec::parse_unlearn_method(a.method);
  cfg.alpha = a.alpha;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.reg.k = a.k;
  cfg.reg.lambda = a.lambda;
  cfg.reg.tau = a.tau;
  cfg.anchor_size = a.anchor_size;
  cfg.group_cap = a.group_cap;
  cfg.freeze_items = a.freeze_items;
  aurec::UnlearnResult res;
  if (multi) {
    const auto g1 = aurec::build_groups(labels_for(bundle.attrs, a.attrs[0]));
    const auto g2 = aurec::build_groups(labels_for(bundle.attrs, a.attrs[1]));
    res = aurec::unlearn_multi(table, g1, g2, a.alpha1, a.alpha2, bundle.split.train_items, cfg);
  } else {
    const auto groups = aurec::build_groups(labels_for(bundle.attrs, a.attrs[0]));
    res = aurec::unlearn(table, groups, bundle.split.train_items, cfg);
  }
  aurec::save_embeddings(res.table, a.out);
  const std::string trace_path = a.trace.empty() ? a.out + ".trace.csv" : a.trace;
  write_trace_csv(trace_path, res.trace);
  if (res.diverged) std::fprintf(stderr, "warning: %s\n", res.diagnostic.c_str());
  json meta{{"command", "unlearn"},
            {"method", a.method},
            {"attrs", a.attrs},
            {"alpha", a.alpha},
            {"learning_rate", a.lr},
            {"epochs_requested", a.epochs},
            {"epochs_run", res.trace.size()},
            {"seed", a.seed},
            {"k", a.k},
            {"lambda", a.lambda},
            {"tau", a.tau},
            {"anchor_size", a.anchor_size},
            {"group_cap", a.group_cap},
            {"freeze_items", a.freeze_items},
            {"sigma", res.sigma},
            {"mmd_evaluations", res.counter.mmd_evaluations},
            {"diverged", res.diverged},
            {"diagnostic", res.diagnostic}};
  if (multi) {
    meta["alpha1"] = a.alpha1;
    meta["alpha2"] = a.alpha2;
  }
  write_json(a.out + ".meta.json", meta);
  std::printf("unlearned %zu epochs (sigma=%s, mmd_evaluations=%llu)%s\n", res.trace.size(),
              fmt("%.6g", res.sigma).c_str(),
              static_cast<unsigned long long>(res.counter.mmd_evaluations),
              res.diverged ? " [diverged]" : "");
}

// ----------------------------------------------------------------- attack --
struct AttackArgs {
  std::string split, emb, attr, arch = "100", out;
  std::uint32_t folds = 5, repeats = 1, max_epochs = 500, batch = 64;
  double lr = 0.001, l2 = 1.0;
  std::uint64_t seed = 7;
};

void cmd_attack(const AttackArgs& a) {
  aurec::AttackConfig cfg;
  cfg.hidden = parse_arch(a.arch);
  cfg.folds = a.folds;
  cfg.repeats = a.repeats;
  cfg.learning_rate = a.lr;
  cfg.l2 = a.l2;
  cfg.max_epochs = a.max_epochs;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  const auto bundle = read_bundle(a.split, true);
  const auto table = aurec::load_embeddings(a.emb);
  check_table_matches(table, bundle.split);
  const auto& labels = labels_for(bundle.attrs, a.attr);
  const auto report = aurec::evaluate_attack(table.user_emb, labels, cfg);
  std::printf("attr=%s micro_f1=%s balanced_acc=%s (classes=%u folds=%u repeats=%u)\n",
              a.attr.c_str(), fmt("%.4f", report.micro_f1).c_str(),
              fmt("%.4f", report.balanced_acc).c_str(), report.num_classes, report.folds,
              report.repeats);
  if (!a.out.empty()) {
    json j{{"command", "attack"},
           {"attr", a.attr},
           {"arch", a.arch},
           {"micro_f1", report.micro_f1},
           {"balanced_acc", report.balanced_acc},
           {"num_classes", report.num_classes},
           {"folds", report.folds},
           {"repeats", report.repeats},
           {"fold_f1", report.fold_f1},
           {"fold_balanced_acc", report.fold_balanced_acc},
           {"fold_epochs", report.fold_epochs},
           {"seed", a.seed}};
    write_json(a.out, j);
  }
}

// --------------------------------------------------------------- evaluate --
struct EvaluateArgs {
  std::string split, emb, ref, out;
  std::vector<std::uint32_t> ks{5, 10};
  double rbo_p = 0.9;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto bundle = read_bundle(a.split, false);
  const auto table = aurec::load_embeddings(a.emb);
  check_table_matches(table, bundle.split);
  auto report = aurec::eval_ranking(table, bundle.split, a.ks);
  if (!a.ref.empty()) {
    const auto ref = aurec::load_embeddings(a.ref);
    check_table_matches(ref, bundle.split);
    report.rbo10_vs_original = mean_rbo_topk(table, ref, bundle.split.train_items, 10, a.rbo_p);
  }
  print_metrics_table(report);
  if (!a.out.empty()) write_json(a.out, metrics_json(report));
}

// ---------------------------------------------------------- perturb-study --
struct PerturbArgs {
  std::string split, emb, out;
  std::uint32_t trials = 300, k = 20;
  double budget = 0.5, lambda = 0.05, tau = 1000.0, rbo_p = 0.9;
  std::uint64_t seed = 1;
};

void cmd_perturb_study(const PerturbArgs& a) {
  const auto bundle = read_bundle(a.split, false);
  const auto table = aurec::load_embeddings(a.emb);
  check_table_matches(table, bundle.split);
  aurec::RegConfig reg;
  reg.k = a.k;
  reg.lambda = a.lambda;
  reg.tau = a.tau;
  const auto snap = aurec::make_snapshot(table, bundle.split.train_items, reg, a.seed);
  const double lr_base = aurec::rank_reg_loss(table, snap, reg.lambda);
  std::vector<std::vector<std::uint32_t>> base_top(table.num_users());
  for (std::uint32_t u = 0; u < table.num_users(); ++u) {
    for (const auto& s : aurec::recommend_topk(table, u, 10, bundle.split.train_items[u])) {
      base_top[u].push_back(s.item);
    }
  }
  std::ofstream csv(a.out);
  if (!csv) throw std::runtime_error("cannot write " + a.out);
  csv << "trial,l2,l_r,rbo10\n";
  std::vector<double> l2s, lrs, rbos;
  aurec::EmbeddingTable pert = table;
  char buf[200];
  for (std::uint32_t t = 0; t < a.trials; ++t) {
    aurec::Rng rng(a.seed, "perturb:" + std::to_string(t));
    const double m = a.budget * rng.uniform_pos();  // per-trial row norm in (0, budget]
    pert.user_emb = table.user_emb;
    double l2 = 0.0;
    Eigen::RowVectorXd delta(table.dim());
    for (std::uint32_t u = 0; u < table.num_users(); ++u) {
      for (Eigen::Index j = 0; j < delta.size(); ++j) delta(j) = rng.gaussian();
      const double norm = delta.norm();
      if (norm > 0.0) delta *= m / norm;
      pert.user_emb.row(u) += delta;
      l2 += delta.squaredNorm();
    }
    // l_r reported as excess over the unperturbed snapshot loss: a constant
    // shift (invisible to Pearson) that makes the zero-budget case exactly 0.
    const double lr_excess = aurec::rank_reg_loss(pert, snap, reg.lambda) - lr_base;
    double rbo_sum = 0.0;
    for (std::uint32_t u = 0; u < table.num_users(); ++u) {
      std::vector<std::uint32_t> top;
      for (const auto& s : aurec::recommend_topk(pert, u, 10, bundle.split.train_items[u])) {
        top.push_back(s.item);
      }
      rbo_sum += aurec::rbo(base_top[u], top, a.rbo_p);
    }
    const double rbo10 = rbo_sum / static_cast<double>(table.num_users());
    std::snprintf(buf, sizeof(buf), "%u,%.17g,%.17g,%.17g\n", t, l2, lr_excess, rbo10);
    csv << buf;
    l2s.push_back(l2);
    lrs.push_back(lr_excess);
    rbos.push_back(rbo10);
  }
  json summary{{"command", "perturb-study"}, {"trials", a.trials}, {"budget", a.budget},
               {"l_r_baseline", lr_base}};
  bool degenerate = a.budget <= 0.0 || a.trials < 2;
  double c_l2 = 0.0, c_lr = 0.0;
  if (!degenerate) {
    try {
      c_l2 = aurec::pearson(l2s, rbos);
      c_lr = aurec::pearson(lrs, rbos);
    } catch (const std::invalid_argument&) {
      degenerate = true;
    }
  }
  summary["degenerate"] = degenerate;
  if (degenerate) {
    summary["corr_l2_rbo"] = nullptr;
    summary["corr_lr_rbo"] = nullptr;
  } else {
    summary["corr_l2_rbo"] = c_l2;
    summary["corr_lr_rbo"] = c_lr;
    summary["ordering_ok"] = (c_lr < c_l2 && c_l2 < 0.0);
  }
  write_json(a.out + ".summary.json", summary);
  std::cout << summary.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedding-table recommender training, attribute unlearning, and evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI/TOML file (sections per subcommand)");

  PrepareArgs pa;
  auto* prep = app.add_subcommand("prepare", "filter interactions, split, and persist a workspace");
  prep->add_option("--interactions", pa.interactions, "raw interaction file")->required();
  prep->add_option("--attributes", pa.attributes, "user attribute file");
  prep->add_option("--format", pa.format, "interaction format")
      ->check(CLI::IsMember({"ml100k", "ml1m", "csv"}));
  prep->add_option("--attr-format", pa.attr_format, "attribute file format")
      ->check(CLI::IsMember({"ml100k", "csv"}));
  prep->add_option("--out", pa.out, "output split directory")->required();
  prep->add_option("--min-user", pa.min_user, "minimum interactions per user");
  prep->add_option("--min-item", pa.min_item, "minimum interactions per item");
  prep->callback([&] { cmd_prepare(pa); });

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train embeddings on a prepared split");
  train->add_option("--split", ta.split, "split directory")->required();
  train->add_option("--out", ta.out, "output embedding file")->required();
  train->add_option("--loss", ta.loss, "training loss")->check(CLI::IsMember({"bpr", "ce"}));
  train->add_option("--dim", ta.dim, "embedding dimension")->check(CLI::PositiveNumber);
  train->add_option("--epochs", ta.epochs, "training epochs")->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.lr, "learning rate")->check(CLI::PositiveNumber);
  train->add_option("--batch", ta.batch, "batch size")->check(CLI::PositiveNumber);
  train->add_option("--neg-per-pos", ta.neg_per_pos, "negatives per positive (ce)")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", ta.seed, "global seed");
  train->add_option("--eval-k", ta.ks, "cutoffs for the post-train report");
  train->callback([&] { cmd_train(ta); });

  UnlearnArgs ua;
  auto* unl = app.add_subcommand("unlearn", "unlearn attributes from trained embeddings");
  unl->add_option("--split", ua.split, "split directory")->required();
  unl->add_option("--emb", ua.emb, "input embedding file")->required();
  unl->add_option("--out", ua.out, "output embedding file")->required();
  unl->add_option("--method", ua.method, "unlearning method")
      ->check(CLI::IsMember({"d2d_fr", "d2d_pr"}));
  unl->add_option("--attr", ua.attrs, "attribute name (repeat for two-attribute mode)")
      ->required();
  unl->add_option("--alpha", ua.alpha, "regularizer weight")->check(CLI::NonNegativeNumber);
  unl->add_option("--alpha1", ua.alpha1, "first distinguishability weight (two-attribute mode)");
  unl->add_option("--alpha2", ua.alpha2, "second distinguishability weight (two-attribute mode)");
  unl->add_option("--lr", ua.lr, "learning rate")->check(CLI::PositiveNumber);
  unl->add_option("--epochs", ua.epochs, "unlearning epochs")->check(CLI::PositiveNumber);
  unl->add_option("--seed", ua.seed, "global seed");
  unl->add_option("--k", ua.k, "protected top-k length")->check(CLI::PositiveNumber);
  unl->add_option("--margin", ua.lambda, "base hinge margin")->check(CLI::NonNegativeNumber);
  unl->add_option("--tau", ua.tau, "adaptive-weight temperature")->check(CLI::PositiveNumber);
  unl->add_option("--anchor-size", ua.anchor_size, "anchor sample size cap")
      ->check(CLI::PositiveNumber);
  unl->add_option("--group-cap", ua.group_cap, "per-class subsample cap")
      ->check(CLI::PositiveNumber);
  unl->add_flag("--freeze-items", ua.freeze_items, "do not update item embeddings");
  unl->add_option("--trace", ua.trace, "loss trace CSV path (default <out>.trace.csv)");
  unl->callback([&] { cmd_unlearn(ua); });

  AttackArgs aa;
  auto* atk = app.add_subcommand("attack", "attribute-inference attack on embeddings");
  atk->add_option("--split", aa.split, "split directory")->required();
  atk->add_option("--emb", aa.emb, "embedding file")->required();
  atk->add_option("--attr", aa.attr, "attribute to infer")->required();
  atk->add_option("--arch", aa.arch, "hidden widths, comma-separated ('none' for linear)");
  atk->add_option("--folds", aa.folds, "cross-validation folds")->check(CLI::PositiveNumber);
  atk->add_option("--repeats", aa.repeats, "independent CV runs")->check(CLI::PositiveNumber);
  atk->add_option("--lr", aa.lr, "attacker learning rate")->check(CLI::PositiveNumber);
  atk->add_option("--l2", aa.l2, "attacker weight penalty")->check(CLI::NonNegativeNumber);
  atk->add_option("--max-epochs", aa.max_epochs, "attacker epoch cap")->check(CLI::PositiveNumber);
  atk->add_option("--batch", aa.batch, "attacker batch size")->check(CLI::PositiveNumber);
  atk->add_option("--seed", aa.seed, "global seed");
  atk->add_option("--out", aa.out, "report JSON path");
  atk->callback([&] { cmd_attack(aa); });

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "full-ranking recommendation metrics");
  ev->add_option("--split", ea.split, "split directory")->required();
  ev->add_option("--emb", ea.emb, "embedding file")->required();
  ev->add_option("--k", ea.ks, "ranking cutoffs");
  ev->add_option("--ref", ea.ref, "reference embeddings for RBO@10");
  ev->add_option("--rbo-p", ea.rbo_p, "RBO persistence")->check(CLI::Range(1e-9, 1.0 - 1e-9));
  ev->add_option("--out", ea.out, "report JSON path");
  ev->callback([&] { cmd_evaluate(ea); });

  PerturbArgs ba;
  auto* pb = app.add_subcommand("perturb-study",
                                "loss-vs-ranking correlation under random embedding noise");
  pb->add_option("--split", ba.split, "split directory")->required();
  pb->add_option("--emb", ba.emb, "embedding file")->required();
  pb->add_option("--out", ba.out, "output CSV path")->required();
  pb->add_option("--trials", ba.trials, "number of perturbations")->check(CLI::PositiveNumber);
  pb->add_option("--budget", ba.budget, "max per-user row norm")->check(CLI::NonNegativeNumber);
  pb->add_option("--k", ba.k, "protected top-k length")->check(CLI::PositiveNumber);
  pb->add_option("--margin", ba.lambda, "base hinge margin")->check(CLI::NonNegativeNumber);
  pb->add_option("--tau", ba.tau, "adaptive-weight temperature")->check(CLI::PositiveNumber);
  pb->add_option("--rbo-p", ba.rbo_p, "RBO persistence")->check(CLI::Range(1e-9, 1.0 - 1e-9));
  pb->add_option("--seed", ba.seed, "global seed");
  pb->callback([&] { cmd_perturb_study(ba); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
