#pragma once
// Shared fixtures for the test suite: repo paths, a scratch directory, a
// subprocess runner for the CLI binary, toy data builders, and a
// finite-difference gradient checker.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "aurec/dataset.hpp"
#include "aurec/model.hpp"
#include "aurec/rng.hpp"

namespace testutil {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(AUREC_SOURCE_DIR); }
inline fs::path ml100k_data() { return source_dir() / "data" / "ml-100k" / "u.data"; }
inline fs::path ml100k_user() { return source_dir() / "data" / "ml-100k" / "u.user"; }
inline std::string cli_path() { return AUREC_CLI_PATH; }

// Per-process scratch directory, wiped at first use.
inline fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("aurec_tests_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct CliResult {
  int exit_code = -1;
  std::string out, err;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = scratch() / ("cli_out_" + std::to_string(counter));
  const fs::path err = scratch() / ("cli_err_" + std::to_string(counter));
  ++counter;
  const std::string cmd =
      cli_path() + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = (status == -1) ? -1 : (WIFEXITED(status) ? WEXITSTATUS(status) : -2);
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

// Synthetic split: each user gets `per_user` train items plus one valid and
// one test item, all distinct, sampled uniformly per user.
inline aurec::SplitSet toy_split(std::uint32_t M, std::uint32_t N, std::uint32_t per_user,
                                 std::uint64_t seed) {
  aurec::SplitSet s;
  s.num_users = M;
  s.num_items = N;
  s.train_items.resize(M);
  s.valid.resize(M);
  s.test.resize(M);
  aurec::Rng rng(seed, "toy-split");
  for (std::uint32_t u = 0; u < M; ++u) {
    const auto items = rng.sample_without_replacement(N, per_user + 2);
    for (std::uint32_t j = 0; j < per_user; ++j) {
      s.train.emplace_back(u, items[j]);
      s.train_items[u].push_back(items[j]);
    }
    s.valid[u] = items[per_user];
    s.test[u] = items[per_user + 1];
  }
  return s;
}

// Central finite difference over one coordinate of a matrix parameter.
inline double fd_grad(aurec::Mat& param, Eigen::Index r, Eigen::Index c,
                      const std::function<double()>& loss, double h = 1e-6) {
  const double orig = param(r, c);
  param(r, c) = orig + h;
  const double up = loss();
  param(r, c) = orig - h;
  const double down = loss();
  param(r, c) = orig;
  return (up - down) / (2.0 * h);
}

// Max relative error between an analytic gradient matrix and finite
// differences of `loss` over every coordinate of `param`.
inline double max_fd_rel_error(aurec::Mat& param, const aurec::Mat& analytic,
                               const std::function<double()>& loss, double h = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < param.rows(); ++r) {
    for (Eigen::Index c = 0; c < param.cols(); ++c) {
      const double orig = param(r, c);
      param(r, c) = orig + h;
      const double up = loss();
      param(r, c) = orig - h;
      const double down = loss();
      param(r, c) = orig;
      const double num = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(num), std::abs(analytic(r, c)), 1e-8});
      worst = std::max(worst, std::abs(num - analytic(r, c)) / denom);
    }
  }
  return worst;
}

}  // namespace testutil
