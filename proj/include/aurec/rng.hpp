#pragma once
// Deterministic randomness: one root seed fans out into independent labeled
// streams, and all sampling algorithms are implemented here so that results
// do not depend on the standard library's distribution internals.
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace aurec {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Label-derived stream seed: hash the label, fold in the root seed.
inline std::uint64_t sub_seed(std::uint64_t root, std::string_view label) {
  std::uint64_t h = fnv1a64(label);
  h ^= root + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

// mt19937_64 engine + portable sampling primitives.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  Rng(std::uint64_t root, std::string_view label) : eng_(sub_seed(root, label)) {}

  std::uint64_t next() { return eng_(); }

  // uniform double in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform double in (0, 1] (safe as a log() argument)
  double uniform_pos() { return 1.0 - uniform(); }

  // unbiased integer in [0, n) by rejection
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // standard normal via Box-Muller, one value cached
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  // k distinct values from [0, n) (k <= n), order not specified
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k) {
    // Floyd's algorithm; result order is insertion order, deterministic.
    std::vector<std::uint32_t> out;
    out.reserve(k);
    std::vector<bool> seen(n, false);
    for (std::uint32_t j = n - k; j < n; ++j) {
      auto t = static_cast<std::uint32_t>(below(j + 1));
      if (seen[t]) t = j;
      seen[t] = true;
      out.push_back(t);
    }
    return out;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace aurec
