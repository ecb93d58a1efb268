#pragma once
// Interaction loading, sparsity filtering, leave-one-out splitting, and
// user-attribute tables for the MovieLens-style datasets.
#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aurec {

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double rating = 0.0;  // kept for reporting; training treats presence as implicit feedback
  std::int64_t timestamp = 0;
};

struct InteractionSet {
  std::uint32_t num_users = 0;
  std::uint32_t num_items = 0;
  std::vector<Interaction> rows;             // dense ids, original file order
  std::vector<std::int64_t> raw_user_ids;    // dense id -> raw id
  std::vector<std::int64_t> raw_item_ids;
};

enum class InteractionFormat { ml100k, ml1m, csv };

inline InteractionFormat parse_format(std::string_view s) {
  if (s == "ml100k") return InteractionFormat::ml100k;
  if (s == "ml1m") return InteractionFormat::ml1m;
  if (s == "csv") return InteractionFormat::csv;
  throw std::invalid_argument("unknown interaction format: " + std::string(s));
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
  return out;
}

template <typename T>
T parse_num(std::string_view s, std::size_t line_no, const char* what) {
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      value = static_cast<T>(std::stod(std::string(s)));
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what);
    }
  } else {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, value);
    if (ec != std::errc{} || p != e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what);
    }
  }
  return value;
}

struct RawRow {
  std::int64_t user, item;
  double rating;
  std::int64_t timestamp;
};

inline RawRow parse_row(std::string_view line, std::string_view sep, std::size_t line_no) {
  const auto f = split(line, sep);
  if (f.size() < 4) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": expected 4 fields");
  }
  RawRow r;
  r.user = parse_num<std::int64_t>(f[0], line_no, "user id");
  r.item = parse_num<std::int64_t>(f[1], line_no, "item id");
  r.rating = parse_num<double>(f[2], line_no, "rating");
  r.timestamp = parse_num<std::int64_t>(f[3], line_no, "timestamp");
  return r;
}

// Remap raw ids to dense 0-based indices in order of first appearance,
// then renumber both sides sorted by raw id for stable output.
inline InteractionSet densify(const std::vector<RawRow>& raw) {
  std::map<std::int64_t, std::uint32_t> umap, imap;
  for (const auto& r : raw) {
    umap.emplace(r.user, 0);
    imap.emplace(r.item, 0);
  }
  InteractionSet out;
  out.raw_user_ids.reserve(umap.size());
  for (auto& [id, dense] : umap) {
    dense = static_cast<std::uint32_t>(out.raw_user_ids.size());
    out.raw_user_ids.push_back(id);
  }
  out.raw_item_ids.reserve(imap.size());
  for (auto& [id, dense] : imap) {
    dense = static_cast<std::uint32_t>(out.raw_item_ids.size());
    out.raw_item_ids.push_back(id);
  }
  out.num_users = static_cast<std::uint32_t>(umap.size());
  out.num_items = static_cast<std::uint32_t>(imap.size());
  out.rows.reserve(raw.size());
  for (const auto& r : raw) {
    out.rows.push_back({umap.at(r.user), imap.at(r.item), r.rating, r.timestamp});
  }
  return out;
}

}  // namespace detail

inline InteractionSet load_interactions(const std::filesystem::path& path, InteractionFormat fmt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interactions file: " + path.string());
  std::vector<detail::RawRow> raw;
  std::string line;
  std::size_t line_no = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    switch (fmt) {
      case InteractionFormat::ml100k:
        raw.push_back(detail::parse_row(line, "\t", line_no));
        break;
      case InteractionFormat::ml1m:
        raw.push_back(detail::parse_row(line, "::", line_no));
        break;
      case InteractionFormat::csv:
        if (!header_skipped) {
          header_skipped = true;  // header `user,item,rating,timestamp`
          break;
        }
        raw.push_back(detail::parse_row(line, ",", line_no));
        break;
    }
  }
  if (raw.empty()) throw std::runtime_error("no interactions in " + path.string());
  return detail::densify(raw);
}

// Drop users/items below the thresholds, iterating to a fixed point, then re-densify.
inline InteractionSet filter_sparse(const InteractionSet& set, std::uint32_t min_user = 5,
                                    std::uint32_t min_item = 5) {
  std::vector<detail::RawRow> rows;
  rows.reserve(set.rows.size());
  for (const auto& r : set.rows) {
    rows.push_back({set.raw_user_ids[r.user], set.raw_item_ids[r.item], r.rating, r.timestamp});
  }
  while (true) {
    std::map<std::int64_t, std::uint32_t> ucount, icount;
    for (const auto& r : rows) {
      ++ucount[r.user];
      ++icount[r.item];
    }
    std::vector<detail::RawRow> kept;
    kept.reserve(rows.size());
    for (const auto& r : rows) {
      if (ucount[r.user] >= min_user && icount[r.item] >= min_item) kept.push_back(r);
    }
    const bool fixed_point = kept.size() == rows.size();
    rows.swap(kept);
    if (fixed_point) break;
    if (rows.empty()) throw std::runtime_error("sparsity filter emptied the dataset");
  }
  return detail::densify(rows);
}

struct SplitSet {
  std::uint32_t num_users = 0;
  std::uint32_t num_items = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> train;  // (user, item)
  std::vector<std::uint32_t> valid;                            // per-user held-out item
  std::vector<std::uint32_t> test;
  std::vector<std::vector<std::uint32_t>> train_items;         // per-user train item lists
};

// Last interaction per user (by timestamp, file order breaking ties) -> test,
// second-to-last -> valid, remainder -> train.
inline SplitSet leave_one_out(const InteractionSet& set) {
  SplitSet out;
  out.num_users = set.num_users;
  out.num_items = set.num_items;
  out.valid.resize(set.num_users);
  out.test.resize(set.num_users);
  out.train_items.resize(set.num_users);
  struct Entry {
    std::int64_t timestamp;
    std::size_t file_order;
    std::uint32_t item;
  };
  std::vector<std::vector<Entry>> per_user(set.num_users);
  for (std::size_t i = 0; i < set.rows.size(); ++i) {
    const auto& r = set.rows[i];
    per_user[r.user].push_back({r.timestamp, i, r.item});
  }
  for (std::uint32_t u = 0; u < set.num_users; ++u) {
    auto& v = per_user[u];
    if (v.size() < 3) throw std::runtime_error("user " + std::to_string(u) + " has fewer than 3 interactions");
    std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.file_order < b.file_order;
    });
    out.test[u] = v[v.size() - 1].item;
    out.valid[u] = v[v.size() - 2].item;
    for (std::size_t i = 0; i + 2 < v.size(); ++i) {
      out.train.emplace_back(u, v[i].item);
      out.train_items[u].push_back(v[i].item);
    }
  }
  return out;
}

inline std::uint32_t bin_age(int years) {
  if (years < 35) return 0;
  if (years <= 45) return 1;
  return 2;
}

struct AttributeTable {
  std::vector<std::string> names;                  // attribute names, e.g. {"gender","age"}
  std::vector<std::vector<std::uint32_t>> labels;  // [attribute][user] -> class id
  std::vector<std::uint32_t> cardinality;          // classes per attribute

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw std::invalid_argument("unknown attribute: " + std::string(name));
  }
};

// ml-100k u.user: `user_id|age|gender|occupation|zip`; gender M -> 0, F -> 1; ages binned.
// Rows are matched to the (filtered) interaction set by raw user id; every surviving
// user must have a row. A leading header line is tolerated and skipped.
inline AttributeTable load_attributes_ml100k(const std::filesystem::path& path,
                                             const InteractionSet& ref) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open attributes file: " + path.string());
  std::map<std::int64_t, std::pair<std::uint32_t, std::uint32_t>> by_raw;  // raw id -> (gender, age bin)
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split(line, "|");
    if (f.size() < 3) throw std::runtime_error("line " + std::to_string(line_no) + ": expected 5 fields");
    if (line_no == 1 && !f[0].empty() && !std::isdigit(static_cast<unsigned char>(f[0][0]))) {
      continue;  // header line
    }
    const auto raw = detail::parse_num<std::int64_t>(f[0], line_no, "user id");
    const auto age = detail::parse_num<int>(f[1], line_no, "age");
    std::uint32_t gender;
    if (f[2] == "M") {
      gender = 0;
    } else if (f[2] == "F") {
      gender = 1;
    } else {
      throw std::runtime_error("line " + std::to_string(line_no) + ": bad gender");
    }
    by_raw[raw] = {gender, bin_age(age)};
  }
  AttributeTable out;
  out.names = {"gender", "age"};
  out.labels.assign(2, std::vector<std::uint32_t>(ref.num_users));
  for (std::uint32_t u = 0; u < ref.num_users; ++u) {
    const auto it = by_raw.find(ref.raw_user_ids[u]);
    if (it == by_raw.end()) {
      throw std::runtime_error("no attribute row for user raw id " +
                               std::to_string(ref.raw_user_ids[u]));
    }
    out.labels[0][u] = it->second.first;
    out.labels[1][u] = it->second.second;
  }
  out.cardinality = {2, 3};
  return out;
}

// Generic attribute csv: header `user,<attr1>,<attr2>,...`, integer class labels.
inline AttributeTable load_attributes_csv(const std::filesystem::path& path,
                                          const InteractionSet& ref) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open attributes file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty attributes file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split(line, ",");
  if (header.size() < 2 || header[0] != "user") {
    throw std::runtime_error("attributes csv must start with header `user,<attr>,...`");
  }
  AttributeTable out;
  for (std::size_t i = 1; i < header.size(); ++i) out.names.emplace_back(header[i]);
  std::map<std::int64_t, std::vector<std::uint32_t>> by_raw;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split(line, ",");
    if (f.size() != header.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": field count mismatch");
    }
    std::vector<std::uint32_t> row;
    for (std::size_t i = 1; i < f.size(); ++i) {
      row.push_back(detail::parse_num<std::uint32_t>(f[i], line_no, "label"));
    }
    by_raw[detail::parse_num<std::int64_t>(f[0], line_no, "user id")] = std::move(row);
  }
  out.labels.assign(out.names.size(), std::vector<std::uint32_t>(ref.num_users));
  for (std::uint32_t u = 0; u < ref.num_users; ++u) {
    const auto it = by_raw.find(ref.raw_user_ids[u]);
    if (it == by_raw.end()) {
      throw std::runtime_error("no attribute row for user raw id " +
                               std::to_string(ref.raw_user_ids[u]));
    }
    for (std::size_t a = 0; a < out.names.size(); ++a) out.labels[a][u] = it->second[a];
  }
  for (const auto& l : out.labels) {
    out.cardinality.push_back(l.empty() ? 0 : *std::max_element(l.begin(), l.end()) + 1);
  }
  return out;
}

// ---- canonical split files (written by the prepare command) ----

inline void write_split(const SplitSet& split, const AttributeTable& attrs,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "train.tsv");
    for (const auto& [u, i] : split.train) out << u << '\t' << i << '\n';
  }
  {
    std::ofstream out(dir / "valid.tsv");
    for (std::uint32_t u = 0; u < split.num_users; ++u) out << u << '\t' << split.valid[u] << '\n';
  }
  {
    std::ofstream out(dir / "test.tsv");
    for (std::uint32_t u = 0; u < split.num_users; ++u) out << u << '\t' << split.test[u] << '\n';
  }
  {
    std::ofstream out(dir / "attributes.tsv");
    out << "user";
    for (const auto& n : attrs.names) out << '\t' << n;
    out << '\n';
    for (std::uint32_t u = 0; u < split.num_users; ++u) {
      out << u;
      for (const auto& l : attrs.labels) out << '\t' << l[u];
      out << '\n';
    }
  }
}

inline SplitSet read_split(const std::filesystem::path& dir) {
  SplitSet out;
  auto read_pairs = [&](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open split file: " + p.string());
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::uint32_t u, i;
    while (in >> u >> i) pairs.emplace_back(u, i);
    return pairs;
  };
  out.train = read_pairs(dir / "train.tsv");
  const auto valid = read_pairs(dir / "valid.tsv");
  const auto test = read_pairs(dir / "test.tsv");
  if (valid.size() != test.size()) throw std::runtime_error("valid/test size mismatch");
  out.num_users = static_cast<std::uint32_t>(valid.size());
  out.valid.resize(out.num_users);
  out.test.resize(out.num_users);
  out.train_items.resize(out.num_users);
  std::uint32_t max_item = 0;
  for (const auto& [u, i] : valid) {
    if (u >= out.num_users) throw std::runtime_error("valid.tsv user id out of range");
    out.valid[u] = i;
    max_item = std::max(max_item, i);
  }
  for (const auto& [u, i] : test) {
    if (u >= out.num_users) throw std::runtime_error("test.tsv user id out of range");
    out.test[u] = i;
    max_item = std::max(max_item, i);
  }
  for (const auto& [u, i] : out.train) {
    if (u >= out.num_users) throw std::runtime_error("train.tsv user id out of range");
    out.train_items[u].push_back(i);
    max_item = std::max(max_item, i);
  }
  out.num_items = max_item + 1;
  return out;
}

inline AttributeTable read_attributes_tsv(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open attributes file: " + p.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty attributes file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split(line, "\t");
  AttributeTable out;
  for (std::size_t i = 1; i < header.size(); ++i) out.names.emplace_back(header[i]);
  out.labels.assign(out.names.size(), {});
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split(line, "\t");
    if (f.size() != header.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": field count mismatch");
    }
    for (std::size_t a = 0; a < out.names.size(); ++a) {
      out.labels[a].push_back(detail::parse_num<std::uint32_t>(f[a + 1], line_no, "label"));
    }
  }
  for (const auto& l : out.labels) {
    out.cardinality.push_back(l.empty() ? 0 : *std::max_element(l.begin(), l.end()) + 1);
  }
  return out;
}

}  // namespace aurec
