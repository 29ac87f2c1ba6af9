#pragma once
// Ingestion of like logs, post->page metadata and post->topic mixture tables.
//
// All string identifiers are re-indexed to dense integers in sorted token
// order, so the resulting indices do not depend on file row order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "selex/common.hpp"

namespace selex {

enum class Format { csv, jsonl };

inline Format parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "jsonl") return Format::jsonl;
  throw FatalError("unknown input format: " + std::string(s));
}

// Identifiers are restricted to [A-Za-z0-9_-].
inline bool valid_token(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-';
  });
}

// Bijection token <-> dense index.
class IdIndex {
 public:
  IdIndex() = default;
  IdIndex(const IdIndex& other) : tokens_(other.tokens_) { rebuild(); }
  IdIndex& operator=(const IdIndex& other) {
    if (this != &other) {
      tokens_ = other.tokens_;
      rebuild();
    }
    return *this;
  }
  IdIndex(IdIndex&&) noexcept = default;
  IdIndex& operator=(IdIndex&&) noexcept = default;

  // Indices follow the sorted order of the (deduplicated) tokens.
  static IdIndex sorted(std::vector<std::string> tokens) {
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return IdIndex(std::move(tokens));
  }

  // Indices follow the given order; tokens must be distinct.
  static IdIndex in_order(std::vector<std::string> tokens) {
    IdIndex idx(std::move(tokens));
    if (idx.lookup_.size() != idx.tokens_.size()) throw FatalError("duplicate identifier in ordered index");
    return idx;
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& token(std::uint32_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::uint32_t find(std::string_view token) const {
    auto it = lookup_.find(token);
    return it == lookup_.end() ? kNone : it->second;
  }

  std::uint32_t at(std::string_view token) const {
    const auto i = find(token);
    if (i == kNone) throw std::out_of_range("unknown identifier: " + std::string(token));
    return i;
  }

  friend bool operator==(const IdIndex& a, const IdIndex& b) { return a.tokens_ == b.tokens_; }

 private:
  explicit IdIndex(std::vector<std::string> tokens) : tokens_(std::move(tokens)) { rebuild(); }

  void rebuild() {
    lookup_.clear();
    lookup_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      lookup_.emplace(std::string_view(tokens_[i]), static_cast<std::uint32_t>(i));
  }

  std::vector<std::string> tokens_;
  // Keys view into tokens_; moving the vector keeps the element storage.
  std::unordered_map<std::string_view, std::uint32_t> lookup_;
};

// ---------------------------------------------------------------------------
// Interactions

struct InteractionRecord {
  std::string_view user_id;
  std::string_view post_id;
  std::int64_t timestamp = 0;
};

struct IngestStats {
  std::uint64_t rows = 0;  // non-blank data rows
  std::uint64_t records = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t malformed = 0;
};

// One like after re-indexing.
struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t post = 0;
  std::int64_t timestamp = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct InteractionLog {
  IdIndex users;
  IdIndex posts;  // posts referenced by at least one like
  std::vector<Interaction> records;  // deduplicated, sorted by (user, post)
  IngestStats stats;
};

inline constexpr std::string_view kInteractionsHeader = "user_id,post_id,timestamp";
inline constexpr std::string_view kPostsHeader = "post_id,page_id";

namespace detail {

inline bool parse_timestamp(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && out >= 0;
}

inline bool parse_csv_interaction(std::string_view line, InteractionRecord& rec) {
  const auto c1 = line.find(',');
  if (c1 == std::string_view::npos) return false;
  const auto c2 = line.find(',', c1 + 1);
  if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) return false;
  rec.user_id = line.substr(0, c1);
  rec.post_id = line.substr(c1 + 1, c2 - c1 - 1);
  if (!valid_token(rec.user_id) || !valid_token(rec.post_id)) return false;
  return parse_timestamp(line.substr(c2 + 1), rec.timestamp);
}

// Decoded JSON strings are stored in `arena` so the returned views stay valid.
inline bool parse_jsonl_interaction(std::string_view line, InteractionRecord& rec,
                                    std::deque<std::string>& arena) {
  auto obj = nlohmann::json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) return false;
  auto u = obj.find("user_id");
  auto p = obj.find("post_id");
  auto t = obj.find("timestamp");
  if (u == obj.end() || p == obj.end() || t == obj.end()) return false;
  if (!u->is_string() || !p->is_string() || !t->is_number_integer()) return false;
  const auto ts = t->get<std::int64_t>();
  if (ts < 0) return false;
  const auto& us = u->get_ref<const std::string&>();
  const auto& ps = p->get_ref<const std::string&>();
  if (!valid_token(us) || !valid_token(ps)) return false;
  rec.user_id = arena.emplace_back(us);
  rec.post_id = arena.emplace_back(ps);
  rec.timestamp = ts;
  return true;
}

// Splits `body` into at most `parts` pieces ending on line boundaries.
inline std::vector<std::string_view> line_chunks(std::string_view body, std::size_t parts) {
  std::vector<std::string_view> out;
  parts = std::max<std::size_t>(1, parts);
  const std::size_t target = body.size() / parts + 1;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t end = std::min(body.size(), pos + target);
    if (end < body.size()) {
      const auto nl = body.find('\n', end);
      end = nl == std::string_view::npos ? body.size() : nl + 1;
    }
    out.push_back(body.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

// Assigns dense ids in sorted token order. Returns per-row ids.
inline std::vector<std::uint32_t> index_column(const std::vector<std::string_view>& column, IdIndex& index) {
  std::unordered_map<std::string_view, std::uint32_t> provisional;
  provisional.reserve(column.size() / 4 + 16);
  std::vector<std::string_view> names;
  std::vector<std::uint32_t> ids(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    auto [it, inserted] = provisional.try_emplace(column[i], static_cast<std::uint32_t>(names.size()));
    if (inserted) names.push_back(column[i]);
    ids[i] = it->second;
  }
  std::vector<std::uint32_t> order(names.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return names[a] < names[b]; });
  std::vector<std::uint32_t> remap(names.size());
  std::vector<std::string> sorted_names;
  sorted_names.reserve(names.size());
  for (std::uint32_t rank = 0; rank < order.size(); ++rank) {
    remap[order[rank]] = rank;
    sorted_names.emplace_back(names[order[rank]]);
  }
  for (auto& id : ids) id = remap[id];
  index = IdIndex::in_order(std::move(sorted_names));
  return ids;
}

}  // namespace detail

// Validates every data row of `text` and calls fn(const InteractionRecord&)
// for each well-formed one, in file order. Duplicates are not removed here.
// Views passed to fn are valid only for the duration of the call.
template <typename Fn>
IngestStats scan_interactions(std::string_view text, Format format, Fn&& fn) {
  IngestStats stats;
  bool header_seen = format == Format::jsonl;
  std::deque<std::string> arena;
  for_each_line(text, [&](std::string_view line) {
    if (!header_seen) {
      if (line != kInteractionsHeader)
        throw FatalError("interactions header must be '" + std::string(kInteractionsHeader) + "'");
      header_seen = true;
      return;
    }
    if (line.empty()) return;
    ++stats.rows;
    InteractionRecord rec;
    const bool ok = format == Format::csv ? detail::parse_csv_interaction(line, rec)
                                          : detail::parse_jsonl_interaction(line, rec, arena);
    if (!ok) {
      ++stats.malformed;
      return;
    }
    ++stats.records;
    fn(rec);
    arena.clear();
  });
  if (!header_seen) throw FatalError("interactions file is missing its header row");
  return stats;
}

// Parses a full like log held in memory. Parsing is sharded over `threads`
// line-aligned chunks; the result is identical for any thread count.
// Duplicate (user, post) pairs keep the earliest timestamp.
inline InteractionLog parse_interactions_text(std::string_view text, Format format, unsigned threads = 1) {
  std::string_view body = text;
  if (format == Format::csv) {
    const auto nl = text.find('\n');
    const auto header = trim_cr(text.substr(0, nl));
    if (text.empty() || header != kInteractionsHeader)
      throw FatalError("interactions header must be '" + std::string(kInteractionsHeader) + "'");
    body = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
  }

  struct Shard {
    std::vector<std::string_view> users, posts;
    std::vector<std::int64_t> times;
    std::deque<std::string> arena;
    IngestStats stats;
  };
  const auto chunks = detail::line_chunks(body, threads);
  std::vector<Shard> shards(chunks.size());
  parallel_for(chunks.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      auto& sh = shards[c];
      sh.users.reserve(chunks[c].size() / 24);
      sh.posts.reserve(chunks[c].size() / 24);
      sh.times.reserve(chunks[c].size() / 24);
      for_each_line(chunks[c], [&](std::string_view line) {
        if (line.empty()) return;
        ++sh.stats.rows;
        InteractionRecord rec;
        const bool ok = format == Format::csv ? detail::parse_csv_interaction(line, rec)
                                              : detail::parse_jsonl_interaction(line, rec, sh.arena);
        if (!ok) {
          ++sh.stats.malformed;
          return;
        }
        sh.users.push_back(rec.user_id);
        sh.posts.push_back(rec.post_id);
        sh.times.push_back(rec.timestamp);
      });
    }
  });

  InteractionLog log;
  std::size_t total = 0;
  for (auto& sh : shards) {
    log.stats.rows += sh.stats.rows;
    log.stats.malformed += sh.stats.malformed;
    total += sh.users.size();
  }
  std::vector<std::string_view> users, posts;
  std::vector<std::int64_t> times;
  users.reserve(total);
  posts.reserve(total);
  times.reserve(total);
  for (auto& sh : shards) {
    users.insert(users.end(), sh.users.begin(), sh.users.end());
    posts.insert(posts.end(), sh.posts.begin(), sh.posts.end());
    times.insert(times.end(), sh.times.begin(), sh.times.end());
    std::vector<std::string_view>().swap(sh.users);
    std::vector<std::string_view>().swap(sh.posts);
  }

  const auto user_ids = detail::index_column(users, log.users);
  std::vector<std::string_view>().swap(users);
  const auto post_ids = detail::index_column(posts, log.posts);
  std::vector<std::string_view>().swap(posts);

  log.records.resize(total);
  for (std::size_t i = 0; i < total; ++i) log.records[i] = {user_ids[i], post_ids[i], times[i]};
  std::sort(log.records.begin(), log.records.end(), [](const Interaction& a, const Interaction& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.post != b.post) return a.post < b.post;
    return a.timestamp < b.timestamp;
  });
  auto last = std::unique(log.records.begin(), log.records.end(), [](const Interaction& a, const Interaction& b) {
    return a.user == b.user && a.post == b.post;
  });
  log.stats.duplicates = static_cast<std::uint64_t>(std::distance(last, log.records.end()));
  log.records.erase(last, log.records.end());
  log.records.shrink_to_fit();
  log.stats.records = log.records.size();
  return log;
}

inline InteractionLog parse_interactions(const std::string& path, Format format, unsigned threads = 1) {
  const std::string text = read_file(path);
  return parse_interactions_text(text, format, threads);
}

// ---------------------------------------------------------------------------
// Post -> page metadata

struct PostMeta {
  std::string post_id;
  std::string page_id;

  friend bool operator==(const PostMeta&, const PostMeta&) = default;
};

// Returns one entry per post, sorted by post_id. Identical duplicate rows are
// collapsed; a post listed under two different pages is fatal.
inline std::vector<PostMeta> parse_post_meta_text(std::string_view text, Format format = Format::csv) {
  std::vector<PostMeta> rows;
  bool header_seen = format == Format::jsonl;
  std::size_t line_no = 0;
  for_each_line(text, [&](std::string_view line) {
    ++line_no;
    if (!header_seen) {
      if (line != kPostsHeader) throw FatalError("posts header must be '" + std::string(kPostsHeader) + "'");
      header_seen = true;
      return;
    }
    if (line.empty()) return;
    PostMeta m;
    if (format == Format::csv) {
      const auto f = split(line, ',');
      if (f.size() != 2) throw FatalError("posts: malformed row at line " + std::to_string(line_no));
      m = {std::string(f[0]), std::string(f[1])};
    } else {
      auto obj = nlohmann::json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object() || !obj.contains("post_id") || !obj.contains("page_id") ||
          !obj["post_id"].is_string() || !obj["page_id"].is_string())
        throw FatalError("posts: malformed row at line " + std::to_string(line_no));
      m = {obj["post_id"].get<std::string>(), obj["page_id"].get<std::string>()};
    }
    if (!valid_token(m.post_id) || !valid_token(m.page_id))
      throw FatalError("posts: invalid identifier at line " + std::to_string(line_no));
    rows.push_back(std::move(m));
  });
  if (!header_seen) throw FatalError("posts file is missing its header row");
  std::sort(rows.begin(), rows.end(), [](const PostMeta& a, const PostMeta& b) {
    return a.post_id != b.post_id ? a.post_id < b.post_id : a.page_id < b.page_id;
  });
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].post_id == rows[i - 1].post_id)
      throw FatalError("post " + rows[i].post_id + " is assigned to two pages (" + rows[i - 1].page_id + ", " +
                       rows[i].page_id + ")");
  return rows;
}

inline std::vector<PostMeta> parse_post_meta(const std::string& path, Format format = Format::csv) {
  return parse_post_meta_text(read_file(path), format);
}

// ---------------------------------------------------------------------------
// Post -> topic mixtures

inline constexpr double kMixtureTolerance = 1e-6;

struct TopicStats {
  std::uint64_t rows = 0;
  std::uint64_t accepted = 0;
  std::uint64_t badsum = 0;
  std::uint64_t malformed = 0;  // unparsable value or value outside [0,1]
  std::uint64_t duplicates = 0;  // identical repeated rows
};

struct TopicMixtures {
  std::vector<std::string> topic_names;  // t0..t{K-1}, column order
  std::vector<std::string> post_ids;     // sorted, unique
  std::vector<double> values;            // row-major, post_ids.size() x n_topics()
  TopicStats stats;

  std::size_t n_topics() const { return topic_names.size(); }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_topics(), n_topics()}; }
};

// Validates a row's sum against the tolerance and rescales it to sum 1.
// Returns false when the row is outside the tolerance.
inline bool renormalize_mixture(std::span<double> row) {
  double sum = 0.0;
  for (double v : row) sum += v;
  if (!(std::abs(sum - 1.0) <= kMixtureTolerance)) return false;
  for (double& v : row) v /= sum;
  return true;
}

inline TopicMixtures parse_topic_mixtures_text(std::string_view text, Format format = Format::csv) {
  TopicMixtures out;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for_each_line(text, [&](std::string_view line) {
    ++line_no;
    if (!header_seen && format == Format::csv) {
      const auto f = split(line, ',');
      if (f.size() < 2 || f[0] != "post_id") throw FatalError("topics header must be 'post_id,t0,...,t{K-1}'");
      for (std::size_t k = 1; k < f.size(); ++k) {
        if (f[k] != "t" + std::to_string(k - 1)) throw FatalError("topics header must be 'post_id,t0,...,t{K-1}'");
        out.topic_names.emplace_back(f[k]);
      }
      header_seen = true;
      return;
    }
    if (line.empty()) return;
    ++out.stats.rows;
    std::string post;
    std::vector<double> values;
    bool ok = true;
    if (format == Format::csv) {
      const auto f = split(line, ',');
      if (f.size() != out.n_topics() + 1)
        throw FatalError("topics: row at line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                         " columns, expected " + std::to_string(out.n_topics() + 1));
      post = std::string(f[0]);
      values.resize(out.n_topics());
      for (std::size_t k = 0; k < values.size(); ++k) {
        auto s = f[k + 1];
        auto res = std::from_chars(s.data(), s.data() + s.size(), values[k]);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) ok = false;
      }
    } else {
      // {"post_id": "...", "proportions": [...]}
      auto obj = nlohmann::json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object() || !obj.contains("post_id") || !obj["post_id"].is_string() ||
          !obj.contains("proportions") || !obj["proportions"].is_array())
        throw FatalError("topics: malformed row at line " + std::to_string(line_no));
      post = obj["post_id"].get<std::string>();
      const auto& arr = obj["proportions"];
      if (!header_seen) {
        for (std::size_t k = 0; k < arr.size(); ++k) out.topic_names.push_back("t" + std::to_string(k));
        if (out.topic_names.empty()) throw FatalError("topics: empty proportions at line " + std::to_string(line_no));
        header_seen = true;
      }
      if (arr.size() != out.n_topics())
        throw FatalError("topics: row at line " + std::to_string(line_no) + " has " + std::to_string(arr.size()) +
                         " proportions, expected " + std::to_string(out.n_topics()));
      for (const auto& v : arr) {
        if (!v.is_number()) {
          ok = false;
          break;
        }
        values.push_back(v.get<double>());
      }
    }
    if (!valid_token(post)) ok = false;
    for (double v : values)
      if (!(v >= 0.0 && v <= 1.0)) ok = false;
    if (!ok) {
      ++out.stats.malformed;
      return;
    }
    if (!renormalize_mixture(values)) {
      ++out.stats.badsum;
      return;
    }
    rows.emplace_back(std::move(post), std::move(values));
  });
  if (!header_seen && format == Format::csv) throw FatalError("topics file is missing its header row");

  std::sort(rows.begin(), rows.end());
  const auto before = rows.size();
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  out.stats.duplicates = before - rows.size();
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].first == rows[i - 1].first)
      throw FatalError("post " + rows[i].first + " has two different topic mixtures");
  out.stats.accepted = rows.size();
  out.post_ids.reserve(rows.size());
  out.values.reserve(rows.size() * out.n_topics());
  for (auto& [post, vals] : rows) {
    out.post_ids.push_back(std::move(post));
    out.values.insert(out.values.end(), vals.begin(), vals.end());
  }
  return out;
}

inline TopicMixtures parse_topic_mixtures(const std::string& path, Format format = Format::csv) {
  return parse_topic_mixtures_text(read_file(path), format);
}

}  // namespace selex
