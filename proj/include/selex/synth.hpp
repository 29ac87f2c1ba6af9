#pragma once
// Synthetic like logs with a known concentration parameter, plus brute-force
// reference implementations used to check the fast metrics.
//
// Generative process:
//   - each post is assigned to a page uniformly at random;
//   - each post's topic mixture is drawn from a symmetric Dirichlet(alpha),
//     sampled as independent Gamma(alpha, 1) draws normalized to sum 1;
//   - each user draws a home page uniformly and an activity from the
//     activity law; every like goes, with probability `loyalty`, to a random
//     not-yet-liked post of the home page, otherwise to a random not-yet-liked
//     post of a uniformly drawn page;
//   - timestamps are uniform over the time horizon.
// Users draw from independent generators seeded from (seed, user index), so
// the output does not depend on the number of worker threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "selex/common.hpp"
#include "selex/dataset.hpp"
#include "selex/ingest.hpp"

namespace selex {

struct ActivityLaw {
  enum class Kind { constant, power_law };

  Kind kind = Kind::constant;
  std::uint32_t k = 10;  // constant activity
  double gamma = 2.5;    // power-law exponent
  std::uint32_t min = 1;
  std::uint32_t max = 1000;
};

struct SynthConfig {
  std::uint32_t n_users = 1000;
  std::uint32_t n_pages = 50;
  std::uint32_t n_posts = 5000;
  std::uint32_t n_topics = 20;
  double loyalty = 0.9;
  double topic_concentration = 1.0;
  ActivityLaw activity;
  double time_horizon_days = 365.0;
  std::int64_t start_time = 1262304000;  // 2010-01-01T00:00:00Z
  std::uint64_t seed = 42;

  void validate() const {
    if (n_users < 1 || n_pages < 1 || n_posts < 1 || n_topics < 1)
      throw FatalError("synth: n_users, n_pages, n_posts and n_topics must all be >= 1");
    if (!(loyalty >= 0.0 && loyalty <= 1.0)) throw FatalError("synth: loyalty must lie in [0,1]");
    if (!(topic_concentration > 0.0) || !std::isfinite(topic_concentration))
      throw FatalError("synth: topic_concentration must be > 0");
    if (!(time_horizon_days >= 0.0)) throw FatalError("synth: time_horizon_days must be >= 0");
    if (start_time < 0) throw FatalError("synth: start_time must be >= 0");
    if (activity.kind == ActivityLaw::Kind::constant) {
      if (activity.k < 1) throw FatalError("synth: constant activity must be >= 1");
    } else {
      if (activity.min < 1 || activity.max < activity.min)
        throw FatalError("synth: power-law activity needs 1 <= min <= max");
      if (!(activity.gamma > 0.0)) throw FatalError("synth: power-law exponent must be > 0");
    }
    const auto max_activity = activity.kind == ActivityLaw::Kind::constant ? activity.k : activity.max;
    if (max_activity > n_posts)
      throw FatalError("synth: infeasible, activity " + std::to_string(max_activity) + " exceeds the " +
                       std::to_string(n_posts) + " available posts");
  }
};

// Applies one key=value setting. Accepted activity values:
// "constant:K" and "powerlaw:GAMMA:MIN:MAX".
inline void apply_setting(SynthConfig& cfg, std::string_view key, std::string_view value) {
  auto as_u32 = [&](std::string_view v) {
    std::uint32_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
      throw FatalError("synth: bad integer for " + std::string(key) + ": " + std::string(v));
    return out;
  };
  auto as_f64 = [&](std::string_view v) {
    double out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
      throw FatalError("synth: bad number for " + std::string(key) + ": " + std::string(v));
    return out;
  };
  if (key == "n_users") cfg.n_users = as_u32(value);
  else if (key == "n_pages") cfg.n_pages = as_u32(value);
  else if (key == "n_posts") cfg.n_posts = as_u32(value);
  else if (key == "n_topics") cfg.n_topics = as_u32(value);
  else if (key == "loyalty") cfg.loyalty = as_f64(value);
  else if (key == "topic_concentration") cfg.topic_concentration = as_f64(value);
  else if (key == "time_horizon_days") cfg.time_horizon_days = as_f64(value);
  else if (key == "start_time") {
    std::int64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
      throw FatalError("synth: bad start_time: " + std::string(value));
    cfg.start_time = v;
  } else if (key == "seed") {
    std::uint64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
      throw FatalError("synth: bad seed: " + std::string(value));
    cfg.seed = v;
  } else if (key == "activity") {
    const auto f = split(value, ':');
    if (f[0] == "constant" && f.size() == 2) {
      cfg.activity.kind = ActivityLaw::Kind::constant;
      cfg.activity.k = as_u32(f[1]);
    } else if (f[0] == "powerlaw" && f.size() == 4) {
      cfg.activity.kind = ActivityLaw::Kind::power_law;
      cfg.activity.gamma = as_f64(f[1]);
      cfg.activity.min = as_u32(f[2]);
      cfg.activity.max = as_u32(f[3]);
    } else {
      throw FatalError("synth: activity must be constant:K or powerlaw:GAMMA:MIN:MAX, got " + std::string(value));
    }
  } else {
    throw FatalError("synth: unknown setting '" + std::string(key) + "'");
  }
}

// Flat key=value file; blank lines and lines starting with '#' are ignored.
inline SynthConfig parse_synth_config(std::string_view text, SynthConfig cfg = {}) {
  for_each_line(text, [&](std::string_view line) {
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') return;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FatalError("synth config: expected key=value, got '" + std::string(line) + "'");
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.remove_suffix(1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    while (!value.empty() && value.back() == ' ') value.remove_suffix(1);
    apply_setting(cfg, key, value);
  });
  return cfg;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ splitmix64(stream)) + index));
}

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline std::uint32_t draw_activity(const ActivityLaw& law, std::mt19937_64& rng) {
  if (law.kind == ActivityLaw::Kind::constant) return law.k;
  // Inverse CDF of a continuous power law on [min, max + 1), floored.
  const double lo = law.min;
  const double hi = static_cast<double>(law.max) + 1.0;
  const double u = uniform01(rng);
  double x = 0.0;
  if (std::abs(law.gamma - 1.0) < 1e-12) {
    x = lo * std::pow(hi / lo, u);
  } else {
    const double e = 1.0 - law.gamma;
    const double a = std::pow(lo, e);
    const double b = std::pow(hi, e);
    x = std::pow(a + u * (b - a), 1.0 / e);
  }
  return std::clamp(static_cast<std::uint32_t>(x), law.min, law.max);
}

inline std::string padded(char prefix, std::uint64_t i, std::uint64_t count) {
  const auto width = std::to_string(count > 0 ? count - 1 : 0).size();
  auto digits = std::to_string(i);
  return prefix + std::string(width - digits.size(), '0') + digits;
}

}  // namespace detail

struct SynthData {
  SynthConfig config;
  std::vector<std::uint32_t> post_page;
  std::vector<std::vector<std::uint32_t>> page_posts;
  std::vector<double> mixtures;         // posts x topics
  std::vector<std::uint32_t> home_page;  // per user
  std::vector<Interaction> likes;        // user-major, generation order within a user

  std::string user_token(std::uint32_t u) const { return detail::padded('u', u, config.n_users); }
  std::string post_token(std::uint32_t p) const { return detail::padded('p', p, config.n_posts); }
  std::string page_token(std::uint32_t g) const { return detail::padded('P', g, config.n_pages); }
  std::string topic_token(std::uint32_t t) const { return "t" + std::to_string(t); }
};

namespace detail {

inline constexpr std::uint64_t kPostStream = 1;
inline constexpr std::uint64_t kMixtureStream = 2;
inline constexpr std::uint64_t kUserStream = 3;

inline std::vector<Interaction> generate_user(const SynthData& data, std::uint32_t user, std::uint32_t& home) {
  const auto& cfg = data.config;
  auto rng = substream(cfg.seed, kUserStream, user);
  home = static_cast<std::uint32_t>(uniform_below(rng, cfg.n_pages));
  const auto k = draw_activity(cfg.activity, rng);
  if (cfg.loyalty >= 1.0 && k > data.page_posts[home].size())
    throw FatalError("synth: infeasible, user " + std::to_string(user) + " needs " + std::to_string(k) +
                     " distinct posts on its home page but it has " + std::to_string(data.page_posts[home].size()) +
                     " (loyalty = 1)");

  std::unordered_set<std::uint32_t> liked;
  std::unordered_map<std::uint32_t, std::uint32_t> liked_on_page;
  liked.reserve(k * 2);
  auto available = [&](std::uint32_t page) {
    auto it = liked_on_page.find(page);
    return data.page_posts[page].size() - (it == liked_on_page.end() ? 0 : it->second);
  };
  auto pick_from = [&](std::uint32_t page) {
    const auto& posts = data.page_posts[page];
    const auto taken = posts.size() - available(page);
    std::uint32_t post = 0;
    if (taken * 2 < posts.size()) {
      do {
        post = posts[uniform_below(rng, posts.size())];
      } while (liked.contains(post));
    } else {
      auto r = uniform_below(rng, posts.size() - taken);
      for (auto p : posts) {
        if (liked.contains(p)) continue;
        if (r-- == 0) {
          post = p;
          break;
        }
      }
    }
    liked.insert(post);
    ++liked_on_page[page];
    return post;
  };

  const auto horizon = static_cast<std::uint64_t>(std::llround(cfg.time_horizon_days * 86400.0));
  std::vector<Interaction> out;
  out.reserve(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    std::uint32_t page = kNone;
    if (uniform01(rng) < cfg.loyalty && available(home) > 0) {
      page = home;
    } else {
      do {
        page = static_cast<std::uint32_t>(uniform_below(rng, cfg.n_pages));
      } while (available(page) == 0);
    }
    const auto post = pick_from(page);
    const auto ts = cfg.start_time + static_cast<std::int64_t>(uniform_below(rng, horizon + 1));
    out.push_back({user, post, ts});
  }
  return out;
}

}  // namespace detail

inline SynthData generate(const SynthConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  SynthData data;
  data.config = cfg;

  auto post_rng = detail::substream(cfg.seed, detail::kPostStream, 0);
  data.post_page.resize(cfg.n_posts);
  data.page_posts.assign(cfg.n_pages, {});
  for (std::uint32_t p = 0; p < cfg.n_posts; ++p) {
    data.post_page[p] = static_cast<std::uint32_t>(detail::uniform_below(post_rng, cfg.n_pages));
    data.page_posts[data.post_page[p]].push_back(p);
  }

  const std::size_t k = cfg.n_topics;
  data.mixtures.assign(static_cast<std::size_t>(cfg.n_posts) * k, 0.0);
  parallel_for(cfg.n_posts, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      auto rng = detail::substream(cfg.seed, detail::kMixtureStream, p);
      std::gamma_distribution<double> gamma(cfg.topic_concentration, 1.0);
      auto* row = data.mixtures.data() + p * k;
      double sum = 0.0;
      for (std::size_t t = 0; t < k; ++t) sum += (row[t] = gamma(rng));
      if (sum > 0.0 && std::isfinite(sum)) {
        for (std::size_t t = 0; t < k; ++t) row[t] /= sum;
      } else {
        // Every draw underflowed (tiny alpha): fall back to a one-hot mixture.
        std::fill(row, row + k, 0.0);
        row[detail::uniform_below(rng, k)] = 1.0;
      }
    }
  });

  data.home_page.assign(cfg.n_users, 0);
  std::vector<std::vector<Interaction>> per_user(cfg.n_users);
  parallel_for(cfg.n_users, threads, [&](std::size_t lo, std::size_t hi) {
    for (auto u = static_cast<std::uint32_t>(lo); u < hi; ++u)
      per_user[u] = detail::generate_user(data, u, data.home_page[u]);
  });
  std::size_t total = 0;
  for (const auto& v : per_user) total += v.size();
  data.likes.reserve(total);
  for (auto& v : per_user) {
    data.likes.insert(data.likes.end(), v.begin(), v.end());
    std::vector<Interaction>().swap(v);
  }
  return data;
}

// Builds the analysis dataset directly, without a round trip through files.
inline Dataset to_dataset(const SynthData& data, bool with_topics = true) {
  const auto& cfg = data.config;
  std::vector<std::string> users, posts, pages, topics;
  for (std::uint32_t u = 0; u < cfg.n_users; ++u) users.push_back(data.user_token(u));
  for (std::uint32_t p = 0; p < cfg.n_posts; ++p) posts.push_back(data.post_token(p));
  for (std::uint32_t g = 0; g < cfg.n_pages; ++g) pages.push_back(data.page_token(g));
  for (std::uint32_t t = 0; t < cfg.n_topics; ++t) topics.push_back(data.topic_token(t));

  InteractionLog log;
  log.users = IdIndex::in_order(std::move(users));
  log.posts = IdIndex::in_order(posts);
  log.records = data.likes;
  std::sort(log.records.begin(), log.records.end(), [](const Interaction& a, const Interaction& b) {
    return a.user != b.user ? a.user < b.user : a.post < b.post;
  });
  log.stats.rows = log.stats.records = log.records.size();

  std::vector<PostMeta> meta;
  meta.reserve(cfg.n_posts);
  for (std::uint32_t p = 0; p < cfg.n_posts; ++p) meta.push_back({posts[p], data.page_token(data.post_page[p])});

  if (!with_topics) return assemble(std::move(log), meta, nullptr);
  TopicMixtures mix;
  mix.topic_names = std::move(topics);
  mix.post_ids = std::move(posts);
  mix.values = data.mixtures;
  mix.stats.rows = mix.stats.accepted = cfg.n_posts;
  return assemble(std::move(log), meta, &mix);
}

struct SynthFiles {
  std::string interactions;
  std::string posts;
  std::string topics;
};

// Writes interactions.csv, posts.csv and topics.csv into `dir`.
inline SynthFiles write_dataset(const SynthData& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  SynthFiles files{(fs::path(dir) / "interactions.csv").string(), (fs::path(dir) / "posts.csv").string(),
                   (fs::path(dir) / "topics.csv").string()};
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FatalError("cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw FatalError("cannot write " + path);
  };

  const auto& cfg = data.config;
  std::vector<std::string> user_tok(cfg.n_users), post_tok(cfg.n_posts);
  for (std::uint32_t u = 0; u < cfg.n_users; ++u) user_tok[u] = data.user_token(u);
  for (std::uint32_t p = 0; p < cfg.n_posts; ++p) post_tok[p] = data.post_token(p);

  std::string text;
  text.reserve(data.likes.size() * 32 + 64);
  text.append(kInteractionsHeader).push_back('\n');
  char buf[32];
  for (const auto& r : data.likes) {
    text.append(user_tok[r.user]).push_back(',');
    text.append(post_tok[r.post]).push_back(',');
    auto res = std::to_chars(buf, buf + sizeof(buf), r.timestamp);
    text.append(buf, res.ptr).push_back('\n');
  }
  write(files.interactions, text);

  text.clear();
  text.append(kPostsHeader).push_back('\n');
  for (std::uint32_t p = 0; p < cfg.n_posts; ++p)
    text.append(post_tok[p]).append(",").append(data.page_token(data.post_page[p])).push_back('\n');
  write(files.posts, text);

  text.clear();
  text.append("post_id");
  for (std::uint32_t t = 0; t < cfg.n_topics; ++t) text.append(",").append(data.topic_token(t));
  text.push_back('\n');
  for (std::uint32_t p = 0; p < cfg.n_posts; ++p) {
    text.append(post_tok[p]);
    for (std::uint32_t t = 0; t < cfg.n_topics; ++t) {
      text.push_back(',');
      text.append(shortest(data.mixtures[static_cast<std::size_t>(p) * cfg.n_topics + t]));
    }
    text.push_back('\n');
  }
  write(files.topics, text);
  return files;
}

// ---------------------------------------------------------------------------
// Reference implementations

// Literal double sum: Delta = (1/n^2) sum_i sum_j |y_i - y_j|, g = Delta / (2 mu).
inline double brute_force_gini(std::span<const double> values) {
  if (values.empty()) throw UndefinedInput("gini of an empty vector");
  if (values.size() > 4096) throw FatalError("brute_force_gini is limited to n <= 4096");
  const double n = static_cast<double>(values.size());
  double mu = 0.0;
  for (double v : values) mu += v;
  mu /= n;
  if (mu == 0.0) throw UndefinedInput("gini of an all-zero vector (mean is 0)");
  double delta = 0.0;
  for (double a : values)
    for (double b : values) delta += std::abs(a - b);
  delta /= n * n;
  return delta / (2.0 * mu);
}

// Exhaustive minimum of the page Gini over every allocation of n_likes likes
// to n_pages pages (all compositions, not just partitions).
inline double brute_force_gini_min(std::uint32_t n_likes, std::uint32_t n_pages) {
  if (n_likes < 1 || n_pages < 1) throw UndefinedInput("brute_force_gini_min requires n_likes, n_pages >= 1");
  // Number of compositions: C(n_likes + n_pages - 1, n_pages - 1).
  double count = 1.0;
  for (std::uint32_t i = 1; i < n_pages; ++i) count = count * (n_likes + i) / i;
  if (count > 2e7) throw FatalError("brute_force_gini_min: too many allocations to enumerate");

  std::vector<std::int64_t> alloc(n_pages, 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  // Enumerate compositions recursively: alloc[i] takes every value that
  // leaves a non-negative remainder; the last page takes what is left.
  auto recurse = [&](auto&& self, std::uint32_t i, std::int64_t remaining) -> void {
    if (i + 1 == n_pages) {
      alloc[i] = remaining;
      std::int64_t s = 0;
      for (auto a : alloc)
        for (auto b : alloc) s += a > b ? a - b : b - a;
      best = std::min(best, s);
      return;
    }
    for (std::int64_t v = 0; v <= remaining; ++v) {
      alloc[i] = v;
      self(self, i + 1, remaining - v);
    }
  };
  recurse(recurse, 0, n_likes);
  // g = sum|a-b| / (2 n_P sum a)
  return static_cast<double>(best) / static_cast<double>(2 * static_cast<std::int64_t>(n_pages) * n_likes);
}

}  // namespace selex
