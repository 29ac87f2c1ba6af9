#pragma once
// Per-user selective-exposure metrics.
//
// Gini index of a vector y of length n:
//   Delta = (1/n^2) sum_i sum_j |y_i - y_j|,   g = Delta / (2 mean(y))
// computed here through the sorted-order identity
//   g = sum_k (n + 1 - 2k) (w_(n+1-k) - w_(k)) / n,   w = y / sum(y),
// where w_(k) is the k-th smallest entry and k runs over the lower half.
// Every term is non-negative, so constant vectors give exactly 0 and a
// single non-zero entry gives exactly (n-1)/n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "selex/bipartite.hpp"
#include "selex/common.hpp"

namespace selex {

inline constexpr double kSecondsPerDay = 86400.0;

// Exactly rounded floating-point summation (Shewchuk's partials).
class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  double value() const {
    if (partials_.empty()) return 0.0;
    auto n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    // Round-half-even correction across the remaining partials.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

  const std::vector<double>& partials() const { return partials_; }

 private:
  std::vector<double> partials_;
};

inline double gini(std::span<const double> values) {
  if (values.empty()) throw UndefinedInput("gini of an empty vector");
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw UndefinedInput("gini requires finite non-negative entries");
    sum += v;
  }
  if (sum == 0.0) throw UndefinedInput("gini of an all-zero vector (mean is 0)");

  std::vector<double> w(values.begin(), values.end());
  std::sort(w.begin(), w.end());
  for (double& v : w) v /= sum;
  const std::size_t n = w.size();
  double acc = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    acc += static_cast<double>(n + 1 - 2 * k) * (w[n - k] - w[k - 1]);
  }
  return acc / static_cast<double>(n);
}

namespace detail {

// Numerator of the page Gini with integer counts: sum_P sum_Q |c_P - c_Q| / 2
// over the full zero-padded axis equals sum_i (2i - n - 1) c_(i).
inline std::int64_t page_gini_numerator(std::span<const PageCount> row, std::size_t n_pages,
                                        std::int64_t& total) {
  std::vector<std::int64_t> counts;
  counts.reserve(row.size());
  total = 0;
  for (const auto& e : row) {
    counts.push_back(e.count);
    total += e.count;
  }
  std::sort(counts.begin(), counts.end());
  const auto n = static_cast<std::int64_t>(n_pages);
  const auto m = static_cast<std::int64_t>(counts.size());
  std::int64_t num = 0;
  for (std::int64_t j = 1; j <= m; ++j) num += (n - 2 * m + 2 * j - 1) * counts[static_cast<std::size_t>(j - 1)];
  return num;
}

}  // namespace detail

// Lower bound of the page Gini for a user with n_likes likes over n_pages
// pages: (n_pages - n_likes) / n_pages when n_likes <= n_pages, else 0.
inline double gini_min(std::uint64_t n_likes, std::uint64_t n_pages) {
  if (n_likes < 1 || n_pages < 1) throw UndefinedInput("gini_min requires n_likes >= 1 and n_pages >= 1");
  if (n_likes > n_pages) return 0.0;
  return static_cast<double>(n_pages - n_likes) / static_cast<double>(n_pages);
}

// g* over a sparse count row padded with zeros to n_pages entries.
inline double gini_pages_raw(std::span<const PageCount> row, std::size_t n_pages) {
  if (row.size() > n_pages) throw UndefinedInput("page row has more entries than pages");
  std::int64_t total = 0;
  const auto num = detail::page_gini_numerator(row, n_pages, total);
  if (total == 0) throw UndefinedInput("gini of an all-zero page vector");
  return static_cast<double>(num) / static_cast<double>(static_cast<std::int64_t>(n_pages) * total);
}

// g▷ = (g* - g*_min) / (1 - g*_min). With integer counts this reduces to
// (num - K (n - K)) / K^2 for K <= n, which is evaluated exactly before the
// final division.
inline double gini_pages_norm(std::span<const PageCount> row, std::size_t n_pages) {
  if (row.size() > n_pages) throw UndefinedInput("page row has more entries than pages");
  std::int64_t total = 0;
  const auto num = detail::page_gini_numerator(row, n_pages, total);
  if (total == 0) throw UndefinedInput("gini of an all-zero page vector");
  const auto n = static_cast<std::int64_t>(n_pages);
  if (total > n) return static_cast<double>(num) / static_cast<double>(n * total);
  const std::int64_t excess = std::max<std::int64_t>(0, num - total * (n - total));
  return std::min(1.0, static_cast<double>(excess) / static_cast<double>(total * total));
}

// ---------------------------------------------------------------------------
// Topic binarization

// A post treats topic t iff p_t > (1/n_p) sum_i p_t^i over the corpus of
// posts that carry a mixture. The comparison is exact.
struct TopicEngagementRule {
  std::size_t n_posts = 0;
  std::vector<double> threshold;           // rounded mean, for reporting
  std::vector<std::vector<double>> sums;   // exact column sums as partials

  bool treats(std::size_t topic, double p) const {
    const double t = threshold[topic];
    const double gap = std::abs(p - t);
    if (gap > 1e-9 * std::max(1.0, std::abs(t))) return p > t;
    // p * n_p - sum, evaluated without rounding.
    const double n = static_cast<double>(n_posts);
    const double hi = p * n;
    const double lo = std::fma(p, n, -hi);
    ExactSum s;
    s.add(hi);
    s.add(lo);
    for (double part : sums[topic]) s.add(-part);
    return s.value() > 0.0;
  }
};

struct TopicBinarization {
  TopicEngagementRule rule;
  std::size_t n_topics = 0;
  std::vector<std::uint8_t> treats;  // posts x topics; rows without a mixture are all 0

  bool post_treats(std::uint32_t post, std::size_t topic) const {
    return treats[static_cast<std::size_t>(post) * n_topics + topic] != 0;
  }
};

inline TopicBinarization binarize_topics(std::span<const double> mixtures, std::span<const std::uint8_t> has_mixture,
                                         std::size_t n_topics) {
  const std::size_t n_rows = has_mixture.size();
  if (mixtures.size() != n_rows * n_topics) throw FatalError("mixture matrix shape mismatch");
  TopicBinarization out;
  out.n_topics = n_topics;
  std::vector<ExactSum> sums(n_topics);
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (!has_mixture[i]) continue;
    ++out.rule.n_posts;
    for (std::size_t t = 0; t < n_topics; ++t) sums[t].add(mixtures[i * n_topics + t]);
  }
  if (out.rule.n_posts == 0) throw FatalError("topic binarization needs at least one post with a mixture");
  for (std::size_t t = 0; t < n_topics; ++t) {
    out.rule.threshold.push_back(sums[t].value() / static_cast<double>(out.rule.n_posts));
    out.rule.sums.push_back(sums[t].partials());
  }
  out.treats.assign(n_rows * n_topics, 0);
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (!has_mixture[i]) continue;
    for (std::size_t t = 0; t < n_topics; ++t)
      out.treats[i * n_topics + t] = out.rule.treats(t, mixtures[i * n_topics + t]) ? 1 : 0;
  }
  return out;
}

// Every row is taken to carry a mixture.
inline TopicBinarization binarize_topics(std::span<const double> mixtures, std::size_t n_topics) {
  if (n_topics == 0) throw FatalError("topic binarization needs at least one topic");
  std::vector<std::uint8_t> all(mixtures.size() / n_topics, 1);
  return binarize_topics(mixtures, all, n_topics);
}

inline std::uint32_t topics_per_user(const UserPostIncidence& upi, std::uint32_t user, const TopicBinarization& bin) {
  std::vector<std::uint8_t> seen(bin.n_topics, 0);
  std::uint32_t count = 0;
  for (auto p : upi.liked(user)) {
    if (static_cast<std::size_t>(p) * bin.n_topics >= bin.treats.size()) continue;
    for (std::size_t t = 0; t < bin.n_topics; ++t) {
      if (!seen[t] && bin.post_treats(p, t)) {
        seen[t] = 1;
        ++count;
      }
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// Per-user profile

inline std::uint64_t activity(const UserPostIncidence& upi, std::uint32_t user) {
  if (!upi.contains(user)) throw std::out_of_range("unknown user index " + std::to_string(user));
  return upi.degree(user);
}

inline double lifetime(const UserPostIncidence& upi, std::uint32_t user) {
  if (!upi.contains(user)) throw std::out_of_range("unknown user index " + std::to_string(user));
  return static_cast<double>(upi.last_ts[user] - upi.first_ts[user]) / kSecondsPerDay;
}

inline std::uint32_t pages_per_user(const UserPageVectors& pages, std::uint32_t user) {
  return static_cast<std::uint32_t>(pages.distinct_pages(user));
}

// g† over the user's dense topic row; empty when the user liked no post that
// carries a mixture.
inline std::optional<double> gini_topics(const UserTopicVectors& topics, std::uint32_t user) {
  if (topics.mixture_likes.at(user) == 0) return std::nullopt;
  return gini(topics.row(user));
}

struct UserProfile {
  std::uint32_t user = 0;
  std::uint64_t activity = 0;
  double lifetime_days = 0.0;
  std::uint32_t n_pages = 0;
  std::optional<std::uint32_t> n_topics;  // empty without topic data
  std::optional<double> g_topics;
  double g_pages_raw = 0.0;
  double g_pages_min = 0.0;
  double g_pages_norm = 0.0;
};

// Profiles for every user with at least one like, in user-index order.
// `topics` and `bin` may be null when no topic data is available.
inline std::vector<UserProfile> compute_profiles(const UserPostIncidence& upi, const UserPageVectors& pages,
                                                 const UserTopicVectors* topics, const TopicBinarization* bin,
                                                 unsigned threads = 1) {
  const auto n = upi.n_users();
  std::vector<UserProfile> all(n);
  std::vector<std::uint8_t> present(n, 0);
  parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
    for (auto u = static_cast<std::uint32_t>(lo); u < hi; ++u) {
      if (!upi.contains(u)) continue;
      present[u] = 1;
      auto& p = all[u];
      p.user = u;
      p.activity = upi.degree(u);
      p.lifetime_days = lifetime(upi, u);
      p.n_pages = pages_per_user(pages, u);
      const auto row = pages.row(u);
      p.g_pages_raw = gini_pages_raw(row, pages.n_pages);
      p.g_pages_min = gini_min(p.activity, pages.n_pages);
      p.g_pages_norm = gini_pages_norm(row, pages.n_pages);
      if (topics) p.g_topics = gini_topics(*topics, u);
      if (bin) p.n_topics = topics_per_user(upi, u, *bin);
    }
  });
  std::vector<UserProfile> out;
  out.reserve(n);
  for (std::size_t u = 0; u < n; ++u)
    if (present[u]) out.push_back(all[u]);
  return out;
}

}  // namespace selex
