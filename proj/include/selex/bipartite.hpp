#pragma once
// Per-user incidence structures: user x post (binary), user x page (counts)
// and user x topic (real weights).

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selex/common.hpp"
#include "selex/dataset.hpp"
#include "selex/ingest.hpp"

namespace selex {

// CSR layout: the posts liked by user u are posts[offsets[u] .. offsets[u+1]),
// sorted ascending. Users with no likes have an empty row and are treated as
// absent by every accessor that needs activity.
struct UserPostIncidence {
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> posts;
  std::vector<std::int64_t> first_ts;
  std::vector<std::int64_t> last_ts;

  std::size_t n_users() const { return offsets.size() - 1; }
  std::size_t n_likes() const { return posts.size(); }
  std::size_t degree(std::uint32_t u) const { return offsets[u + 1] - offsets[u]; }
  bool contains(std::uint32_t u) const { return u < n_users() && degree(u) > 0; }
  std::span<const std::uint32_t> liked(std::uint32_t u) const {
    return {posts.data() + offsets[u], degree(u)};
  }

  friend bool operator==(const UserPostIncidence&, const UserPostIncidence&) = default;
};

// Records must already be free of duplicate (user, post) pairs; input order
// does not matter.
inline UserPostIncidence build_user_post(std::span<const Interaction> records, std::size_t n_users) {
  std::vector<Interaction> sorted;
  std::span<const Interaction> view = records;
  const auto by_user_post = [](const Interaction& a, const Interaction& b) {
    return a.user != b.user ? a.user < b.user : a.post < b.post;
  };
  if (!std::is_sorted(records.begin(), records.end(), by_user_post)) {
    sorted.assign(records.begin(), records.end());
    std::sort(sorted.begin(), sorted.end(), by_user_post);
    view = sorted;
  }

  UserPostIncidence upi;
  upi.offsets.assign(n_users + 1, 0);
  upi.first_ts.assign(n_users, 0);
  upi.last_ts.assign(n_users, 0);
  upi.posts.reserve(view.size());
  for (std::size_t i = 0; i < view.size(); ++i) {
    const auto& r = view[i];
    if (r.user >= n_users) throw FatalError("interaction references user index out of range");
    if (i > 0 && view[i - 1].user == r.user && view[i - 1].post == r.post)
      throw FatalError("duplicate (user, post) pair in user-post incidence");
    const bool first = upi.offsets[r.user + 1] == 0;
    ++upi.offsets[r.user + 1];
    upi.posts.push_back(r.post);
    if (first) {
      upi.first_ts[r.user] = upi.last_ts[r.user] = r.timestamp;
    } else {
      upi.first_ts[r.user] = std::min(upi.first_ts[r.user], r.timestamp);
      upi.last_ts[r.user] = std::max(upi.last_ts[r.user], r.timestamp);
    }
  }
  for (std::size_t u = 0; u < n_users; ++u) upi.offsets[u + 1] += upi.offsets[u];
  return upi;
}

struct PageCount {
  std::uint32_t page = 0;
  std::uint32_t count = 0;

  friend bool operator==(const PageCount&, const PageCount&) = default;
};

// Sparse rows of I*_uP, sorted by page.
struct UserPageVectors {
  std::size_t n_pages = 0;
  std::vector<std::uint64_t> offsets{0};
  std::vector<PageCount> entries;

  std::span<const PageCount> row(std::uint32_t u) const {
    return {entries.data() + offsets[u], offsets[u + 1] - offsets[u]};
  }
  std::size_t distinct_pages(std::uint32_t u) const { return offsets[u + 1] - offsets[u]; }
};

inline UserPageVectors aggregate_by_page(const UserPostIncidence& upi, std::span<const std::uint32_t> post_page,
                                         std::size_t n_pages, unsigned threads = 1) {
  const auto n = upi.n_users();
  auto page_of = [&](std::uint32_t post) {
    const auto page = post < post_page.size() ? post_page[post] : kNone;
    if (page == kNone) throw FatalError("liked post index " + std::to_string(post) + " has no page assignment");
    return page;
  };
  auto row_pages = [&](std::uint32_t u, std::vector<std::uint32_t>& buf) {
    buf.clear();
    for (auto p : upi.liked(u)) buf.push_back(page_of(p));
    std::sort(buf.begin(), buf.end());
  };

  UserPageVectors out;
  out.n_pages = n_pages;
  out.offsets.assign(n + 1, 0);
  parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint32_t> buf;
    for (auto u = static_cast<std::uint32_t>(lo); u < hi; ++u) {
      row_pages(u, buf);
      out.offsets[u + 1] = static_cast<std::uint64_t>(std::unique(buf.begin(), buf.end()) - buf.begin());
    }
  });
  for (std::size_t u = 0; u < n; ++u) out.offsets[u + 1] += out.offsets[u];
  out.entries.resize(out.offsets[n]);
  parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint32_t> buf;
    for (auto u = static_cast<std::uint32_t>(lo); u < hi; ++u) {
      row_pages(u, buf);
      auto dst = out.entries.begin() + static_cast<std::ptrdiff_t>(out.offsets[u]);
      for (std::size_t i = 0; i < buf.size();) {
        std::size_t j = i;
        while (j < buf.size() && buf[j] == buf[i]) ++j;
        *dst++ = {buf[i], static_cast<std::uint32_t>(j - i)};
        i = j;
      }
    }
  });
  return out;
}

// Dense rows of I†_ut: entry t is the sum of p_t over the user's liked posts
// that carry a mixture, summed in ascending post order.
struct UserTopicVectors {
  std::size_t n_topics = 0;
  std::vector<double> weights;               // users x topics
  std::vector<std::uint32_t> mixture_likes;  // liked posts with a mixture, per user
  std::uint64_t likes_without_mixture = 0;

  std::span<const double> row(std::uint32_t u) const {
    return {weights.data() + static_cast<std::size_t>(u) * n_topics, n_topics};
  }
};

inline UserTopicVectors aggregate_by_topic(const UserPostIncidence& upi, std::span<const double> mixtures,
                                           std::span<const std::uint8_t> has_mixture, std::size_t n_topics,
                                           unsigned threads = 1) {
  const auto n = upi.n_users();
  UserTopicVectors out;
  out.n_topics = n_topics;
  out.weights.assign(n * n_topics, 0.0);
  out.mixture_likes.assign(n, 0);
  parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
    for (auto u = static_cast<std::uint32_t>(lo); u < hi; ++u) {
      auto* acc = out.weights.data() + static_cast<std::size_t>(u) * n_topics;
      for (auto p : upi.liked(u)) {
        if (p >= has_mixture.size() || !has_mixture[p]) continue;
        const auto* src = mixtures.data() + static_cast<std::size_t>(p) * n_topics;
        for (std::size_t t = 0; t < n_topics; ++t) acc[t] += src[t];
        ++out.mixture_likes[u];
      }
    }
  });
  std::uint64_t with = 0;
  for (auto c : out.mixture_likes) with += c;
  out.likes_without_mixture = upi.n_likes() - with;
  return out;
}

// ---------------------------------------------------------------------------
// On-disk cache of a UserPostIncidence.
//
// Layout (native little-endian):
//   char[8]  magic "SELXUPI\0"
//   u32      version (1)
//   u32      reserved (0)
//   u64      n_users
//   u64      n_likes
//   u64[n_users + 1] offsets
//   u32[n_likes]     posts
//   i64[n_users]     first_ts
//   i64[n_users]     last_ts

inline constexpr std::array<char, 8> kCacheMagic{'S', 'E', 'L', 'X', 'U', 'P', 'I', '\0'};
inline constexpr std::uint32_t kCacheVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_array(std::ofstream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FatalError("truncated incidence cache");
  return v;
}

template <typename T>
void read_array(std::ifstream& in, std::vector<T>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw FatalError("truncated incidence cache");
}

}  // namespace detail

inline void save_incidence(const std::string& path, const UserPostIncidence& upi) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FatalError("cannot write cache: " + path);
  out.write(kCacheMagic.data(), kCacheMagic.size());
  detail::write_pod(out, kCacheVersion);
  detail::write_pod(out, std::uint32_t{0});
  detail::write_pod(out, static_cast<std::uint64_t>(upi.n_users()));
  detail::write_pod(out, static_cast<std::uint64_t>(upi.n_likes()));
  detail::write_array(out, upi.offsets);
  detail::write_array(out, upi.posts);
  detail::write_array(out, upi.first_ts);
  detail::write_array(out, upi.last_ts);
  if (!out) throw FatalError("cannot write cache: " + path);
}

inline UserPostIncidence load_incidence(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FatalError("cannot open cache: " + path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCacheMagic) throw FatalError("not an incidence cache: " + path);
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != kCacheVersion) throw FatalError("unsupported cache version " + std::to_string(version));
  (void)detail::read_pod<std::uint32_t>(in);
  const auto n_users = detail::read_pod<std::uint64_t>(in);
  const auto n_likes = detail::read_pod<std::uint64_t>(in);
  UserPostIncidence upi;
  detail::read_array(in, upi.offsets, n_users + 1);
  detail::read_array(in, upi.posts, n_likes);
  detail::read_array(in, upi.first_ts, n_users);
  detail::read_array(in, upi.last_ts, n_users);
  if (upi.offsets.front() != 0 || upi.offsets.back() != n_likes ||
      !std::is_sorted(upi.offsets.begin(), upi.offsets.end()))
    throw FatalError("corrupt incidence cache: " + path);
  return upi;
}

}  // namespace selex
