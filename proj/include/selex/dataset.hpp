#pragma once
// Joins the three ingested tables on a single post index.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "selex/common.hpp"
#include "selex/ingest.hpp"

namespace selex {

struct Dataset {
  IdIndex users;
  IdIndex posts;  // union of posts seen in any input table
  IdIndex pages;
  IdIndex topics;  // empty when no mixture table was supplied

  std::vector<Interaction> likes;        // sorted by (user, post)
  std::vector<std::uint32_t> post_page;  // kNone when the post has no metadata
  std::vector<double> mixtures;          // posts x topics, zero rows when absent
  std::vector<std::uint8_t> has_mixture;

  IngestStats interaction_stats;
  std::optional<TopicStats> topic_stats;
  std::uint64_t liked_posts_without_meta = 0;
  std::uint64_t liked_posts_without_mixture = 0;

  bool has_topics() const { return !topics.empty(); }
  std::size_t n_users() const { return users.size(); }
  std::size_t n_posts() const { return posts.size(); }
  std::size_t n_pages() const { return pages.size(); }
  std::size_t n_topics() const { return topics.size(); }

  std::span<const double> mixture(std::uint32_t post) const {
    return {mixtures.data() + static_cast<std::size_t>(post) * n_topics(), n_topics()};
  }
};

namespace detail {

inline std::vector<std::string> sorted_union(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace detail

inline Dataset assemble(InteractionLog log, const std::vector<PostMeta>& meta, const TopicMixtures* mixtures) {
  Dataset ds;
  ds.interaction_stats = log.stats;

  std::vector<std::string> meta_posts;
  meta_posts.reserve(meta.size());
  for (const auto& m : meta) meta_posts.push_back(m.post_id);  // already sorted
  auto all_posts = detail::sorted_union(log.posts.tokens(), meta_posts);
  if (mixtures) all_posts = detail::sorted_union(all_posts, mixtures->post_ids);
  ds.posts = IdIndex::in_order(std::move(all_posts));

  std::vector<std::string> page_tokens;
  page_tokens.reserve(meta.size());
  for (const auto& m : meta) page_tokens.push_back(m.page_id);
  ds.pages = IdIndex::sorted(std::move(page_tokens));

  ds.post_page.assign(ds.n_posts(), kNone);
  for (const auto& m : meta) ds.post_page[ds.posts.at(m.post_id)] = ds.pages.at(m.page_id);

  // Both indices are sorted, so the remap is monotone and keeps (user, post)
  // ordering intact.
  std::vector<std::uint32_t> remap(log.posts.size());
  for (std::uint32_t i = 0; i < remap.size(); ++i) remap[i] = ds.posts.at(log.posts.token(i));
  ds.likes = std::move(log.records);
  for (auto& r : ds.likes) r.post = remap[r.post];
  ds.users = std::move(log.users);

  if (mixtures && mixtures->n_topics() > 0) {
    ds.topics = IdIndex::in_order(mixtures->topic_names);
    ds.topic_stats = mixtures->stats;
    const auto k = ds.n_topics();
    ds.mixtures.assign(ds.n_posts() * k, 0.0);
    ds.has_mixture.assign(ds.n_posts(), 0);
    for (std::size_t i = 0; i < mixtures->post_ids.size(); ++i) {
      const auto p = ds.posts.at(mixtures->post_ids[i]);
      const auto src = mixtures->row(i);
      std::copy(src.begin(), src.end(), ds.mixtures.begin() + static_cast<std::ptrdiff_t>(p * k));
      ds.has_mixture[p] = 1;
    }
  }

  for (std::uint32_t i = 0; i < remap.size(); ++i) {
    const auto p = remap[i];
    if (ds.post_page[p] == kNone) ++ds.liked_posts_without_meta;
    if (ds.has_topics() && !ds.has_mixture[p]) ++ds.liked_posts_without_mixture;
  }
  return ds;
}

struct InputPaths {
  std::string interactions;
  std::string posts;
  std::string topics;  // optional
  Format format = Format::csv;
};

inline Dataset load_dataset(const InputPaths& paths, unsigned threads = 1) {
  auto log = parse_interactions(paths.interactions, paths.format, threads);
  const auto meta = parse_post_meta(paths.posts, paths.format);
  if (paths.topics.empty()) return assemble(std::move(log), meta, nullptr);
  const auto mix = parse_topic_mixtures(paths.topics, paths.format);
  return assemble(std::move(log), meta, &mix);
}

}  // namespace selex
