#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "selex/metrics.hpp"
#include "selex/synth.hpp"

namespace selex {
namespace {

std::vector<PageCount> page_row(std::initializer_list<std::uint32_t> counts) {
  std::vector<PageCount> row;
  std::uint32_t page = 0;
  for (auto c : counts) row.push_back({page++, c});
  return row;
}

// --- gini -------------------------------------------------------------------

TEST(Gini, Equidistribution) { EXPECT_EQ(gini(std::vector<double>{1, 1, 1, 1}), 0.0); }

TEST(Gini, TwoValues) {
  // Delta = (|3-1| + |1-3|) / 4 = 1, mean = 2
  EXPECT_DOUBLE_EQ(gini(std::vector<double>{3, 1}), 0.25);
  EXPECT_DOUBLE_EQ(brute_force_gini(std::vector<double>{3, 1}), 0.25);
}

TEST(Gini, SingleNonZeroClosedForm) {
  for (double c : {0.1, 1.0, 7.3, 1e6}) EXPECT_EQ(gini(std::vector<double>{c, 0, 0, 0, 0}), 0.8);
}

TEST(Gini, AllZeroIsUndefined) {
  EXPECT_THROW(gini(std::vector<double>{0, 0, 0}), UndefinedInput);
  EXPECT_THROW(gini(std::vector<double>{}), UndefinedInput);
  EXPECT_THROW(gini(std::vector<double>{1, -1}), UndefinedInput);
  EXPECT_THROW(brute_force_gini(std::vector<double>{0, 0}), UndefinedInput);
}

TEST(Gini, MatchesDoubleSumOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> val(0.0, 10.0);
  std::uniform_int_distribution<std::size_t> len(1, 256);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> y(len(rng));
    for (auto& v : y) v = val(rng);
    worst = std::max(worst, std::abs(gini(y) - brute_force_gini(y)));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Gini, ScaleInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> y(1 + rng() % 100);
    for (auto& v : y) v = val(rng);
    const double g = gini(y);
    for (double c : {0.5, 2.0, 10.0}) {
      auto scaled = y;
      for (auto& v : scaled) v *= c;
      EXPECT_NEAR(gini(scaled), g, 1e-12);
    }
  }
}

// --- topics -----------------------------------------------------------------

TEST(GiniTopics, UniformOverAllTopicsIsZero) {
  UserTopicVectors tv{91, std::vector<double>(91, 3.0 / 91.0), {3}, 0};
  EXPECT_EQ(gini_topics(tv, 0), 0.0);
}

TEST(GiniTopics, AllMassOnOneTopic) {
  std::vector<double> row(91, 0.0);
  row[17] = 4.0;
  UserTopicVectors tv{91, row, {4}, 0};
  EXPECT_EQ(*gini_topics(tv, 0), 90.0 / 91.0);
}

TEST(GiniTopics, SinglePostMixture) {
  UserTopicVectors tv{2, {0.7, 0.3}, {1}, 0};
  EXPECT_NEAR(*gini_topics(tv, 0), 0.2, 1e-15);
}

TEST(GiniTopics, UnavailableWithoutMixtureLikes) {
  UserTopicVectors tv{2, {0.0, 0.0}, {0}, 1};
  EXPECT_FALSE(gini_topics(tv, 0).has_value());
}

// --- pages ------------------------------------------------------------------

TEST(GiniPages, RawExamples) {
  EXPECT_EQ(gini_pages_raw(page_row({1}), 10), 0.9);
  EXPECT_EQ(gini_pages_raw(page_row({5}), 10), 0.9);
  EXPECT_EQ(gini_pages_raw(page_row({1, 1, 1, 1, 1, 1, 1, 1, 1, 1}), 10), 0.0);
}

TEST(GiniPages, RawMatchesDenseGini) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n_pages = 1 + rng() % 40;
    std::vector<double> dense(n_pages, 0.0);
    std::vector<PageCount> row;
    for (std::uint32_t p = 0; p < n_pages; ++p) {
      if (rng() % 3) continue;
      const auto c = static_cast<std::uint32_t>(1 + rng() % 20);
      row.push_back({p, c});
      dense[p] = c;
    }
    if (row.empty()) continue;
    EXPECT_NEAR(gini_pages_raw(row, n_pages), brute_force_gini(dense), 1e-12);
  }
}

TEST(GiniMin, Examples) {
  EXPECT_EQ(gini_min(3, 10), 0.7);
  EXPECT_EQ(gini_min(10, 10), 0.0);
  EXPECT_EQ(gini_min(25, 10), 0.0);
  EXPECT_THROW(gini_min(0, 10), UndefinedInput);
}

// Frozen from brute_force_gini_min (exhaustive enumeration).
TEST(GiniMin, FrozenOracleValues) {
  EXPECT_EQ(brute_force_gini_min(3, 10), 0.7);
  EXPECT_EQ(brute_force_gini_min(10, 10), 0.0);
  // 11 likes on 10 pages: one page gets 2, sum|a-b| = 2*1*9 = 18, g = 18/220
  EXPECT_EQ(brute_force_gini_min(11, 10), 18.0 / 220.0);
  EXPECT_GT(brute_force_gini_min(11, 10), 0.0);
}

TEST(GiniMin, AgreesWithExhaustiveEnumeration) {
  for (std::uint32_t n_pages = 1; n_pages <= 6; ++n_pages) {
    for (std::uint32_t n_likes = 1; n_likes <= 6; ++n_likes) {
      const double brute = brute_force_gini_min(n_likes, n_pages);
      if (n_likes <= n_pages) EXPECT_EQ(gini_min(n_likes, n_pages), brute) << n_likes << "/" << n_pages;
      if (n_likes % n_pages == 0) EXPECT_EQ(brute, 0.0) << n_likes << "/" << n_pages;
    }
  }
}

TEST(GiniNorm, Examples) {
  EXPECT_EQ(gini_pages_norm(page_row({1}), 10), 0.0);
  EXPECT_DOUBLE_EQ(gini_pages_norm(page_row({5}), 10), 0.8);
  EXPECT_EQ(gini_pages_norm(page_row({1, 1, 1, 1, 1, 1, 1, 1, 1, 1}), 10), 0.0);
}

TEST(GiniNorm, MatchesRenormalizationFormula) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n_pages = 1 + rng() % 30;
    std::vector<PageCount> row;
    std::uint64_t k = 0;
    for (std::uint32_t p = 0; p < n_pages; ++p) {
      if (rng() % 4) continue;
      const auto c = static_cast<std::uint32_t>(1 + rng() % 6);
      row.push_back({p, c});
      k += c;
    }
    if (row.empty()) continue;
    const double raw = gini_pages_raw(row, n_pages);
    const double mn = gini_min(k, n_pages);
    const double norm = gini_pages_norm(row, n_pages);
    EXPECT_NEAR(norm, (raw - mn) / (1.0 - mn), 1e-12);
    EXPECT_GE(norm, 0.0);
    EXPECT_LE(norm, 1.0);
    EXPECT_LE(mn, raw);
  }
}

TEST(GiniNorm, OneLikeSpreadAnywhereIsZero) {
  for (std::size_t n = 1; n <= 200; ++n) {
    EXPECT_EQ(gini_pages_norm(page_row({1}), n), 0.0);
    std::vector<PageCount> spread;
    for (std::uint32_t p = 0; p < n; ++p) spread.push_back({p, 1});
    EXPECT_EQ(gini_pages_norm(spread, n), 0.0);
  }
}

// Moving one like from a less-liked page to a more-liked page never lowers g*.
TEST(GiniPages, TransferPropertyOfConcentration) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n_pages = 2 + rng() % 12;
    std::vector<std::uint32_t> counts(n_pages);
    for (auto& c : counts) c = static_cast<std::uint32_t>(rng() % 5);
    const auto from = rng() % n_pages, to = rng() % n_pages;
    if (from == to || counts[from] == 0 || counts[from] > counts[to]) continue;
    auto to_row = [&](const std::vector<std::uint32_t>& c) {
      std::vector<PageCount> row;
      for (std::uint32_t p = 0; p < c.size(); ++p)
        if (c[p]) row.push_back({p, c[p]});
      return row;
    };
    const double before = gini_pages_raw(to_row(counts), n_pages);
    --counts[from];
    ++counts[to];
    EXPECT_GE(gini_pages_raw(to_row(counts), n_pages), before);
  }
}

// --- binarization -----------------------------------------------------------

TEST(BinarizeTopics, StrictInequalityAgainstCorpusMean) {
  // single topic column [0.5, 0.1, 0.3], mean 0.3
  const std::vector<double> mix{0.5, 0.5, 0.1, 0.9, 0.3, 0.7};
  const auto bin = binarize_topics(mix, 2);
  EXPECT_TRUE(bin.post_treats(0, 0));
  EXPECT_FALSE(bin.post_treats(1, 0));
  EXPECT_FALSE(bin.post_treats(2, 0));
  EXPECT_EQ(bin.rule.n_posts, 3u);
  EXPECT_DOUBLE_EQ(bin.rule.threshold[0], 0.3);
}

TEST(BinarizeTopics, UniformCorpusTreatsNothing) {
  for (std::size_t k : {2u, 3u, 7u, 91u}) {
    std::vector<double> mix;
    for (int p = 0; p < 13; ++p)
      for (std::size_t t = 0; t < k; ++t) mix.push_back(1.0 / static_cast<double>(k));
    const auto bin = binarize_topics(mix, k);
    EXPECT_EQ(std::count(bin.treats.begin(), bin.treats.end(), 1), 0) << k;
  }
}

TEST(BinarizeTopics, SinglePostCorpusTreatsNothing) {
  const auto bin = binarize_topics(std::vector<double>{0.1, 0.2, 0.3, 0.4}, 4);
  EXPECT_EQ(std::count(bin.treats.begin(), bin.treats.end(), 1), 0);
}

TEST(BinarizeTopics, PostsWithoutMixtureAreOutsideTheCorpus) {
  const std::vector<double> mix{0.9, 0.1, 0.0, 0.0, 0.1, 0.9};
  const auto bin = binarize_topics(mix, std::vector<std::uint8_t>{1, 0, 1}, 2);
  EXPECT_EQ(bin.rule.n_posts, 2u);
  EXPECT_DOUBLE_EQ(bin.rule.threshold[0], 0.5);
  EXPECT_TRUE(bin.post_treats(0, 0));
  EXPECT_FALSE(bin.post_treats(1, 0));
  EXPECT_FALSE(bin.post_treats(1, 1));
  EXPECT_THROW(binarize_topics(mix, std::vector<std::uint8_t>{0, 0, 0}, 2), FatalError);
}

TEST(TopicsPerUser, UnionOfTreatedTopics) {
  // 4 topics; post 0 treats {1,2}, post 1 treats {2,3}, post 2 treats nothing.
  TopicBinarization bin;
  bin.n_topics = 4;
  bin.treats = {0, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 0};
  std::vector<Interaction> recs{{0, 0, 0}, {0, 1, 0}, {1, 2, 0}, {2, 0, 0}, {2, 1, 0}, {2, 2, 0}};
  const auto upi = build_user_post(recs, 3);
  EXPECT_EQ(topics_per_user(upi, 0, bin), 3u);
  EXPECT_EQ(topics_per_user(upi, 1, bin), 0u);
  EXPECT_EQ(topics_per_user(upi, 2, bin), 3u);
}

// --- activity, lifetime, pages ------------------------------------------------

TEST(Activity, DegreeAndLookup) {
  std::vector<Interaction> recs{{0, 0, 0}, {0, 1, 0}, {0, 2, 0}, {1, 0, 0}};
  const auto upi = build_user_post(recs, 3);
  EXPECT_EQ(activity(upi, 0), 3u);
  EXPECT_EQ(activity(upi, 1), 1u);
  EXPECT_THROW(activity(upi, 2), std::out_of_range);
  EXPECT_THROW(activity(upi, 7), std::out_of_range);
}

TEST(Activity, Biclique) {
  std::vector<Interaction> recs;
  for (std::uint32_t u = 0; u < 2; ++u)
    for (std::uint32_t p = 0; p < 5; ++p) recs.push_back({u, p, 0});
  const auto upi = build_user_post(recs, 2);
  EXPECT_EQ(activity(upi, 0), 5u);
  EXPECT_EQ(activity(upi, 1), 5u);
}

TEST(Lifetime, Days) {
  std::vector<Interaction> recs{{0, 0, 0}, {0, 1, 8640000}, {1, 0, 77}, {2, 0, 0}, {2, 1, 43200}};
  const auto upi = build_user_post(recs, 3);
  EXPECT_EQ(lifetime(upi, 0), 100.0);
  EXPECT_EQ(lifetime(upi, 1), 0.0);
  EXPECT_EQ(lifetime(upi, 2), 0.5);
  EXPECT_THROW(lifetime(upi, 3), std::out_of_range);
}

TEST(PagesPerUser, DistinctPages) {
  std::vector<Interaction> recs{{0, 0, 0}, {0, 1, 0}, {0, 2, 0}, {0, 3, 0}, {1, 3, 0}};
  for (std::uint32_t p = 0; p < 10; ++p) recs.push_back({2, 4 + p, 0});
  std::vector<std::uint32_t> post_page{0, 0, 0, 1};
  for (std::uint32_t p = 0; p < 10; ++p) post_page.push_back(p);
  const auto upi = build_user_post(recs, 3);
  const auto pv = aggregate_by_page(upi, post_page, 10);
  EXPECT_EQ(pages_per_user(pv, 0), 2u);
  EXPECT_EQ(pages_per_user(pv, 1), 1u);
  EXPECT_EQ(pages_per_user(pv, 2), 10u);
}

TEST(Profiles, InvariantsOnSyntheticData) {
  SynthConfig cfg;
  cfg.n_users = 400;
  cfg.n_pages = 20;
  cfg.n_posts = 800;
  cfg.n_topics = 8;
  cfg.activity = {ActivityLaw::Kind::power_law, 10, 2.0, 1, 60};
  cfg.loyalty = 0.7;
  cfg.seed = 9;
  const auto ds = to_dataset(generate(cfg));
  const auto upi = build_user_post(ds.likes, ds.n_users());
  const auto pv = aggregate_by_page(upi, ds.post_page, ds.n_pages());
  const auto tv = aggregate_by_topic(upi, ds.mixtures, ds.has_mixture, ds.n_topics());
  const auto bin = binarize_topics(ds.mixtures, ds.has_mixture, ds.n_topics());
  const auto profiles = compute_profiles(upi, pv, &tv, &bin, 1);
  const auto parallel = compute_profiles(upi, pv, &tv, &bin, 4);
  ASSERT_EQ(profiles.size(), parallel.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    EXPECT_GE(p.n_pages, 1u);
    EXPECT_LE(p.n_pages, std::min<std::uint64_t>(p.activity, ds.n_pages()));
    ASSERT_TRUE(p.n_topics.has_value());
    EXPECT_LE(*p.n_topics, ds.n_topics());
    EXPECT_LE(p.g_pages_min, p.g_pages_raw);
    EXPECT_LE(p.g_pages_raw, 1.0);
    EXPECT_GE(p.g_pages_norm, 0.0);
    EXPECT_LE(p.g_pages_norm, 1.0);
    EXPECT_GE(p.lifetime_days, 0.0);
    if (p.activity == 1) {
      EXPECT_EQ(p.g_pages_norm, 0.0);
      EXPECT_EQ(p.lifetime_days, 0.0);
    }
    EXPECT_EQ(p.g_pages_norm, parallel[i].g_pages_norm);
    EXPECT_EQ(p.g_topics, parallel[i].g_topics);
  }
}

}  // namespace
}  // namespace selex
