#pragma once
// Four-region classification of users on (topic Gini, normalized page Gini).

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "selex/common.hpp"
#include "selex/metrics.hpp"

namespace selex {

enum class TaxonomyLabel : std::uint8_t {
  MultiTopicSE,        // high page SE, low topic SE
  SingleTopicSE,       // high page SE, high topic SE
  ExposureByInterest,  // low page SE, high topic SE
  LowActivityRegion,   // low page SE, low topic SE
};

inline constexpr std::array<TaxonomyLabel, 4> kAllLabels{TaxonomyLabel::MultiTopicSE, TaxonomyLabel::SingleTopicSE,
                                                         TaxonomyLabel::ExposureByInterest,
                                                         TaxonomyLabel::LowActivityRegion};

inline constexpr std::string_view label_name(TaxonomyLabel l) {
  switch (l) {
    case TaxonomyLabel::MultiTopicSE: return "MultiTopicSE";
    case TaxonomyLabel::SingleTopicSE: return "SingleTopicSE";
    case TaxonomyLabel::ExposureByInterest: return "ExposureByInterest";
    case TaxonomyLabel::LowActivityRegion: return "LowActivityRegion";
  }
  return "?";
}

struct TaxonomyThresholds {
  enum class Source { computed, explicit_values };

  double t_topics = 0.0;
  double t_pages = 0.0;
  Source source = Source::computed;
};

inline TaxonomyThresholds explicit_thresholds(double t_topics, double t_pages) {
  if (!(t_topics >= 0.0 && t_topics <= 1.0 && t_pages >= 0.0 && t_pages <= 1.0))
    throw FatalError("taxonomy thresholds must lie in [0,1]");
  return {t_topics, t_pages, TaxonomyThresholds::Source::explicit_values};
}

// Means of g† and g▷ over users that have both scores. Summation runs in
// profile order, so the result does not depend on how profiles were computed.
namespace detail {

// Mean from an exact sum, kept inside [min, max] so identical scores give
// back that score.
struct ExactMean {
  ExactSum sum;
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;
  void add(double x) {
    sum.add(x);
    lo = n ? std::min(lo, x) : x;
    hi = n ? std::max(hi, x) : x;
    ++n;
  }
  double value() const { return std::clamp(sum.value() / static_cast<double>(n), lo, hi); }
};

}  // namespace detail

inline TaxonomyThresholds compute_thresholds(std::span<const UserProfile> profiles) {
  detail::ExactMean topics, pages;
  for (const auto& p : profiles) {
    if (!p.g_topics) continue;
    topics.add(*p.g_topics);
    pages.add(p.g_pages_norm);
  }
  if (topics.n == 0) throw FatalError("cannot compute taxonomy thresholds: no user has both scores");
  return {topics.value(), pages.value(), TaxonomyThresholds::Source::computed};
}

// Users exactly on a threshold fall on the low side.
inline TaxonomyLabel classify_user(double g_topics, double g_pages_norm, const TaxonomyThresholds& th) {
  const bool high_pages = g_pages_norm > th.t_pages;
  const bool high_topics = g_topics > th.t_topics;
  if (high_pages) return high_topics ? TaxonomyLabel::SingleTopicSE : TaxonomyLabel::MultiTopicSE;
  return high_topics ? TaxonomyLabel::ExposureByInterest : TaxonomyLabel::LowActivityRegion;
}

struct Classification {
  // Parallel to the profile span; empty for users without a topic score.
  std::vector<std::optional<TaxonomyLabel>> labels;
  std::array<std::uint64_t, 4> counts{};
  std::uint64_t scored = 0;

  std::uint64_t count(TaxonomyLabel l) const { return counts[static_cast<std::size_t>(l)]; }
};

inline Classification classify_population(std::span<const UserProfile> profiles, const TaxonomyThresholds& th) {
  Classification out;
  out.labels.reserve(profiles.size());
  for (const auto& p : profiles) {
    if (!p.g_topics) {
      out.labels.emplace_back();
      continue;
    }
    const auto label = classify_user(*p.g_topics, p.g_pages_norm, th);
    out.labels.emplace_back(label);
    ++out.counts[static_cast<std::size_t>(label)];
    ++out.scored;
  }
  return out;
}

}  // namespace selex
