#pragma once
// Binned-average curves and 2D density grids over per-user series, and the
// CSV writers for every tabular output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selex/common.hpp"
#include "selex/metrics.hpp"
#include "selex/taxonomy.hpp"

namespace selex {

enum class Scale { linear, log };

inline std::string_view scale_name(Scale s) { return s == Scale::linear ? "linear" : "log"; }

// Bins are low-inclusive and high-exclusive, except the last bin, which also
// includes the upper bound. Values outside [lo, hi] are clipped into the
// edge bins.
struct AxisSpec {
  Scale scale = Scale::linear;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 10;

  void validate() const {
    if (bins == 0) throw FatalError("axis resolution must be >= 1");
    if (!(hi > lo)) throw FatalError("axis upper bound must exceed its lower bound");
    if (scale == Scale::log && !(lo > 0.0)) throw FatalError("log axis needs a positive lower bound");
  }

  std::vector<double> edges() const {
    validate();
    std::vector<double> e(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(bins);
      e[i] = scale == Scale::linear ? lo + (hi - lo) * f : lo * std::pow(hi / lo, f);
    }
    e.front() = lo;
    e.back() = hi;
    return e;
  }

  double center(const std::vector<double>& e, std::size_t i) const {
    return scale == Scale::linear ? 0.5 * (e[i] + e[i + 1]) : std::sqrt(e[i] * e[i + 1]);
  }

  // Axis covering [min(values), max(values)]; a degenerate range is widened
  // upwards (x2 on log axes, +1 on linear axes).
  static AxisSpec fit(std::span<const double> values, Scale scale, std::size_t bins) {
    if (values.empty()) return {scale, scale == Scale::log ? 1.0 : 0.0, scale == Scale::log ? 10.0 : 1.0, bins};
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    AxisSpec a{scale, *mn, *mx, bins};
    if (!(a.hi > a.lo)) a.hi = scale == Scale::log ? a.lo * 2.0 : a.lo + 1.0;
    return a;
  }
};

namespace detail {

struct Located {
  std::size_t bin;
  bool clipped;
};

inline Located locate(const std::vector<double>& edges, double x) {
  const std::size_t bins = edges.size() - 1;
  if (x < edges.front()) return {0, true};
  if (x > edges.back()) return {bins - 1, true};
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto idx = static_cast<std::size_t>(it - edges.begin());
  return {std::min(bins - 1, idx == 0 ? 0 : idx - 1), false};
}

inline void require_positive(std::span<const double> x, const AxisSpec& axis, std::string_view what) {
  if (axis.scale != Scale::log) return;
  const auto bad = std::count_if(x.begin(), x.end(), [](double v) { return !(v > 0.0); });
  if (bad > 0)
    throw FatalError(std::string(what) + ": log binning needs positive values, " + std::to_string(bad) +
                     " non-positive value(s) found");
}

}  // namespace detail

struct BinRow {
  double low = 0.0;
  double high = 0.0;
  double center = 0.0;
  std::optional<double> mean;
  std::optional<double> stddev;
  std::uint64_t count = 0;
};

struct BinnedCurve {
  AxisSpec axis;
  std::vector<BinRow> rows;
  std::uint64_t clipped = 0;

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& r : rows) n += r.count;
    return n;
  }
};

// Per-bin mean and population standard deviation of y over the users whose x
// falls in the bin. Empty bins are kept with count 0 and no mean.
inline BinnedCurve binned_average(std::span<const double> x, std::span<const double> y, const AxisSpec& axis) {
  if (x.size() != y.size()) throw FatalError("binned_average: series lengths differ");
  detail::require_positive(x, axis, "binned_average");
  const auto edges = axis.edges();
  BinnedCurve out;
  out.axis = axis;
  std::vector<std::size_t> bin_of(x.size());
  std::vector<double> sum(axis.bins, 0.0), sq(axis.bins, 0.0);
  std::vector<std::uint64_t> count(axis.bins, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto loc = detail::locate(edges, x[i]);
    bin_of[i] = loc.bin;
    out.clipped += loc.clipped;
    sum[loc.bin] += y[i];
    ++count[loc.bin];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto b = bin_of[i];
    const double d = y[i] - sum[b] / static_cast<double>(count[b]);
    sq[b] += d * d;
  }
  for (std::size_t b = 0; b < axis.bins; ++b) {
    BinRow row{edges[b], edges[b + 1], axis.center(edges, b), std::nullopt, std::nullopt, count[b]};
    if (count[b] > 0) {
      row.mean = sum[b] / static_cast<double>(count[b]);
      row.stddev = std::sqrt(sq[b] / static_cast<double>(count[b]));
    }
    out.rows.push_back(row);
  }
  return out;
}

struct DensityGrid {
  AxisSpec x_axis;
  AxisSpec y_axis;
  std::vector<std::uint64_t> counts;  // x-major: counts[xb * y_bins + yb]
  std::uint64_t clipped = 0;          // points with at least one clipped coordinate

  std::uint64_t at(std::size_t xb, std::size_t yb) const { return counts[xb * y_axis.bins + yb]; }
  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
  std::size_t non_empty() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }
};

inline DensityGrid density_grid(std::span<const double> x, std::span<const double> y, const AxisSpec& x_axis,
                                const AxisSpec& y_axis) {
  if (x.size() != y.size()) throw FatalError("density_grid: series lengths differ");
  detail::require_positive(x, x_axis, "density_grid (x)");
  detail::require_positive(y, y_axis, "density_grid (y)");
  const auto xe = x_axis.edges();
  const auto ye = y_axis.edges();
  DensityGrid g{x_axis, y_axis, std::vector<std::uint64_t>(x_axis.bins * y_axis.bins, 0), 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto lx = detail::locate(xe, x[i]);
    const auto ly = detail::locate(ye, y[i]);
    ++g.counts[lx.bin * y_axis.bins + ly.bin];
    if (lx.clipped || ly.clipped) ++g.clipped;
  }
  return g;
}

// ---------------------------------------------------------------------------
// CSV writers

inline constexpr std::string_view kProfileHeader =
    "user_id,activity,lifetime_days,n_pages,n_topics,gini_topics,gini_pages_raw,gini_pages_min,gini_pages_norm";
inline constexpr std::string_view kTaxonomyHeader = "user_id,gini_topics,gini_pages_norm,label";
inline constexpr std::string_view kCurveHeader = "bin_low,bin_high,bin_center,mean,std,count";
inline constexpr std::string_view kGridHeader = "x_bin,y_bin,x_low,x_high,y_low,y_high,count";

inline std::string profiles_csv(std::span<const UserProfile> profiles, const IdIndex& users) {
  std::string out;
  out.reserve(profiles.size() * 96 + 128);
  out.append(kProfileHeader).push_back('\n');
  for (const auto& p : profiles) {
    out.append(users.token(p.user)).push_back(',');
    out.append(std::to_string(p.activity)).push_back(',');
    append_fixed(out, p.lifetime_days);
    out.push_back(',');
    out.append(std::to_string(p.n_pages)).push_back(',');
    if (p.n_topics) out.append(std::to_string(*p.n_topics));
    out.push_back(',');
    if (p.g_topics) append_fixed(out, *p.g_topics);
    out.push_back(',');
    append_fixed(out, p.g_pages_raw);
    out.push_back(',');
    append_fixed(out, p.g_pages_min);
    out.push_back(',');
    append_fixed(out, p.g_pages_norm);
    out.push_back('\n');
  }
  return out;
}

inline std::string taxonomy_csv(std::span<const UserProfile> profiles, const Classification& cls,
                                const IdIndex& users) {
  std::string out;
  out.append(kTaxonomyHeader).push_back('\n');
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (!cls.labels[i]) continue;
    const auto& p = profiles[i];
    out.append(users.token(p.user)).push_back(',');
    append_fixed(out, *p.g_topics);
    out.push_back(',');
    append_fixed(out, p.g_pages_norm);
    out.push_back(',');
    out.append(label_name(*cls.labels[i])).push_back('\n');
  }
  return out;
}

inline std::string curve_csv(const BinnedCurve& c) {
  std::string out;
  out.append(kCurveHeader).push_back('\n');
  for (const auto& r : c.rows) {
    append_fixed(out, r.low);
    out.push_back(',');
    append_fixed(out, r.high);
    out.push_back(',');
    append_fixed(out, r.center);
    out.push_back(',');
    if (r.mean) append_fixed(out, *r.mean);
    out.push_back(',');
    if (r.stddev) append_fixed(out, *r.stddev);
    out.push_back(',');
    out.append(std::to_string(r.count)).push_back('\n');
  }
  return out;
}

// Empty cells are omitted.
inline std::string grid_csv(const DensityGrid& g) {
  const auto xe = g.x_axis.edges();
  const auto ye = g.y_axis.edges();
  std::string out;
  out.append(kGridHeader).push_back('\n');
  for (std::size_t xb = 0; xb < g.x_axis.bins; ++xb) {
    for (std::size_t yb = 0; yb < g.y_axis.bins; ++yb) {
      const auto c = g.at(xb, yb);
      if (c == 0) continue;
      out.append(std::to_string(xb)).push_back(',');
      out.append(std::to_string(yb)).push_back(',');
      append_fixed(out, xe[xb]);
      out.push_back(',');
      append_fixed(out, xe[xb + 1]);
      out.push_back(',');
      append_fixed(out, ye[yb]);
      out.push_back(',');
      append_fixed(out, ye[yb + 1]);
      out.push_back(',');
      out.append(std::to_string(c)).push_back('\n');
    }
  }
  return out;
}

}  // namespace selex
