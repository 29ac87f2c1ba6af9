#pragma once
// End-to-end analysis: ingest -> incidence structures -> profiles ->
// taxonomy -> curves and density grids, plus a run manifest.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "selex/bipartite.hpp"
#include "selex/common.hpp"
#include "selex/dataset.hpp"
#include "selex/metrics.hpp"
#include "selex/report.hpp"
#include "selex/taxonomy.hpp"

namespace selex {

struct Analysis {
  Dataset data;
  UserPostIncidence upi;
  UserPageVectors pages;
  std::optional<UserTopicVectors> topics;
  std::optional<TopicBinarization> binarization;
  std::vector<UserProfile> profiles;
};

inline Analysis analyze(Dataset ds, unsigned threads = 1) {
  Analysis a;
  a.data = std::move(ds);
  a.upi = build_user_post(a.data.likes, a.data.n_users());
  a.pages = aggregate_by_page(a.upi, a.data.post_page, a.data.n_pages(), threads);
  if (a.data.has_topics()) {
    a.topics = aggregate_by_topic(a.upi, a.data.mixtures, a.data.has_mixture, a.data.n_topics(), threads);
    a.binarization = binarize_topics(a.data.mixtures, a.data.has_mixture, a.data.n_topics());
  }
  a.profiles = compute_profiles(a.upi, a.pages, a.topics ? &*a.topics : nullptr,
                                a.binarization ? &*a.binarization : nullptr, threads);
  return a;
}

struct ReportOptions {
  std::size_t log_bins = 40;
  std::size_t linear_bins = 50;
  std::optional<TaxonomyThresholds> thresholds;  // computed from the data when empty
};

// Named in-memory output files, in emission order.
using OutputFiles = std::vector<std::pair<std::string, std::string>>;

using ordered_json = nlohmann::ordered_json;

namespace detail {

struct Series {
  std::vector<double> x, y;
};

template <typename Pred, typename X, typename Y>
Series select(std::span<const UserProfile> profiles, Pred keep, X fx, Y fy) {
  Series s;
  for (const auto& p : profiles) {
    if (!keep(p)) continue;
    s.x.push_back(fx(p));
    s.y.push_back(fy(p));
  }
  return s;
}

inline double activity_of(const UserProfile& p) { return static_cast<double>(p.activity); }
inline double lifetime_of(const UserProfile& p) { return p.lifetime_days; }
inline bool any_user(const UserProfile&) { return true; }
inline bool has_topic_score(const UserProfile& p) { return p.g_topics.has_value(); }
inline bool positive_lifetime(const UserProfile& p) { return p.lifetime_days > 0.0; }
inline bool lifetime_and_topics(const UserProfile& p) { return positive_lifetime(p) && has_topic_score(p); }

struct Axes {
  AxisSpec activity;
  AxisSpec lifetime;
  AxisSpec gini;
};

inline Axes axes_for(std::span<const UserProfile> profiles, const ReportOptions& opt) {
  std::vector<double> act, life;
  for (const auto& p : profiles) {
    act.push_back(activity_of(p));
    if (positive_lifetime(p)) life.push_back(p.lifetime_days);
  }
  return {AxisSpec::fit(act, Scale::log, opt.log_bins), AxisSpec::fit(life, Scale::log, opt.log_bins),
          AxisSpec{Scale::linear, 0.0, 1.0, opt.linear_bins}};
}

inline ordered_json axis_json(const AxisSpec& a) {
  return {{"scale", scale_name(a.scale)}, {"lo", a.lo}, {"hi", a.hi}, {"bins", a.bins}};
}

}  // namespace detail

inline std::string ingest_summary_json(const Dataset& ds) {
  ordered_json j;
  j["interactions"] = {{"rows", ds.interaction_stats.rows},
                       {"records", ds.interaction_stats.records},
                       {"duplicates", ds.interaction_stats.duplicates},
                       {"malformed", ds.interaction_stats.malformed}};
  j["users"] = ds.n_users();
  j["posts"] = ds.n_posts();
  j["pages"] = ds.n_pages();
  j["topics"] = ds.n_topics();
  j["liked_posts_without_meta"] = ds.liked_posts_without_meta;
  if (ds.topic_stats) {
    j["topic_rows"] = {{"rows", ds.topic_stats->rows},
                       {"accepted", ds.topic_stats->accepted},
                       {"badsum", ds.topic_stats->badsum},
                       {"malformed", ds.topic_stats->malformed},
                       {"duplicates", ds.topic_stats->duplicates}};
    j["liked_posts_without_mixture"] = ds.liked_posts_without_mixture;
  }
  return j.dump(2) + "\n";
}

inline OutputFiles profile_outputs(const Analysis& a) {
  return {{"profiles.csv", profiles_csv(a.profiles, a.data.users)}};
}

inline TaxonomyThresholds thresholds_for(const Analysis& a, const ReportOptions& opt) {
  return opt.thresholds ? *opt.thresholds : compute_thresholds(a.profiles);
}

inline OutputFiles taxonomy_outputs(const Analysis& a, const ReportOptions& opt) {
  if (!a.data.has_topics()) throw FatalError("taxonomy needs topic mixtures (--topics-file)");
  const auto th = thresholds_for(a, opt);
  const auto cls = classify_population(a.profiles, th);
  ordered_json j;
  j["thresholds"] = {
      {"t_topics", th.t_topics},
      {"t_pages", th.t_pages},
      {"source", th.source == TaxonomyThresholds::Source::computed ? "computed" : "explicit"}};
  j["scored_users"] = cls.scored;
  ordered_json counts, fractions;
  for (auto l : kAllLabels) {
    counts[std::string(label_name(l))] = cls.count(l);
    fractions[std::string(label_name(l))] =
        cls.scored == 0 ? 0.0 : static_cast<double>(cls.count(l)) / static_cast<double>(cls.scored);
  }
  j["counts"] = counts;
  j["fractions"] = fractions;
  return {{"taxonomy.csv", taxonomy_csv(a.profiles, cls, a.data.users)},
          {"taxonomy_summary.json", j.dump(2) + "\n"}};
}

inline OutputFiles curve_outputs(const Analysis& a, const ReportOptions& opt) {
  using namespace detail;
  const auto axes = axes_for(a.profiles, opt);
  auto n_pages = [](const UserProfile& p) { return static_cast<double>(p.n_pages); };
  auto n_topics = [](const UserProfile& p) { return static_cast<double>(p.n_topics.value_or(0)); };
  OutputFiles out;
  auto emit = [&](std::string name, const Series& s, const AxisSpec& axis) {
    out.emplace_back(std::move(name), curve_csv(binned_average(s.x, s.y, axis)));
  };
  emit("curve_activity_pages.csv", select(a.profiles, any_user, activity_of, n_pages), axes.activity);
  if (a.data.has_topics())
    emit("curve_activity_topics.csv", select(a.profiles, has_topic_score, activity_of, n_topics), axes.activity);
  emit("curve_lifetime_pages.csv", select(a.profiles, positive_lifetime, lifetime_of, n_pages), axes.lifetime);
  if (a.data.has_topics())
    emit("curve_lifetime_topics.csv", select(a.profiles, lifetime_and_topics, lifetime_of, n_topics), axes.lifetime);
  return out;
}

inline OutputFiles density_outputs(const Analysis& a, const ReportOptions& opt) {
  using namespace detail;
  const auto axes = axes_for(a.profiles, opt);
  auto g_topics = [](const UserProfile& p) { return *p.g_topics; };
  auto g_norm = [](const UserProfile& p) { return p.g_pages_norm; };
  OutputFiles out;
  auto emit = [&](std::string name, const Series& s, const AxisSpec& xa, const AxisSpec& ya) {
    out.emplace_back(std::move(name), grid_csv(density_grid(s.x, s.y, xa, ya)));
  };
  if (a.data.has_topics()) {
    emit("density_activity_gini_topics.csv", select(a.profiles, has_topic_score, activity_of, g_topics),
         axes.activity, axes.gini);
    emit("density_lifetime_gini_topics.csv", select(a.profiles, lifetime_and_topics, lifetime_of, g_topics),
         axes.lifetime, axes.gini);
  }
  emit("density_activity_gini_pages_norm.csv", select(a.profiles, any_user, activity_of, g_norm), axes.activity,
       axes.gini);
  emit("density_lifetime_gini_pages_norm.csv", select(a.profiles, positive_lifetime, lifetime_of, g_norm),
       axes.lifetime, axes.gini);
  if (a.data.has_topics())
    emit("density_gini_pages_norm_gini_topics.csv", select(a.profiles, has_topic_score, g_norm, g_topics),
         axes.gini, axes.gini);
  return out;
}

// Writes every file into a staging directory inside `out_dir`, then moves
// them into place. Nothing is left behind when any step fails.
inline void commit_outputs(const std::string& out_dir, const OutputFiles& files) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path staging = fs::path(out_dir) / ".selex-staging";
  fs::remove_all(staging);
  fs::create_directories(staging);
  std::vector<fs::path> placed;
  try {
    for (const auto& [name, content] : files) {
      std::ofstream out(staging / name, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!out) throw FatalError("cannot write " + (staging / name).string());
    }
    for (const auto& [name, content] : files) {
      fs::rename(staging / name, fs::path(out_dir) / name);
      placed.push_back(fs::path(out_dir) / name);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : placed) fs::remove(p, ec);
    fs::remove_all(staging, ec);
    throw;
  }
  fs::remove_all(staging);
}

struct PipelineOptions {
  InputPaths inputs;
  std::string out_dir;
  unsigned threads = 1;
  ReportOptions report;
};

namespace detail {

inline ordered_json input_json(const std::string& path) {
  if (path.empty()) return nullptr;
  const auto text = read_file(path);
  return {{"file", std::filesystem::path(path).filename().string()},
          {"bytes", text.size()},
          {"fnv1a64", hex64(fnv1a(text))}};
}

}  // namespace detail

inline std::string manifest_json(const PipelineOptions& opt, const Analysis& a, const OutputFiles& files,
                                 const std::vector<std::string>& omitted) {
  ordered_json j;
  j["tool"] = "selex";
  j["version"] = kVersion;
  ordered_json options;
  options["format"] = opt.inputs.format == Format::csv ? "csv" : "jsonl";
  options["log_bins"] = opt.report.log_bins;
  options["linear_bins"] = opt.report.linear_bins;
  if (opt.report.thresholds)
    options["thresholds"] = {{"t_topics", opt.report.thresholds->t_topics},
                             {"t_pages", opt.report.thresholds->t_pages}};
  else
    options["thresholds"] = "computed";
  j["options"] = options;
  j["inputs"] = {{"interactions", detail::input_json(opt.inputs.interactions)},
                 {"posts", detail::input_json(opt.inputs.posts)},
                 {"topics", detail::input_json(opt.inputs.topics)}};
  j["ingest"] = ordered_json::parse(ingest_summary_json(a.data));

  std::uint64_t with_topics = 0, zero_lifetime = 0;
  for (const auto& p : a.profiles) {
    with_topics += p.g_topics.has_value();
    zero_lifetime += p.lifetime_days == 0.0;
  }
  j["users"] = {{"profiled", a.profiles.size()},
                {"with_topic_score", with_topics},
                {"zero_lifetime", zero_lifetime},
                {"positive_lifetime", a.profiles.size() - zero_lifetime}};
  if (a.topics) j["likes_without_mixture"] = a.topics->likes_without_mixture;
  const auto axes = detail::axes_for(a.profiles, opt.report);
  j["axes"] = {{"activity", detail::axis_json(axes.activity)},
               {"lifetime", detail::axis_json(axes.lifetime)},
               {"gini", detail::axis_json(axes.gini)}};
  j["topics_available"] = a.data.has_topics();
  j["omitted"] = omitted;
  ordered_json names = ordered_json::array();
  for (const auto& f : files) names.push_back(f.first);
  j["outputs"] = names;
  return j.dump(2) + "\n";
}

inline constexpr std::string_view kManifestName = "manifest.json";

inline OutputFiles pipeline_outputs(const PipelineOptions& opt, const Analysis& a) {
  OutputFiles files = profile_outputs(a);
  std::vector<std::string> omitted;
  if (a.data.has_topics()) {
    for (auto& f : taxonomy_outputs(a, opt.report)) files.push_back(std::move(f));
  } else {
    omitted = {"taxonomy.csv",
               "taxonomy_summary.json",
               "curve_activity_topics.csv",
               "curve_lifetime_topics.csv",
               "density_activity_gini_topics.csv",
               "density_lifetime_gini_topics.csv",
               "density_gini_pages_norm_gini_topics.csv"};
  }
  for (auto& f : curve_outputs(a, opt.report)) files.push_back(std::move(f));
  for (auto& f : density_outputs(a, opt.report)) files.push_back(std::move(f));
  files.emplace_back(std::string(kManifestName), manifest_json(opt, a, files, omitted));
  return files;
}

inline OutputFiles run_pipeline(const PipelineOptions& opt) {
  if (opt.out_dir.empty()) throw FatalError("run_pipeline: output directory is required");
  auto analysis = analyze(load_dataset(opt.inputs, opt.threads), opt.threads);
  auto files = pipeline_outputs(opt, analysis);
  commit_outputs(opt.out_dir, files);
  return files;
}

}  // namespace selex
