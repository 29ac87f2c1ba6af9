// selex: selective-exposure analysis of user/post like logs.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "selex/selex.hpp"

namespace {

struct GlobalFlags {
  std::string interactions;
  std::string posts;
  std::string topics;
  std::string out_dir = ".";
  std::string format = "csv";
  unsigned threads = 1;
  std::string thresholds;
  std::string bins;
  std::optional<std::uint64_t> seed;
};

selex::ReportOptions report_options(const GlobalFlags& g) {
  selex::ReportOptions opt;
  if (!g.thresholds.empty()) {
    const auto f = selex::split(g.thresholds, ',');
    if (f.size() != 2) throw selex::FatalError("--thresholds expects t_topics,t_pages");
    opt.thresholds = selex::explicit_thresholds(std::stod(std::string(f[0])), std::stod(std::string(f[1])));
  }
  if (!g.bins.empty()) {
    const auto f = selex::split(g.bins, ',');
    if (f.size() == 1) {
      opt.log_bins = opt.linear_bins = std::stoul(std::string(f[0]));
    } else if (f.size() == 2) {
      opt.log_bins = std::stoul(std::string(f[0]));
      opt.linear_bins = std::stoul(std::string(f[1]));
    } else {
      throw selex::FatalError("--bins expects N or LOG_BINS,LINEAR_BINS");
    }
    if (opt.log_bins == 0 || opt.linear_bins == 0) throw selex::FatalError("--bins must be >= 1");
  }
  return opt;
}

selex::InputPaths inputs(const GlobalFlags& g) {
  if (g.interactions.empty()) throw selex::FatalError("--interactions-file is required");
  if (g.posts.empty()) throw selex::FatalError("--posts-file is required");
  return {g.interactions, g.posts, g.topics, selex::parse_format(g.format)};
}

selex::Analysis load(const GlobalFlags& g) {
  return selex::analyze(selex::load_dataset(inputs(g), g.threads), g.threads);
}

void report_written(const selex::OutputFiles& files, const std::string& dir) {
  for (const auto& f : files) std::cout << (std::filesystem::path(dir) / f.first).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective-exposure analysis of like logs"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--interactions-file", g.interactions, "Like log (user_id,post_id,timestamp)");
  app.add_option("--posts-file", g.posts, "Post metadata (post_id,page_id)");
  app.add_option("--topics-file", g.topics, "Topic mixtures (post_id,t0,...,t{K-1})");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--format", g.format, "Input format")->check(CLI::IsMember({"csv", "jsonl"}));
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--thresholds", g.thresholds, "Explicit taxonomy thresholds t_topics,t_pages");
  app.add_option("--bins", g.bins, "Bins: N, or LOG_BINS,LINEAR_BINS (default 40,50)");
  app.add_option("--seed", g.seed, "Random seed (synth)");

  auto* ingest = app.add_subcommand("ingest", "Validate inputs and print ingest statistics");
  std::string cache_file;
  ingest->add_option("--cache-file", cache_file, "Also write the user-post incidence cache");

  auto* profile = app.add_subcommand("profile", "Write per-user profiles (profiles.csv)");
  auto* classify = app.add_subcommand("classify", "Write the four-region taxonomy");
  auto* curves = app.add_subcommand("curves", "Write binned-average curves");
  auto* density = app.add_subcommand("density", "Write 2D density grids");
  auto* run = app.add_subcommand("run", "Run the full pipeline");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string config_file;
  selex::SynthConfig scfg;
  std::vector<std::pair<std::string, std::string>> overrides;
  synth->add_option("--config", config_file, "key=value configuration file");
  auto add_override = [&](const std::string& flag, const std::string& key, const std::string& help) {
    synth->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  };
  add_override("--users", "n_users", "Number of users");
  add_override("--pages", "n_pages", "Number of pages");
  add_override("--posts", "n_posts", "Number of posts");
  add_override("--topics", "n_topics", "Number of topics");
  add_override("--loyalty", "loyalty", "Probability that a like goes to the home page");
  add_override("--alpha", "topic_concentration", "Topic mixture concentration");
  add_override("--activity", "activity", "constant:K or powerlaw:GAMMA:MIN:MAX");
  add_override("--horizon-days", "time_horizon_days", "Time horizon in days");
  add_override("--start-time", "start_time", "First admissible timestamp (Unix seconds)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      const auto ds = selex::load_dataset(inputs(g), g.threads);
      const auto summary = selex::ingest_summary_json(ds);
      std::cout << summary;
      selex::commit_outputs(g.out_dir, {{"ingest_summary.json", summary}});
      if (!cache_file.empty()) selex::save_incidence(cache_file, selex::build_user_post(ds.likes, ds.n_users()));
    } else if (profile->parsed()) {
      const auto files = selex::profile_outputs(load(g));
      selex::commit_outputs(g.out_dir, files);
      report_written(files, g.out_dir);
    } else if (classify->parsed()) {
      const auto files = selex::taxonomy_outputs(load(g), report_options(g));
      selex::commit_outputs(g.out_dir, files);
      report_written(files, g.out_dir);
    } else if (curves->parsed()) {
      const auto files = selex::curve_outputs(load(g), report_options(g));
      selex::commit_outputs(g.out_dir, files);
      report_written(files, g.out_dir);
    } else if (density->parsed()) {
      const auto files = selex::density_outputs(load(g), report_options(g));
      selex::commit_outputs(g.out_dir, files);
      report_written(files, g.out_dir);
    } else if (run->parsed()) {
      selex::PipelineOptions opt{inputs(g), g.out_dir, g.threads, report_options(g)};
      report_written(selex::run_pipeline(opt), g.out_dir);
    } else if (synth->parsed()) {
      if (!config_file.empty()) scfg = selex::parse_synth_config(selex::read_file(config_file));
      for (const auto& [k, v] : overrides) selex::apply_setting(scfg, k, v);
      if (g.seed) scfg.seed = *g.seed;
      const auto data = selex::generate(scfg, g.threads);
      const auto files = selex::write_dataset(data, g.out_dir);
      std::cout << files.interactions << "\n" << files.posts << "\n" << files.topics << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "selex: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
