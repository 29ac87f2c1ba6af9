// Acceptance gate: one PASS/FAIL line per criterion.
#include <fcntl.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "selex/selex.hpp"

namespace fs = std::filesystem;
using namespace selex;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path scratch(const std::string& name) {
  auto p = fs::current_path() / "scratch" / "acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome c1_gini_oracle() {
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> len(1, 256), kind(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);
  std::vector<std::vector<double>> vs;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    const int k = kind(rng);
    for (auto& x : v) {
      switch (k) {
        case 0: x = u(rng); break;
        case 1: x = std::pow(ex(rng), 3.0); break;
        case 2: x = u(rng) < 0.7 ? 0.0 : std::floor(u(rng) * 20); break;
        default: x = 1e6 * u(rng); break;
      }
    }
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[0] = 1.0;
    vs.push_back(std::move(v));
  }
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& v : vs) worst = std::max(worst, std::abs(gini(v) - brute_force_gini(v)));
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 5.0, "max |diff| " + num(worst) + ", " + num(secs) + " s"};
}

Outcome c2_closed_forms() {
  bool ok = true;
  std::string why;
  for (std::size_t n = 2; n <= 100; ++n) {
    std::vector<double> v(n, 0.0);
    v[n / 2] = 3.7;
    if (gini(v) != static_cast<double>(n - 1) / static_cast<double>(n)) {
      ok = false;
      why = "single nonzero n=" + std::to_string(n);
    }
    std::vector<double> c(n, 0.37);
    if (gini(c) != 0.0) {
      ok = false;
      why = "constant n=" + std::to_string(n);
    }
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> v(1 + static_cast<std::size_t>(i % 97));
    for (auto& x : v) x = u(rng);
    const double g = gini(v);
    for (double s : {1e-6, 0.3, 7.0, 1e9}) {
      auto w = v;
      for (auto& x : w) x *= s;
      worst = std::max(worst, std::abs(gini(w) - g));
    }
  }
  if (worst > 1e-12) {
    ok = false;
    why = "scale invariance " + num(worst);
  }
  return {ok, ok ? "n=2..100 exact, scale |diff| " + num(worst) : why};
}

Outcome c3_gini_min() {
  const auto t0 = Clock::now();
  std::size_t checked = 0;
  for (std::uint32_t np = 1; np <= 6; ++np)
    for (std::uint32_t nl = 1; nl <= np; ++nl) {
      ++checked;
      if (gini_min(nl, np) != brute_force_gini_min(nl, np))
        return {false, "n_likes=" + std::to_string(nl) + " n_P=" + std::to_string(np)};
    }
  std::size_t gap_cases = 0;
  for (std::uint32_t np = 1; np <= 6; ++np)
    for (std::uint32_t nl = np + 1; nl <= 24; ++nl) {
      const double bf = brute_force_gini_min(nl, np);
      if (gini_min(nl, np) != 0.0) return {false, "formula nonzero above n_P"};
      if (nl % np == 0) {
        if (bf != 0.0) return {false, "divisible case nonzero " + std::to_string(nl) + "/" + std::to_string(np)};
      } else {
        ++gap_cases;
        if (!(bf > 0.0 && bf <= 2.0 / nl))
          return {false, "non-divisible bound " + std::to_string(nl) + "/" + std::to_string(np) + " bf=" + num(bf)};
      }
    }
  const double secs = seconds_since(t0);
  return {secs < 60.0, std::to_string(checked) + " exact, " + std::to_string(gap_cases) + " gap cases, " +
                           num(secs) + " s"};
}

Outcome c4_normalization() {
  std::vector<SynthConfig> cfgs;
  for (double loyalty : {0.0, 0.3, 0.9, 1.0}) {
    SynthConfig c;
    c.n_users = 3000;
    c.n_pages = 30;
    c.n_posts = 6000;
    c.n_topics = 8;
    c.loyalty = loyalty;
    c.activity = {ActivityLaw::Kind::power_law, 0, 1.7, 1, 150};
    c.seed = 1000 + static_cast<std::uint64_t>(loyalty * 10);
    cfgs.push_back(c);
  }
  {
    SynthConfig c;
    c.n_users = 3000;
    c.n_pages = 4;
    c.n_posts = 2000;
    c.loyalty = 0.0;
    c.activity = {ActivityLaw::Kind::constant, 4};
    c.seed = 99;
    cfgs.push_back(c);
  }
  std::size_t users = 0, one_like = 0, spread = 0;
  for (const auto& cfg : cfgs) {
    const auto ds = to_dataset(generate(cfg), false);
    const auto upi = build_user_post(ds.likes, ds.n_users());
    const auto pv = aggregate_by_page(upi, ds.post_page, ds.n_pages());
    for (std::uint32_t u = 0; u < ds.n_users(); ++u) {
      if (!upi.contains(u)) continue;
      ++users;
      const auto row = pv.row(u);
      const double g = gini_pages_norm(row, ds.n_pages());
      if (!(g >= 0.0 && g <= 1.0)) return {false, "g_norm out of range: " + num(g)};
      if (upi.degree(u) == 1) {
        ++one_like;
        if (g != 0.0) return {false, "one-like user with g_norm " + num(g)};
      }
      const bool is_spread = row.size() == ds.n_pages() &&
                             std::all_of(row.begin(), row.end(), [](const PageCount& e) { return e.count == 1; });
      if (is_spread) {
        ++spread;
        if (g != 0.0) return {false, "spread user with g_norm " + num(g)};
      }
    }
  }
  for (std::uint32_t n = 1; n <= 500; ++n) {
    std::vector<PageCount> row;
    for (std::uint32_t p = 0; p < n; ++p) row.push_back({p, 1});
    if (gini_pages_norm(row, n) != 0.0) return {false, "constructed spread user n_P=" + std::to_string(n)};
  }
  return {spread > 0 && one_like > 0, std::to_string(users) + " users, " + std::to_string(one_like) + " one-like, " +
                                          std::to_string(spread) + " spread"};
}

double mean_g_norm(const SynthConfig& cfg) {
  const auto ds = to_dataset(generate(cfg), false);
  const auto a = analyze(ds);
  double s = 0.0;
  for (const auto& p : a.profiles) s += p.g_pages_norm;
  return s / static_cast<double>(a.profiles.size());
}

Outcome c5_loyalty() {
  const auto t0 = Clock::now();
  std::vector<double> means;
  for (double loyalty : {0.0, 0.5, 0.9, 1.0}) {
    SynthConfig cfg;
    cfg.n_users = 10000;
    cfg.n_pages = 50;
    cfg.n_posts = 10000;
    cfg.n_topics = 5;
    cfg.loyalty = loyalty;
    cfg.activity = {ActivityLaw::Kind::constant, 50};
    cfg.seed = 5150;
    means.push_back(mean_g_norm(cfg));
  }
  const double secs = seconds_since(t0);
  bool ok = secs < 60.0;
  std::string d;
  for (std::size_t i = 0; i < means.size(); ++i) {
    d += (i ? " < " : "") + num(means[i]);
    if (i && !(means[i] - means[i - 1] >= 0.02)) ok = false;
  }
  return {ok, d + ", " + num(secs) + " s"};
}

double mean_g_topics(std::uint32_t k) {
  SynthConfig cfg;
  cfg.n_users = 4000;
  cfg.n_pages = 50;
  cfg.n_posts = 20000;
  cfg.n_topics = 20;
  cfg.topic_concentration = 10.0;
  cfg.loyalty = 0.9;
  cfg.activity = {ActivityLaw::Kind::constant, k};
  cfg.seed = 606;
  const auto a = analyze(to_dataset(generate(cfg)));
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& p : a.profiles)
    if (p.g_topics) {
      s += *p.g_topics;
      ++n;
    }
  return s / static_cast<double>(n);
}

Outcome c6_activity_topics() {
  const double g5 = mean_g_topics(5), g20 = mean_g_topics(20), g100 = mean_g_topics(100);
  const bool ok = g5 - g100 >= 0.05 && g20 < g5 && g100 < g20;
  return {ok, "activity 5/20/100: " + num(g5) + " / " + num(g20) + " / " + num(g100)};
}

Outcome c7_plateau() {
  SynthConfig cfg;
  cfg.n_users = 50000;
  cfg.n_pages = 50;
  cfg.n_posts = 50000;
  cfg.n_topics = 5;
  cfg.loyalty = 0.9;
  cfg.activity = {ActivityLaw::Kind::power_law, 0, 2.0, 1, 2000};
  cfg.seed = 77;
  const auto a = analyze(to_dataset(generate(cfg), false));
  std::vector<double> x, y;
  for (const auto& p : a.profiles) {
    x.push_back(static_cast<double>(p.activity));
    y.push_back(static_cast<double>(p.n_pages));
  }
  const ReportOptions ro;
  const auto curve = binned_average(x, y, AxisSpec::fit(x, Scale::log, ro.log_bins));
  std::size_t top = curve.rows.size() - 1;
  while (top > 0 && curve.rows[top].count == 0) --top;
  std::size_t mid = curve.rows.size() / 2;
  while (mid < top && curve.rows[mid].count == 0) ++mid;
  const double mt = *curve.rows[top].mean, mm = *curve.rows[mid].mean;
  return {mt <= 1.15 * mm, "top bin [" + num(curve.rows[top].low) + "," + num(curve.rows[top].high) + "] mean " +
                               num(mt) + " vs mid bin [" + num(curve.rows[mid].low) + "," +
                               num(curve.rows[mid].high) + "] mean " + num(mm) + ", ratio " + num(mt / mm)};
}

Outcome c8_taxonomy() {
  SynthConfig cfg;
  cfg.n_users = 5000;
  cfg.n_pages = 40;
  cfg.n_posts = 8000;
  cfg.n_topics = 12;
  cfg.activity = {ActivityLaw::Kind::power_law, 0, 1.8, 1, 200};
  cfg.seed = 808;
  const auto a = analyze(to_dataset(generate(cfg)));
  const auto th = compute_thresholds(a.profiles);
  const auto cls = classify_population(a.profiles, th);
  std::uint64_t total = 0, scored = 0;
  for (auto c : cls.counts) total += c;
  for (const auto& p : a.profiles) scored += p.g_topics.has_value();
  if (total != cls.scored || total != scored) return {false, "partition broken"};

  // boundary users sit on the low side of both thresholds
  std::vector<UserProfile> probes(3);
  probes[0].g_topics = th.t_topics;
  probes[0].g_pages_norm = th.t_pages;
  probes[1].g_topics = th.t_topics;
  probes[1].g_pages_norm = 1.0;
  probes[2].g_topics = 1.0;
  probes[2].g_pages_norm = th.t_pages;
  const auto b = classify_population(probes, th);
  if (*b.labels[0] != TaxonomyLabel::LowActivityRegion || *b.labels[1] != TaxonomyLabel::MultiTopicSE ||
      *b.labels[2] != TaxonomyLabel::ExposureByInterest)
    return {false, "boundary users mislabeled"};
  for (int rep = 0; rep < 3; ++rep)
    if (classify_population(a.profiles, th).labels != cls.labels) return {false, "labels not deterministic"};

  const auto reference = explicit_thresholds(0.818, 0.108);
  if (classify_user(0.5, 0.5, reference) != TaxonomyLabel::MultiTopicSE ||
      classify_user(0.9, 0.5, reference) != TaxonomyLabel::SingleTopicSE ||
      classify_user(0.9, 0.05, reference) != TaxonomyLabel::ExposureByInterest)
    return {false, "probe users mislabeled under (0.818, 0.108)"};
  const auto over = classify_population(a.profiles, reference);
  std::uint64_t total2 = 0;
  for (auto c : over.counts) total2 += c;
  if (total2 != scored) return {false, "partition broken under override"};
  for (std::size_t i = 0; i < a.profiles.size(); ++i) {
    const auto& p = a.profiles[i];
    if (!p.g_topics) continue;
    if (*over.labels[i] != classify_user(*p.g_topics, p.g_pages_norm, reference)) return {false, "override inconsistent"};
  }
  std::string d = std::to_string(scored) + " scored;";
  for (auto l : kAllLabels) d += " " + std::string(label_name(l)) + "=" + std::to_string(cls.count(l));
  return {true, d};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read_file(e.path().string());
  return out;
}

Outcome c9_determinism() {
  SynthConfig cfg;
  cfg.n_users = 20000;
  cfg.n_pages = 50;
  cfg.n_posts = 50000;
  cfg.n_topics = 20;
  cfg.activity = {ActivityLaw::Kind::constant, 50};
  cfg.seed = 9;
  const auto in = write_dataset(generate(cfg), scratch("c9_in").string());
  std::map<std::string, std::string> first;
  std::string d;
  for (unsigned w : {1u, 4u, 8u}) {
    PipelineOptions opt{{in.interactions, in.posts, in.topics}, scratch("c9_w" + std::to_string(w)).string(), w, {}};
    const auto t0 = Clock::now();
    run_pipeline(opt);
    d += (d.empty() ? "" : ", ") + std::to_string(w) + "w " + num(seconds_since(t0)) + " s";
    auto files = read_dir(opt.out_dir);
    if (w == 1) {
      first = std::move(files);
    } else if (files != first) {
      return {false, "outputs differ at " + std::to_string(w) + " workers"};
    }
  }
  return {first.size() == 13, "1000000 interactions, " + std::to_string(first.size()) + " files identical; " + d};
}

Outcome c10_throughput() {
#ifndef SELEX_CLI_PATH
  return {false, "cli path unavailable"};
#else
  SynthConfig cfg;
  cfg.n_users = 200000;
  cfg.n_pages = 50;
  cfg.n_posts = 200000;
  cfg.n_topics = 20;
  cfg.activity = {ActivityLaw::Kind::constant, 50};
  cfg.seed = 10;
  const auto dir = scratch("c10");
  SynthFiles in;
  {
    auto data = generate(cfg);
    in = write_dataset(data, (dir / "in").string());
  }
  const std::string out = (dir / "out").string();
  const std::string threads = std::to_string(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = Clock::now();
  const pid_t pid = fork();
  if (pid == 0) {
    const int devnull = ::open("/dev/null", O_WRONLY);
    if (devnull >= 0) ::dup2(devnull, STDOUT_FILENO);
    ::execl(SELEX_CLI_PATH, SELEX_CLI_PATH, "profile", "--interactions-file", in.interactions.c_str(), "--posts-file",
            in.posts.c_str(), "--topics-file", in.topics.c_str(), "--out-dir", out.c_str(), "--threads",
            threads.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  int status = 0;
  rusage ru{};
  ::wait4(pid, &status, 0, &ru);
  const double secs = seconds_since(t0);
  const double gb = static_cast<double>(ru.ru_maxrss) / (1024.0 * 1024.0);
  const bool ran = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  fs::remove_all(dir);
  return {ran && secs <= 60.0 && gb <= 4.0,
          "10000000 records, " + num(secs) + " s, peak " + num(gb) + " GB, " + threads + " worker(s)" +
              (ran ? "" : ", run failed")};
#endif
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    bool soft;
  };
  const std::vector<Criterion> criteria{
      {1, "gini matches the double-sum oracle", c1_gini_oracle, false},
      {2, "gini closed forms and scale invariance", c2_closed_forms, false},
      {3, "gini_min matches exhaustive search", c3_gini_min, false},
      {4, "normalized page gini contract", c4_normalization, false},
      {5, "loyalty raises normalized page gini", c5_loyalty, false},
      {6, "activity lowers topic gini", c6_activity_topics, false},
      {7, "pages per user plateau", c7_plateau, false},
      {8, "taxonomy partition and boundaries", c8_taxonomy, false},
      {9, "byte-identical output at 1/4/8 workers", c9_determinism, false},
      {10, "throughput 10M records (soft)", c10_throughput, true},
  };
  int hard_failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d: %s: %s\n", o.pass ? "PASS" : (c.soft ? "SOFT-FAIL" : "FAIL"), c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !c.soft) ++hard_failures;
  }
  return hard_failures == 0 ? 0 : 1;
}
