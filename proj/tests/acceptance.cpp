// Acceptance harness: one PASS/FAIL line per criterion. Run with criterion
// numbers as arguments (all when none are given); exits non-zero if any fails.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "reference_features.hpp"
#include "tieinfer/features.hpp"
#include "tieinfer/learn/cv.hpp"
#include "tieinfer/learn/evaluate.hpp"
#include "tieinfer/learn/metrics.hpp"
#include "tieinfer/longitudinal.hpp"
#include "tieinfer/parallel.hpp"
#include "tieinfer/rng.hpp"
#include "tieinfer/synth.hpp"

using namespace tieinfer;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [failed]");
  }
};

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct World {
  SynthConfig cfg;
  SynthOutput out;
  HomeMap homes;

  explicit World(const SynthConfig& c) : cfg(c), out(generate(c)), homes(infer_homes(out.log)) {}

  MonthWindow window(int k) const { return {cfg.start.plus(k), cfg.utc_offset_minutes}; }
  FeatureMatrix features(int k, int threads = 1) const {
    FeatureConfig fc;
    fc.roles.utc_offset_minutes = cfg.utc_offset_minutes;
    fc.threads = threads;
    return compute_month_features(out.log, homes, window(k), fc);
  }
};

learn::CvConfig cv_config(int repeats, int threads = 1) {
  learn::CvConfig cv;
  cv.folds = 5;
  cv.repeats = repeats;
  cv.model.forest.threads = threads;
  return cv;
}

learn::CvReport evaluate(const learn::Dataset& ds, int repeats, std::uint64_t seed) {
  return learn::cross_validate(ds.x, ds.y, cv_config(repeats), seed, ds.fiat);
}

// 1 -------------------------------------------------------------------------

double brute_auroc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

double direct_mcc(double tp, double tn, double fp, double fn) {
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  return den == 0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
}

Outcome metric_oracles() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(2024);
  double worst_auc = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(200);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    const std::uint64_t levels = rng.bernoulli(0.5) ? 1 + rng.below(8) : 0;
    const double prevalence = rng.uniform(0.02, 0.98);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = levels ? static_cast<double>(rng.below(levels)) : rng.uniform();
      y[i] = rng.bernoulli(prevalence);
    }
    // Force both classes at distinct positions.
    const std::size_t i1 = rng.below(n);
    const std::size_t i0 = (i1 + 1 + rng.below(n - 1)) % n;
    y[i1] = 1;
    y[i0] = 0;
    worst_auc = std::max(worst_auc, std::abs(learn::auroc(s, y) - brute_auroc(s, y)));
  }
  double worst_mcc = 0;
  std::size_t zero_den = 0, cases = 0;
  auto check = [&](std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
    const double d = direct_mcc(tp, tn, fp, fn);
    worst_mcc = std::max(worst_mcc, std::abs(learn::mcc({tp, tn, fp, fn}) - d));
    zero_den += (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn) == 0;
    ++cases;
  };
  for (std::uint64_t a = 0; a < 5; ++a)
    for (std::uint64_t b = 0; b < 5; ++b)
      for (std::uint64_t c = 0; c < 5; ++c)
        for (std::uint64_t d = 0; d < 5; ++d) check(a, b, c, d);
  for (int t = 0; t < 1000; ++t) check(rng.below(100000), rng.below(100000), rng.below(100000), rng.below(100000));
  const double secs = seconds_since(t0);
  o.require(worst_auc <= 1e-9, "max |auroc - brute force| = " + sci(worst_auc) + " over 1000 instances");
  o.require(worst_mcc <= 1e-12, "max |mcc - direct| = " + sci(worst_mcc) + " over " +
                                    std::to_string(cases) + " matrices (" + std::to_string(zero_den) +
                                    " zero-denominator)");
  o.require(secs < 5, "runtime " + fmt(secs, 2) + " s");
  return o;
}

// 2 -------------------------------------------------------------------------

Outcome feature_oracles() {
  Outcome o;
  const auto t0 = Clock::now();
  std::size_t rows = 0, count_mismatch = 0;
  double worst = 0;
  for (std::uint64_t seed : {11, 12, 13}) {
    SynthConfig cfg;
    cfg.n_users = 20;
    cfg.n_majors = 2;
    cfg.months = 1;
    cfg.seed = seed;
    const World w(cfg);
    const FeatureMatrix fm = w.features(0);
    const MonthWindow m = w.window(0);
    const auto oracle = ref::features(ref::events_of(w.out.log), m.begin_ts(), m.end_ts(),
                                      cfg.utc_offset_minutes, 8, 17, 10);
    if (oracle.size() != fm.rows()) {
      o.require(false, "row count " + std::to_string(fm.rows()) + " vs oracle " + std::to_string(oracle.size()));
      continue;
    }
    for (std::size_t i = 0; i < fm.rows(); ++i) {
      const auto it = oracle.find({fm.dyads[i].a.str(), fm.dyads[i].b.str()});
      if (it == oracle.end()) {
        ++count_mismatch;
        continue;
      }
      for (int c = 0; c < kFeatureCount; ++c) {
        const double got = fm.at(i, c), want = it->second[c];
        if (c % kBaseFeatureCount <= kTimeAtHome) {
          count_mismatch += got != want;
        } else {
          worst = std::max(worst, std::abs(got - want));
        }
      }
    }
    rows += fm.rows();
  }
  const double secs = seconds_since(t0);
  o.require(count_mismatch == 0, std::to_string(rows) + " rows, count mismatches " + std::to_string(count_mismatch));
  o.require(worst <= 1e-9, "max weight/entropy deviation " + sci(worst));
  o.require(secs < 10, "runtime " + fmt(secs, 2) + " s");
  return o;
}

// 3 -------------------------------------------------------------------------

Outcome planted_recovery() {
  Outcome o;
  const auto t0 = Clock::now();
  {
    const World w{SynthConfig{}};
    for (int k = 0; k < w.cfg.months; ++k) {
      const auto ds = learn::build_dataset(w.features(k), w.out.labels, Channel::Call);
      const auto r = evaluate(ds, 1, 42);
      const std::string ym = w.window(k).ym.str();
      o.require(r.mean_auroc >= 0.85, ym + " AUROC " + fmt(r.mean_auroc));
      o.require(r.mean_mcc >= 0.30, ym + " MCC " + fmt(r.mean_mcc));
    }
  }
  {
    const World w{SynthConfig{}.chance()};
    const auto ds = learn::build_dataset(w.features(1), w.out.labels, Channel::Call);
    const auto r = evaluate(ds, 1, 42);
    o.require(r.mean_auroc >= 0.4 && r.mean_auroc <= 0.6, "chance AUROC " + fmt(r.mean_auroc));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60, "runtime " + fmt(secs, 1) + " s");
  return o;
}

// 4 -------------------------------------------------------------------------

Outcome same_major_stress() {
  Outcome o;
  const World w{SynthConfig{}};
  const auto& users = w.out.truth.users;
  auto major = [&](const UserId& u) {
    return w.out.truth.major[std::lower_bound(users.begin(), users.end(), u.str()) - users.begin()];
  };
  const FeatureMatrix fm = w.features(1);
  const auto all = learn::build_dataset(fm, w.out.labels, Channel::Call);
  const auto same = learn::build_dataset(fm, w.out.labels, Channel::Call,
                                         [&](const Dyad& d) { return major(d.a) == major(d.b); });
  const double a = evaluate(all, 2, 42).mean_auroc;
  const double s = evaluate(same, 2, 42).mean_auroc;
  std::size_t pos = 0;
  for (auto v : same.y) pos += v;
  o.detail << "all-dyad AUROC " << fmt(a) << ", same-major AUROC " << fmt(s) << " ("
           << same.x.rows() << " candidates, " << pos + same.fiat.positives << " positives)";
  o.require(a - s <= 0.15, "degradation " + fmt(a - s));
  o.require(s >= 0.75, "same-major AUROC >= 0.75");
  return o;
}

// 5 -------------------------------------------------------------------------

Outcome importance_sanity() {
  Outcome o;
  const World w{SynthConfig{}};
  const auto ds = learn::build_dataset(w.features(1), w.out.labels, Channel::Call);
  const auto r = evaluate(ds, 10, 42);
  std::vector<int> order(kFeatureCount);
  for (int i = 0; i < kFeatureCount; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return r.median_importances[a] > r.median_importances[b];
  });
  const int target = feature_column(kTimeWeightedPeople, Variant::ExtraRole);
  const int rank = static_cast<int>(std::find(order.begin(), order.end(), target) - order.begin()) + 1;
  o.detail << "top 3:";
  for (int i = 0; i < 3; ++i) o.detail << ' ' << feature_name(order[i]) << '=' << fmt(r.median_importances[order[i]]);
  o.require(rank <= 3, feature_name(target) + " rank " + std::to_string(rank));
  return o;
}

// 6 -------------------------------------------------------------------------

StackResult stack_world(const SynthConfig& cfg, int n) {
  const World w(cfg);
  std::vector<MonthScores> scores;
  for (int k = 0; k < cfg.months; ++k) {
    const auto ds = learn::build_dataset(w.features(k), w.out.labels, Channel::Call);
    scores.push_back(learn::month_scores(ds, evaluate(ds, 1, 42)));
  }
  StackConfig sc;
  sc.n = n;
  return stack(scores, w.window(cfg.months - 1).ym, sc, 42);
}

Outcome stacking_gain() {
  Outcome o;
  SynthConfig persistent;
  persistent.tie_persistence = 1.0;
  SynthConfig memoryless;
  memoryless.tie_persistence = 0.0;
  const World pw(persistent);
  std::vector<MonthScores> scores;
  for (int k = 0; k < persistent.months; ++k) {
    const auto ds = learn::build_dataset(pw.features(k), pw.out.labels, Channel::Call);
    scores.push_back(learn::month_scores(ds, evaluate(ds, 1, 42)));
  }
  StackConfig sc;
  const YearMonth target = pw.window(persistent.months - 1).ym;
  const auto p = stack(scores, target, sc, 42);
  sc.n = 0;
  const auto zero = stack(scores, target, sc, 42);
  const auto m = stack_world(memoryless, 2);
  o.require(p.delta >= 0.01, "persistent n=2 past: " + fmt(p.auroc_single) + " -> " +
                                 fmt(p.auroc_stacked) + " (delta " + fmt(p.delta) + ")");
  o.require(std::abs(m.delta) <= 0.03, "memoryless n=2 past: " + fmt(m.auroc_single) + " -> " +
                                           fmt(m.auroc_stacked) + " (delta " + fmt(m.delta) + ")");
  o.require(zero.delta == 0.0, "n=0 delta " + sci(zero.delta));
  return o;
}

// 7 -------------------------------------------------------------------------

Outcome channel_discrimination() {
  Outcome o;
  const World w{SynthConfig{}};
  const FeatureMatrix fm = w.features(1);
  const auto cv = cv_config(2);
  const auto distinct = learn::discriminate_channels(fm, w.out.labels, Channel::FbInteraction,
                                                     Channel::Call, cv, 42);
  const auto same = learn::discriminate_channels(fm, w.out.labels, Channel::Call, Channel::Sms, cv, 42);
  o.require(distinct.auc >= 0.65, "fb_interaction vs call AUC " + fmt(distinct.auc) + " (" +
                                      std::to_string(distinct.a_only) + "/" +
                                      std::to_string(distinct.b_only) + " dyads)");
  o.require(same.auc >= 0.4 && same.auc <= 0.6, "call vs sms AUC " + fmt(same.auc) + " (" +
                                                    std::to_string(same.a_only) + "/" +
                                                    std::to_string(same.b_only) + " dyads)");
  return o;
}

// 8 -------------------------------------------------------------------------

int run(const std::string& args) {
  const std::string cmd = std::string(TIEINFER_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool pipeline(const fs::path& root) {
  const std::string r = root.string();
  if (run("simulate --seed 42 --out " + r + "/sim") != 0) return false;
  for (const char* m : {"2013-09", "2013-10", "2013-11"}) {
    const std::string month(m);
    if (run("features --events " + r + "/sim/events.csv --labels " + r + "/sim/labels.csv --month " +
            month + " --out " + r + "/features/" + month) != 0) {
      return false;
    }
    if (run("evaluate --features " + r + "/features/" + month + "/features.csv --labels " + r +
            "/sim/labels.csv --channel call --repeats 2 --seed 42 --out " + r + "/eval/" + month) != 0) {
      return false;
    }
  }
  return run("stack --predictions " + r + "/eval --target 2013-11 --n 2 --seed 42 --out " + r +
             "/stack") == 0;
}

Outcome determinism() {
  Outcome o;
  const fs::path base = fs::temp_directory_path() / ("tieinfer_accept_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const bool ok = pipeline(base / "a") && pipeline(base / "b");
  o.require(ok, "both pipeline runs exit 0");
  std::size_t files = 0, differing = 0;
  if (ok) {
    for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
      if (!e.is_regular_file()) continue;
      const fs::path rel = fs::relative(e.path(), base / "a");
      ++files;
      if (slurp(e.path()) != slurp(base / "b" / rel)) {
        ++differing;
        o.detail << "; differs: " << rel.string();
      }
    }
  }
  o.require(files > 0 && differing == 0,
            std::to_string(files) + " files compared, " + std::to_string(differing) + " differ");
  fs::remove_all(base);
  return o;
}

// 9 -------------------------------------------------------------------------

Outcome scale_check() {
  Outcome o;
  SynthConfig cfg;
  cfg.n_users = 1000;
  cfg.n_majors = 20;
  cfg.months = 1;
  // Keep each student's number of ties at the default (200-user) level.
  for (auto& d : cfg.density) d *= 200.0 / 1000.0;
  const auto g0 = Clock::now();
  const World w(cfg);
  const double gen = seconds_since(g0);

  const auto t0 = Clock::now();
  const FeatureMatrix fm = w.features(0);
  const double feat = seconds_since(t0);
  double minutes = 0;
  for (std::size_t i = 0; i < fm.rows(); ++i) minutes += fm.at(i, kTotalTime);
  const auto ds = learn::build_dataset(fm, w.out.labels, Channel::Call);
  // The evaluate defaults: 5 folds, 10 repeats, 100 trees.
  const auto r = learn::cross_validate(ds.x, ds.y, cv_config(10, default_threads()), 42, ds.fiat);
  const double total = seconds_since(t0);

  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  const double peak_gb = static_cast<double>(ru.ru_maxrss) / (1024.0 * 1024.0);
  o.detail << w.out.log.size() << " events, " << fm.rows() << " candidate dyads, " << fmt(minutes / 1e6, 2)
           << "M dyad-minutes; generate " << fmt(gen, 1) << " s, features " << fmt(feat, 1)
           << " s, evaluate " << fmt(total - feat, 1) << " s (AUROC " << fmt(r.mean_auroc) << ")";
  o.require(minutes >= 5e6, "dyad-minutes on the order of 10^7");
  o.require(total < 600, "features+evaluate " + fmt(total, 1) + " s");
  o.require(peak_gb < 4.0, "peak RSS " + fmt(peak_gb, 2) + " GB");
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"metric oracles", metric_oracles},           {"feature oracles", feature_oracles},
      {"planted recovery", planted_recovery},       {"same-major stress", same_major_stress},
      {"importance sanity", importance_sanity},     {"stacking gain", stacking_gain},
      {"channel discrimination", channel_discrimination}, {"determinism", determinism},
      {"scale check", scale_check}};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);
  }
  bool all = true;
  for (int i : selected) {
    if (i < 1 || i > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion " << i << '\n';
      return 2;
    }
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i - 1].run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i << " (" << criteria[i - 1].name
              << ", " << fmt(seconds_since(t0), 1) << " s): " << o.detail.str() << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
