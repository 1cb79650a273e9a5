// tieinfer: file-based pipeline stages for inferring social ties from
// proximity logs. Exit codes: 0 ok, 2 usage or data error, 1 internal error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tieinfer/context.hpp"
#include "tieinfer/errors.hpp"
#include "tieinfer/features.hpp"
#include "tieinfer/ingest.hpp"
#include "tieinfer/learn/cv.hpp"
#include "tieinfer/learn/evaluate.hpp"
#include "tieinfer/longitudinal.hpp"
#include "tieinfer/parallel.hpp"
#include "tieinfer/synth.hpp"
#include "tieinfer/text.hpp"

namespace fs = std::filesystem;
using namespace tieinfer;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::uint64_t env_seed() {
  if (const char* s = std::getenv("TIEINFER_SEED")) {
    if (const auto v = text::parse_int<std::uint64_t>(s)) return *v;
    throw UsageError("TIEINFER_SEED must be a non-negative integer");
  }
  return 42;
}

// "--out x.csv" names the file; anything else is a directory that receives
// the default file name.
fs::path output_path(const std::string& out, const std::string& default_name) {
  fs::path p(out);
  if (p.has_extension() && !fs::is_directory(p)) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }
  fs::create_directories(p);
  return p / default_name;
}

fs::path output_dir(const std::string& out) {
  fs::create_directories(out);
  return fs::path(out);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  auto f = open_out(p);
  f << j.dump(2) << '\n';
}

YearMonth month_arg(const std::string& s) {
  const auto ym = parse_year_month(s);
  if (!ym) throw UsageError("month must be YYYY-MM, got '" + s + "'");
  return *ym;
}

Channel channel_arg(const std::string& s) {
  const auto c = parse_channel(s);
  if (!c) throw UsageError("unknown channel '" + s + "' (fb_friend, fb_interaction, call, sms)");
  return *c;
}

RoleConfig role_hours_arg(const std::string& s, int offset) {
  std::vector<std::string_view> parts;
  text::split(s, '-', parts);
  RoleConfig r;
  r.utc_offset_minutes = offset;
  if (parts.size() == 2) {
    const auto a = text::parse_int<int>(parts[0]);
    const auto b = text::parse_int<int>(parts[1]);
    if (a && b && *a >= 0 && *a < *b && *b <= 24) {
      r.start_hour = *a;
      r.end_hour = *b;
      return r;
    }
  }
  throw UsageError("--role-hours must look like 8-17");
}

EventFormat format_arg(const std::string& fmt, const std::string& path) {
  if (fmt == "csv") return EventFormat::Csv;
  if (fmt == "jsonl") return EventFormat::Jsonl;
  if (fmt == "auto") {
    return fs::path(path).extension() == ".jsonl" ? EventFormat::Jsonl : EventFormat::Csv;
  }
  throw UsageError("--format must be csv, jsonl or auto");
}

std::string default_roster(const std::string& labels, const std::string& roster) {
  if (!roster.empty()) return roster;
  const fs::path sibling = fs::path(labels).parent_path() / "channel_users.csv";
  return fs::exists(sibling) ? sibling.string() : std::string();
}

std::vector<fs::path> find_files(const std::string& dir, const std::string& name) {
  if (!fs::is_directory(dir)) throw UsageError(dir + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() == name) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw UsageError("no " + name + " found under " + dir);
  return out;
}

struct SimulateArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int simulate(const SimulateArgs& a) {
  SynthConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw IoError("cannot open " + a.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(a.config + ": " + e.what());
    }
    cfg = SynthConfig::from_json(j);
    if (!j.contains("seed")) cfg.seed = env_seed();
  } else {
    cfg.seed = env_seed();
  }
  if (a.seed) cfg.seed = *a.seed;
  const auto world = generate(cfg);
  const fs::path dir = output_dir(a.out);
  {
    auto f = open_out(dir / "events.csv");
    write_events_csv(f, world.log);
  }
  {
    auto f = open_out(dir / "labels.csv");
    write_labels_csv(f, world.labels);
  }
  {
    auto f = open_out(dir / "channel_users.csv");
    write_roster_csv(f, world.labels);
  }
  nlohmann::json truth = world.truth.to_json();
  truth["config"] = cfg.to_json();
  write_json(dir / "truth_report.json", truth);
  return 0;
}

struct FeaturesArgs {
  std::string events, labels, roster, month, role_hours = "8-17", out, format = "auto",
                                                  meetings_out;
  int utc_offset = 60;
  int gap_tolerance = 10;
  bool lenient = false;
  int threads = 0;
};

int features(const FeaturesArgs& a) {
  const YearMonth ym = month_arg(a.month);
  FeatureConfig cfg;
  cfg.roles = role_hours_arg(a.role_hours, a.utc_offset);
  cfg.gap_tolerance = a.gap_tolerance;
  cfg.threads = a.threads > 0 ? a.threads : default_threads();
  if (cfg.gap_tolerance < 1) throw UsageError("--gap-tolerance must be >= 1");

  ParseOptions opts;
  opts.strict = !a.lenient;
  const auto parsed = parse_events_file(a.events, format_arg(a.format, a.events), opts);
  if (parsed.malformed > 0) {
    std::cerr << "warning: skipped " << parsed.malformed << " malformed event records\n";
  }
  const EventLog& log = parsed.log;

  // The month must be covered by the data: inside the log's time span or
  // carrying labels.
  const MonthWindow month{ym, a.utc_offset};
  bool covered = false;
  if (const auto span = log.time_span()) {
    covered = !(month_of(span->second, a.utc_offset).ym < ym) &&
              !(ym < month_of(span->first, a.utc_offset).ym);
  }
  if (!a.labels.empty()) {
    const auto labels = parse_ground_truth_files(a.labels, default_roster(a.labels, a.roster));
    const auto months = labels.months();
    covered = covered || std::find(months.begin(), months.end(), ym) != months.end();
  }
  if (!covered) throw UsageError("month " + ym.str() + " is absent from the data");

  const HomeMap homes = infer_homes(log);
  const FeatureMatrix fm = compute_month_features(log, homes, month, cfg);
  {
    auto f = open_out(output_path(a.out, "features.csv"));
    write_features_csv(f, fm);
  }
  if (!a.meetings_out.empty()) {
    GridConfig gc;
    gc.roles = cfg.roles;
    const auto grid = build_minute_grid(log, homes, gc, std::make_pair(month.begin_ts(), month.end_ts()));
    const auto meetings = segment_meetings(grid, cfg.gap_tolerance);
    auto f = open_out(output_path(a.meetings_out, "meetings.csv"));
    write_meetings_csv(f, log, meetings);
  }
  return 0;
}

struct EvaluateArgs {
  std::string features, labels, roster, channel = "call", out, model = "random_forest";
  int folds = 5, repeats = 10, trees = 100, threads = 0;
  std::optional<std::uint64_t> seed;
};

int evaluate(const EvaluateArgs& a) {
  const Channel channel = channel_arg(a.channel);
  const auto kind = learn::parse_model_kind(a.model);
  if (!kind) throw UsageError("--model must be random_forest or logistic");
  const std::uint64_t seed = a.seed ? *a.seed : env_seed();
  const FeatureMatrix fm = read_features_file(a.features);
  const LabelSet labels = parse_ground_truth_files(a.labels, default_roster(a.labels, a.roster));

  learn::CvConfig cfg;
  cfg.folds = a.folds;
  cfg.repeats = a.repeats;
  cfg.model.kind = *kind;
  cfg.model.forest.trees = a.trees;
  cfg.model.forest.threads = a.threads > 0 ? a.threads : default_threads();

  const auto ds = learn::build_dataset(fm, labels, channel);
  const auto report = learn::cross_validate(ds.x, ds.y, cfg, seed, ds.fiat);
  const auto model = learn::train_model(ds.x, ds.y, cfg.model, seed, ds.fiat.negatives,
                                        ds.fiat.positives);

  const fs::path dir = output_dir(a.out);
  std::size_t positives = 0;
  for (auto v : ds.y) positives += v;
  nlohmann::json metrics = learn::cv_report_json(report);
  metrics["month"] = fm.month.str();
  metrics["channel"] = channel_token(channel);
  metrics["model"] = learn::model_kind_name(*kind);
  metrics["seed"] = seed;
  metrics["candidate_rows"] = ds.dyads.size();
  metrics["candidate_positives"] = positives;
  metrics["fiat_positives"] = ds.fiat.positives;
  metrics["fiat_negatives"] = ds.fiat.negatives;
  write_json(dir / "metrics.json", metrics);
  {
    auto f = open_out(dir / "importances.csv");
    f << "feature,median_importance\n";
    for (std::size_t c = 0; c < report.median_importances.size(); ++c) {
      f << feature_name(static_cast<int>(c)) << ','
        << text::format_double(report.median_importances[c]) << '\n';
    }
  }
  {
    auto f = open_out(dir / "predictions.csv");
    write_predictions_csv(f, learn::month_scores(ds, report, 0));
  }
  nlohmann::json mj = model.to_json();
  mj["config"] = {{"folds", cfg.folds},
                  {"repeats", cfg.repeats},
                  {"channel", channel_token(channel)},
                  {"month", fm.month.str()},
                  {"trees", cfg.model.forest.trees}};
  {
    auto f = open_out(dir / "model.json");
    f << mj.dump() << '\n';
  }
  return 0;
}

struct StackArgs {
  std::string predictions, target, direction = "past", out;
  int n = 2, folds = 5, repeats = 5;
  std::optional<std::uint64_t> seed;
};

int stack_cmd(const StackArgs& a) {
  const YearMonth target = month_arg(a.target);
  const auto dir = parse_direction(a.direction);
  if (!dir) throw UsageError("--direction must be past or future");
  if (a.n < 0) throw UsageError("--n must be >= 0");
  std::vector<MonthScores> scores;
  for (const auto& p : find_files(a.predictions, "predictions.csv")) {
    auto s = read_predictions_file(p.string());
    for (const auto& other : scores) {
      if (other.month == s.month) {
        throw UsageError("two predictions.csv files for month " + s.month.str() + " under " +
                         a.predictions);
      }
    }
    scores.push_back(std::move(s));
  }
  StackConfig cfg;
  cfg.n = a.n;
  cfg.direction = *dir;
  cfg.folds = a.folds;
  cfg.repeats = a.repeats;
  const auto res = stack(scores, target, cfg, a.seed ? *a.seed : env_seed());
  auto f = open_out(output_path(a.out, "stacking.csv"));
  write_stacking_csv(f, std::span<const StackResult>(&res, 1));
  return 0;
}

struct DiscriminateArgs {
  std::string features, labels, roster, channels = "fb_interaction,call", out;
  int folds = 5, repeats = 2, trees = 100, threads = 0;
  std::optional<std::uint64_t> seed;
};

int discriminate(const DiscriminateArgs& a) {
  std::vector<std::string_view> parts;
  text::split(a.channels, ',', parts);
  if (parts.size() != 2) throw UsageError("--channels takes two channels, e.g. fb_interaction,call");
  const Channel ca = channel_arg(std::string(parts[0]));
  const Channel cb = channel_arg(std::string(parts[1]));
  if (ca == cb) throw UsageError("--channels must name two different channels");
  const FeatureMatrix fm = read_features_file(a.features);
  const LabelSet labels = parse_ground_truth_files(a.labels, default_roster(a.labels, a.roster));
  learn::CvConfig cfg;
  cfg.folds = a.folds;
  cfg.repeats = a.repeats;
  cfg.model.forest.trees = a.trees;
  cfg.model.forest.threads = a.threads > 0 ? a.threads : default_threads();
  const auto res = learn::discriminate_channels(fm, labels, ca, cb, cfg, a.seed ? *a.seed : env_seed());
  write_json(output_path(a.out, "discrimination.json"),
             {{"pair", std::string(channel_token(ca)) + "," + std::string(channel_token(cb))},
              {"month", fm.month.str()},
              {"dyad_count", res.dyad_count},
              {"a_only", res.a_only},
              {"b_only", res.b_only},
              {"auc", res.auc}});
  return 0;
}

struct ReportArgs {
  std::string metrics, events, labels, roster, out;
  int utc_offset = 60;
};

int report(const ReportArgs& a) {
  struct Row {
    std::string month, channel, model;
    nlohmann::json j;
  };
  std::vector<Row> rows;
  for (const auto& p : find_files(a.metrics, "metrics.json")) {
    std::ifstream in(p);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      rows.push_back({j.at("month").get<std::string>(), j.at("channel").get<std::string>(),
                      j.at("model").get<std::string>(), j});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(p.string() + ": not a metrics.json (" + e.what() + ")");
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    return std::tie(x.month, x.channel, x.model) < std::tie(y.month, y.channel, y.model);
  });
  const fs::path dir = output_dir(a.out);
  {
    auto f = open_out(dir / "metrics_summary.csv");
    f << "month,channel,model,candidate_rows,candidate_positives,fiat_positives,fiat_negatives,"
         "folds,repeats,mean_auroc,mean_mcc\n";
    for (const auto& r : rows) {
      const auto& j = r.j;
      f << r.month << ',' << r.channel << ',' << r.model << ',' << j.value("candidate_rows", 0)
        << ',' << j.value("candidate_positives", 0) << ',' << j.value("fiat_positives", 0) << ','
        << j.value("fiat_negatives", 0) << ',' << j.value("folds", 0) << ','
        << j.value("repeats", 0) << ',' << text::format_double(j.at("mean_auroc").get<double>())
        << ',' << text::format_double(j.at("mean_mcc").get<double>()) << '\n';
    }
  }
  if (!a.events.empty() || !a.labels.empty()) {
    if (a.events.empty() || a.labels.empty()) {
      throw UsageError("availability needs both --events and --labels");
    }
    const auto parsed = parse_events_file(a.events, format_arg("auto", a.events));
    const auto labels = parse_ground_truth_files(a.labels, default_roster(a.labels, a.roster));
    auto f = open_out(dir / "availability.csv");
    write_availability_csv(f, validate_log(parsed.log, labels, a.utc_offset));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infer social ties from proximity logs"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: TIEINFER_THREADS or all cores)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic campus");
  c_sim->add_option("--config", sim.config, "JSON config (fields override defaults)");
  c_sim->add_option("--seed", sim.seed, "PRNG seed (default: config, TIEINFER_SEED or 42)");
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  FeaturesArgs fa;
  auto* c_feat = app.add_subcommand("features", "Compute the 48 dyad features for one month");
  c_feat->add_option("--events", fa.events, "events.csv or .jsonl")->required();
  c_feat->add_option("--labels", fa.labels, "labels.csv (month coverage check)");
  c_feat->add_option("--roster", fa.roster, "channel_users.csv");
  c_feat->add_option("--month", fa.month, "YYYY-MM")->required();
  c_feat->add_option("--role-hours", fa.role_hours, "Working hours, e.g. 8-17");
  c_feat->add_option("--utc-offset", fa.utc_offset, "Local offset in minutes (default 60)");
  c_feat->add_option("--gap-tolerance", fa.gap_tolerance, "Meeting gap tolerance in minutes");
  c_feat->add_option("--format", fa.format, "csv, jsonl or auto");
  c_feat->add_flag("--lenient", fa.lenient, "Skip malformed event records instead of failing");
  c_feat->add_option("--meetings-out", fa.meetings_out, "Also write meetings.csv");
  c_feat->add_option("--out", fa.out, "features.csv path or directory")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Cross-validate a classifier for one channel");
  c_eval->add_option("--features", ev.features, "features.csv")->required();
  c_eval->add_option("--labels", ev.labels, "labels.csv")->required();
  c_eval->add_option("--roster", ev.roster, "channel_users.csv (default: next to labels)");
  c_eval->add_option("--channel", ev.channel, "fb_friend, fb_interaction, call or sms");
  c_eval->add_option("--folds", ev.folds, "Folds (default 5)");
  c_eval->add_option("--repeats", ev.repeats, "Repeats (default 10)");
  c_eval->add_option("--model", ev.model, "random_forest or logistic");
  c_eval->add_option("--trees", ev.trees, "Forest size (default 100)");
  c_eval->add_option("--seed", ev.seed, "PRNG seed (default: TIEINFER_SEED or 42)");
  c_eval->add_option("--out", ev.out, "Output directory")->required();

  StackArgs st;
  auto* c_stack = app.add_subcommand("stack", "Fuse per-month probabilities across months");
  c_stack->add_option("--predictions", st.predictions, "Directory searched for predictions.csv")
      ->required();
  c_stack->add_option("--target", st.target, "YYYY-MM")->required();
  c_stack->add_option("--n", st.n, "Months to add (default 2)");
  c_stack->add_option("--direction", st.direction, "past or future");
  c_stack->add_option("--folds", st.folds, "Folds (default 5)");
  c_stack->add_option("--repeats", st.repeats, "Repeats (default 5)");
  c_stack->add_option("--seed", st.seed, "PRNG seed (default: TIEINFER_SEED or 42)");
  c_stack->add_option("--out", st.out, "stacking.csv path or directory")->required();

  DiscriminateArgs di;
  auto* c_disc = app.add_subcommand("discriminate", "Tell two channels' exclusive dyads apart");
  c_disc->add_option("--features", di.features, "features.csv")->required();
  c_disc->add_option("--labels", di.labels, "labels.csv")->required();
  c_disc->add_option("--roster", di.roster, "channel_users.csv (default: next to labels)");
  c_disc->add_option("--channels", di.channels, "Two channels, e.g. fb_interaction,call");
  c_disc->add_option("--folds", di.folds, "Folds (default 5)");
  c_disc->add_option("--repeats", di.repeats, "Repeats (default 2)");
  c_disc->add_option("--trees", di.trees, "Forest size (default 100)");
  c_disc->add_option("--seed", di.seed, "PRNG seed (default: TIEINFER_SEED or 42)");
  c_disc->add_option("--out", di.out, "discrimination.json path or directory")->required();

  ReportArgs re;
  auto* c_rep = app.add_subcommand("report", "Summarize metrics.json files into CSV tables");
  c_rep->add_option("--metrics", re.metrics, "Directory searched for metrics.json")->required();
  c_rep->add_option("--events", re.events, "events.csv for availability.csv");
  c_rep->add_option("--labels", re.labels, "labels.csv for availability.csv");
  c_rep->add_option("--roster", re.roster, "channel_users.csv");
  c_rep->add_option("--utc-offset", re.utc_offset, "Local offset in minutes (default 60)");
  c_rep->add_option("--out", re.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    fa.threads = ev.threads = di.threads = threads;
    if (c_sim->parsed()) return simulate(sim);
    if (c_feat->parsed()) return features(fa);
    if (c_eval->parsed()) return evaluate(ev);
    if (c_stack->parsed()) return stack_cmd(st);
    if (c_disc->parsed()) return discriminate(di);
    if (c_rep->parsed()) return report(re);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what();
    if (!e.lines().empty()) {
      std::cerr << " (lines";
      for (auto l : e.lines()) std::cerr << ' ' << l;
      std::cerr << ')';
    }
    std::cerr << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
