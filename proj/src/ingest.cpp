#include "tieinfer/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "tieinfer/errors.hpp"
#include "tieinfer/text.hpp"

namespace tieinfer {

Dictionary::Dictionary(std::vector<std::string> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end());
  items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
}

std::optional<std::uint32_t> Dictionary::find(std::string_view s) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), s,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == items_.end() || *it != s) return std::nullopt;
  return static_cast<std::uint32_t>(it - items_.begin());
}

EventLog::EventLog()
    : users_(std::make_shared<Dictionary>()), locations_(std::make_shared<Dictionary>()) {}

std::optional<std::pair<Timestamp, Timestamp>> EventLog::time_span() const {
  if (events_.empty()) return std::nullopt;
  return std::make_pair(events_.front().ts, events_.back().ts);
}

std::span<const ProximityEvent> EventLog::events_between(Timestamp begin, Timestamp end) const {
  auto lo = std::lower_bound(events_.begin(), events_.end(), begin,
                             [](const ProximityEvent& e, Timestamp t) { return e.ts < t; });
  auto hi = std::lower_bound(lo, events_.end(), end,
                             [](const ProximityEvent& e, Timestamp t) { return e.ts < t; });
  return {lo, hi};
}

Dyad EventLog::dyad(DyadIndex d) const {
  return Dyad{UserId(users_->at(d.a)), UserId(users_->at(d.b))};
}

const std::string& EventLog::location(LocationIndex l) const {
  static const std::string kEmpty;
  if (l == kNoLocation) return kEmpty;
  return locations_->at(l);
}

std::uint32_t EventLogBuilder::intern(std::unordered_map<std::string, std::uint32_t>& table,
                                      std::vector<std::string>& names, std::string_view s) {
  auto it = table.find(std::string(s));
  if (it != table.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names.size());
  names.emplace_back(s);
  table.emplace(names.back(), id);
  return id;
}

void EventLogBuilder::add(Timestamp ts, std::string_view user_a, std::string_view user_b,
                          std::string_view location_id, bool on_campus, std::uint32_t ap_count) {
  if (user_a.empty() || user_b.empty()) throw InvalidDyad("empty user id");
  if (user_a == user_b) throw InvalidDyad("self-dyad on user '" + std::string(user_a) + "'");
  ProximityEvent e;
  e.ts = ts;
  e.dyad.a = intern(user_ids_, user_names_, user_a);
  e.dyad.b = intern(user_ids_, user_names_, user_b);
  e.location = location_id.empty() ? kNoLocation
                                   : intern(location_ids_, location_names_, location_id);
  e.on_campus = on_campus;
  e.ap_count = ap_count;
  raw_.push_back(e);
}

namespace {

std::vector<std::uint32_t> rank_remap(const std::vector<std::string>& names) {
  std::vector<std::uint32_t> order(names.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t x, std::uint32_t y) { return names[x] < names[y]; });
  std::vector<std::uint32_t> remap(names.size());
  for (std::uint32_t rank = 0; rank < order.size(); ++rank) remap[order[rank]] = rank;
  return remap;
}

}  // namespace

EventLog EventLogBuilder::build() && {
  const auto user_remap = rank_remap(user_names_);
  const auto loc_remap = rank_remap(location_names_);

  for (auto& e : raw_) {
    UserIndex a = user_remap[e.dyad.a];
    UserIndex b = user_remap[e.dyad.b];
    if (a > b) std::swap(a, b);
    e.dyad = DyadIndex{a, b};
    if (e.location != kNoLocation) e.location = loc_remap[e.location];
  }

  std::sort(raw_.begin(), raw_.end(), [](const ProximityEvent& x, const ProximityEvent& y) {
    if (x.ts != y.ts) return x.ts < y.ts;
    if (x.dyad != y.dyad) return x.dyad < y.dyad;
    if (x.ap_count != y.ap_count) return x.ap_count > y.ap_count;
    if (x.location != y.location) return x.location < y.location;
    return x.on_campus > y.on_campus;
  });
  raw_.erase(std::unique(raw_.begin(), raw_.end(),
                         [](const ProximityEvent& x, const ProximityEvent& y) {
                           return x.ts == y.ts && x.dyad == y.dyad;
                         }),
             raw_.end());

  EventLog log;
  log.users_ = std::make_shared<Dictionary>(std::move(user_names_));
  log.locations_ = std::make_shared<Dictionary>(std::move(location_names_));
  log.events_ = std::move(raw_);
  raw_.clear();
  return log;
}

namespace {

enum Column { kTs, kUserA, kUserB, kLocation, kCampus, kAp, kColumnCount };

constexpr std::string_view kEventColumns[kColumnCount] = {"ts",        "user_a",    "user_b",
                                                          "location_id", "on_campus", "ap_count"};

struct Record {
  Timestamp ts;
  std::string_view a, b, location;
  bool campus;
  std::uint32_t ap;
};

bool valid_record(const Record& r) {
  if (r.a.empty() || r.b.empty() || r.a == r.b) return false;
  if (!r.location.empty() && r.ap < 1) return false;
  return true;
}

class MalformedTracker {
 public:
  explicit MalformedTracker(const ParseOptions& opts) : opts_(opts) {}
  void mark(std::size_t line) {
    ++count_;
    if (lines_.size() < opts_.max_reported_lines) lines_.push_back(line);
  }
  void finish(ParsedEvents& out) const {
    out.malformed = count_;
    out.malformed_lines = lines_;
    if (opts_.strict && count_ > 0) {
      std::string msg = "malformed event records: " + std::to_string(count_) + " (lines";
      for (auto l : lines_) msg += " " + std::to_string(l);
      msg += ")";
      throw ParseError(msg, lines_);
    }
  }

 private:
  const ParseOptions& opts_;
  std::size_t count_ = 0;
  std::vector<std::size_t> lines_;
};

void parse_csv(std::istream& in, EventLogBuilder& builder, MalformedTracker& bad) {
  std::string line;
  std::vector<std::string_view> fields;
  std::array<int, kColumnCount> col{0, 1, 2, 3, 4, 5};
  std::size_t width = kColumnCount;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::trim(line);
    if (view.empty()) continue;
    text::split(view, ',', fields);
    if (first) {
      first = false;
      if (!text::parse_int<Timestamp>(text::trim(fields[0]))) {
        // Header row: map columns by name.
        bool header = false;
        for (auto f : fields) header |= text::trim(f) == "ts";
        if (header) {
          col.fill(-1);
          for (std::size_t i = 0; i < fields.size(); ++i) {
            for (int c = 0; c < kColumnCount; ++c) {
              if (text::trim(fields[i]) == kEventColumns[c]) col[c] = static_cast<int>(i);
            }
          }
          if (std::any_of(col.begin(), col.end(), [](int c) { return c < 0; })) {
            throw ParseError("events header lacks a required column", {line_no});
          }
          width = fields.size();
          continue;
        }
      }
    }
    if (fields.size() != width) {
      bad.mark(line_no);
      continue;
    }
    auto field = [&](Column c) { return text::trim(fields[col[c]]); };
    const auto ts = text::parse_int<Timestamp>(field(kTs));
    const auto campus = text::parse_bool(field(kCampus));
    const auto ap = text::parse_int<std::uint32_t>(field(kAp));
    if (!ts || !campus || !ap) {
      bad.mark(line_no);
      continue;
    }
    Record r{*ts, field(kUserA), field(kUserB), field(kLocation), *campus, *ap};
    if (!valid_record(r)) {
      bad.mark(line_no);
      continue;
    }
    builder.add(r.ts, r.a, r.b, r.location, r.campus, r.ap);
  }
}

void parse_jsonl(std::istream& in, EventLogBuilder& builder, MalformedTracker& bad) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      std::string location;
      if (j.contains("location_id") && !j.at("location_id").is_null()) {
        location = j.at("location_id").get<std::string>();
      }
      const auto ap = j.at("ap_count").get<std::int64_t>();
      if (ap < 0) {
        bad.mark(line_no);
        continue;
      }
      const std::string a = j.at("user_a").get<std::string>();
      const std::string b = j.at("user_b").get<std::string>();
      Record r{j.at("ts").get<Timestamp>(), a, b, location, j.at("on_campus").get<bool>(),
               static_cast<std::uint32_t>(ap)};
      if (!valid_record(r)) {
        bad.mark(line_no);
        continue;
      }
      builder.add(r.ts, r.a, r.b, r.location, r.campus, r.ap);
    } catch (const nlohmann::json::exception&) {
      bad.mark(line_no);
    }
  }
}

}  // namespace

ParsedEvents parse_events(std::istream& in, EventFormat format, const ParseOptions& opts) {
  if (!in.good()) throw IoError("event stream is not readable");
  EventLogBuilder builder;
  MalformedTracker bad(opts);
  if (format == EventFormat::Csv) {
    parse_csv(in, builder, bad);
  } else {
    parse_jsonl(in, builder, bad);
  }
  if (in.bad()) throw IoError("read error on event stream");
  ParsedEvents out;
  bad.finish(out);
  out.log = std::move(builder).build();
  return out;
}

ParsedEvents parse_events_file(const std::string& path, EventFormat format,
                               const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open events file '" + path + "'");
  return parse_events(in, format, opts);
}

void write_events_csv(std::ostream& out, const EventLog& log) {
  out << "ts,user_a,user_b,location_id,on_campus,ap_count\n";
  std::string line;
  for (const auto& e : log.events()) {
    line.clear();
    line += std::to_string(e.ts);
    line += ',';
    line += log.user(e.dyad.a);
    line += ',';
    line += log.user(e.dyad.b);
    line += ',';
    line += log.location(e.location);
    line += e.on_campus ? ",true," : ",false,";
    line += std::to_string(e.ap_count);
    line += '\n';
    out << line;
  }
}

void LabelSet::add_edge(const YearMonth& month, Channel channel, const Dyad& dyad) {
  edges_[{month, channel}].insert(dyad);
  auto& users = channel_users_[channel];
  users.insert(dyad.a);
  users.insert(dyad.b);
}

void LabelSet::add_channel_user(Channel channel, const UserId& user) {
  channel_users_[channel].insert(user);
}

const std::set<Dyad>& LabelSet::edges(const YearMonth& month, Channel channel) const {
  static const std::set<Dyad> kEmpty;
  auto it = edges_.find({month, channel});
  return it == edges_.end() ? kEmpty : it->second;
}

const std::set<UserId>& LabelSet::channel_users(Channel channel) const {
  static const std::set<UserId> kEmpty;
  auto it = channel_users_.find(channel);
  return it == channel_users_.end() ? kEmpty : it->second;
}

bool LabelSet::has_edge(const YearMonth& month, Channel channel, const Dyad& dyad) const {
  const auto& e = edges(month, channel);
  return e.find(dyad) != e.end();
}

std::vector<YearMonth> LabelSet::months() const {
  std::set<YearMonth> months;
  for (const auto& [key, dyads] : edges_) {
    if (!dyads.empty()) months.insert(key.first);
  }
  return {months.begin(), months.end()};
}

std::size_t LabelSet::edge_count() const {
  std::size_t n = 0;
  for (const auto& [key, dyads] : edges_) n += dyads.size();
  return n;
}

namespace {

bool looks_like_header(std::string_view first_field) {
  return !text::parse_int<int>(text::trim(first_field)).has_value() &&
         !parse_channel(text::trim(first_field)).has_value();
}

}  // namespace

LabelSet parse_ground_truth(std::istream& labels, std::istream* roster) {
  if (!labels.good()) throw IoError("label stream is not readable");
  LabelSet set;
  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 0;
  while (std::getline(labels, line)) {
    ++line_no;
    const std::string_view view = text::trim(line);
    if (view.empty()) continue;
    text::split(view, ',', f);
    if (line_no == 1 && looks_like_header(f[0])) continue;
    if (f.size() != 5) throw ParseError("label record needs 5 fields", {line_no});
    const auto year = text::parse_int<int>(text::trim(f[0]));
    const auto month = text::parse_int<int>(text::trim(f[1]));
    if (!year || !month || *month < 1 || *month > 12) {
      throw ParseError("bad year/month in label record", {line_no});
    }
    const auto channel = parse_channel(text::trim(f[2]));
    if (!channel) {
      throw ParseError("unknown channel '" + std::string(text::trim(f[2])) + "'", {line_no});
    }
    const auto a = text::trim(f[3]);
    const auto b = text::trim(f[4]);
    if (a.empty() || b.empty() || a == b) throw ParseError("invalid label dyad", {line_no});
    set.add_edge(YearMonth{*year, *month}, *channel, canonical_dyad(a, b));
  }
  if (labels.bad()) throw IoError("read error on label stream");

  if (roster != nullptr) {
    if (!roster->good()) throw IoError("roster stream is not readable");
    line_no = 0;
    while (std::getline(*roster, line)) {
      ++line_no;
      const std::string_view view = text::trim(line);
      if (view.empty()) continue;
      text::split(view, ',', f);
      if (line_no == 1 && looks_like_header(f[0])) continue;
      if (f.size() != 2) throw ParseError("roster record needs 2 fields", {line_no});
      const auto channel = parse_channel(text::trim(f[0]));
      if (!channel) {
        throw ParseError("unknown channel '" + std::string(text::trim(f[0])) + "'", {line_no});
      }
      const auto user = text::trim(f[1]);
      if (user.empty()) throw ParseError("empty roster user", {line_no});
      set.add_channel_user(*channel, UserId(std::string(user)));
    }
  }
  return set;
}

LabelSet parse_ground_truth_files(const std::string& labels_path,
                                  const std::string& roster_path) {
  std::ifstream labels(labels_path);
  if (!labels) throw IoError("cannot open labels file '" + labels_path + "'");
  if (roster_path.empty()) return parse_ground_truth(labels);
  std::ifstream roster(roster_path);
  if (!roster) throw IoError("cannot open roster file '" + roster_path + "'");
  return parse_ground_truth(labels, &roster);
}

void write_labels_csv(std::ostream& out, const LabelSet& labels) {
  out << "year,month,channel,user_a,user_b\n";
  for (const auto& [key, dyads] : labels.all_edges()) {
    for (const auto& d : dyads) {
      out << key.first.year << ',' << key.first.month << ',' << channel_token(key.second) << ','
          << d.a.str() << ',' << d.b.str() << '\n';
    }
  }
}

void write_roster_csv(std::ostream& out, const LabelSet& labels) {
  out << "channel,user\n";
  for (Channel c : kAllChannels) {
    for (const auto& u : labels.channel_users(c)) out << channel_token(c) << ',' << u.str() << '\n';
  }
}

ValidationReport validate_log(const EventLog& log, const LabelSet& labels,
                              int utc_offset_minutes) {
  ValidationReport report;

  std::set<UserId> label_users;
  for (const auto& [key, dyads] : labels.all_edges()) {
    for (const auto& d : dyads) {
      label_users.insert(d.a);
      label_users.insert(d.b);
    }
  }
  for (const auto& u : label_users) {
    if (!log.users().find(u.str())) report.missing_users.insert(u);
  }

  std::set<YearMonth> months;
  for (const auto& m : labels.months()) months.insert(m);
  if (auto span = log.time_span()) {
    YearMonth m = month_of(span->first, utc_offset_minutes).ym;
    const YearMonth last = month_of(span->second, utc_offset_minutes).ym;
    for (; m <= last; m = m.next()) months.insert(m);
  }

  for (const auto& ym : months) {
    const MonthWindow w{ym, utc_offset_minutes};
    const auto events = log.events_between(w.begin_ts(), w.end_ts());
    MonthSummary s;
    s.month = ym;
    s.events = events.size();
    std::vector<DyadIndex> dyads;
    dyads.reserve(events.size());
    for (const auto& e : events) dyads.push_back(e.dyad);
    std::sort(dyads.begin(), dyads.end());
    dyads.erase(std::unique(dyads.begin(), dyads.end()), dyads.end());
    s.active_dyads = dyads.size();
    std::vector<UserIndex> users;
    users.reserve(dyads.size() * 2);
    for (const auto& d : dyads) {
      users.push_back(d.a);
      users.push_back(d.b);
    }
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    s.active_users = users.size();
    for (Channel c : kAllChannels) {
      const auto& edges = labels.edges(ym, c);
      s.edges[static_cast<int>(c)] = edges.size();
      std::size_t active = 0;
      for (const auto& d : edges) {
        const auto a = log.users().find(d.a.str());
        const auto b = log.users().find(d.b.str());
        if (a && b && std::binary_search(dyads.begin(), dyads.end(), DyadIndex{*a, *b})) ++active;
      }
      s.active_edges[static_cast<int>(c)] = active;
    }
    if (s.events == 0) report.zero_event_months.push_back(ym);
    report.months.push_back(s);
  }
  return report;
}

void write_availability_csv(std::ostream& out, const ValidationReport& report) {
  out << "year,month,events,active_users,active_dyads";
  for (Channel c : kAllChannels) out << ",edges_" << channel_token(c);
  for (Channel c : kAllChannels) out << ",active_edges_" << channel_token(c);
  out << '\n';
  for (const auto& s : report.months) {
    out << s.month.year << ',' << s.month.month << ',' << s.events << ',' << s.active_users << ','
        << s.active_dyads;
    for (auto v : s.edges) out << ',' << v;
    for (auto v : s.active_edges) out << ',' << v;
    out << '\n';
  }
}

}  // namespace tieinfer
