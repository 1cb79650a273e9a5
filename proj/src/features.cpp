#include "tieinfer/features.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "tieinfer/errors.hpp"
#include "tieinfer/parallel.hpp"
#include "tieinfer/text.hpp"

namespace tieinfer {

std::string_view base_feature_name(BaseFeature f) {
  static constexpr std::string_view kNames[kBaseFeatureCount] = {
      "total_time",           "time_on_campus",       "time_off_campus",
      "time_at_home",         "time_weighted_people", "time_weighted_aps",
      "entropy_hour_of_day",  "entropy_day_of_week",  "entropy_hour_of_week",
      "mean_inter_meeting",   "median_inter_meeting", "entropy_locations",
      "jaccard_top5",         "jaccard_top15",        "jaccard_top25",
      "jaccard_top50"};
  return kNames[f];
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Total: return "total";
    case Variant::InRole: return "in_role";
    case Variant::ExtraRole: return "extra_role";
  }
  return "";
}

std::string feature_name(int column) {
  const auto base = static_cast<BaseFeature>(column % kBaseFeatureCount);
  const auto variant = static_cast<Variant>(column / kBaseFeatureCount);
  return std::string(base_feature_name(base)) + "_" + std::string(variant_name(variant));
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (int c = 0; c < kFeatureCount; ++c) n.push_back(feature_name(c));
    return n;
  }();
  return names;
}

TimeFeatures time_features(std::span<const MinuteCell> minutes, Variant variant) {
  if (variant == Variant::Total) {
    // Summing the role blocks keeps total = in-role + extra-role exact in
    // floating point.
    const TimeFeatures in = time_features(minutes, Variant::InRole);
    const TimeFeatures extra = time_features(minutes, Variant::ExtraRole);
    return {in.total + extra.total,
            in.on_campus + extra.on_campus,
            in.off_campus + extra.off_campus,
            in.at_home + extra.at_home,
            in.weighted_people + extra.weighted_people,
            in.weighted_aps + extra.weighted_aps};
  }
  TimeFeatures t;
  for (const auto& c : minutes) {
    if (!variant_includes(variant, c.role)) continue;
    t.total += 1;
    if (c.on_campus) {
      t.on_campus += 1;
    } else {
      t.off_campus += 1;
    }
    if (c.at_home) t.at_home += 1;
    t.weighted_people += 1.0 / (1.0 + c.group_size);
    t.weighted_aps += 1.0 / std::max<std::uint32_t>(1, c.ap_count);
  }
  return t;
}

double shannon_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total <= 1) return 0.0;
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h > 0.0 ? h : 0.0;
}

namespace {

struct GapStats {
  double mean;
  double median;
};

GapStats gap_stats(std::vector<double>& gaps, std::int64_t month_length_minutes) {
  if (gaps.empty()) {
    const auto sentinel = static_cast<double>(month_length_minutes);
    return {sentinel, sentinel};
  }
  double sum = 0.0;
  for (double g : gaps) sum += g;
  std::sort(gaps.begin(), gaps.end());
  const std::size_t n = gaps.size();
  const double median = n % 2 == 1 ? gaps[n / 2] : 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
  return {sum / static_cast<double>(n), median};
}

struct Scratch {
  std::array<std::uint64_t, 24> hours{};
  std::array<std::uint64_t, 7> days{};
  std::array<std::uint64_t, 168> week{};
  std::vector<LocationIndex> locations;
  std::vector<std::uint64_t> location_counts;
  std::vector<MinuteIndex> filtered;
  std::vector<double> gaps;
};

RegularityFeatures regularity_impl(std::span<const Meeting> meetings,
                                   std::span<const MinuteCell> minutes, Variant variant,
                                   const FeatureConfig& cfg, std::int64_t month_length_minutes,
                                   Scratch& s) {
  s.hours.fill(0);
  s.days.fill(0);
  s.week.fill(0);
  s.locations.clear();
  s.filtered.clear();
  s.gaps.clear();
  for (const auto& c : minutes) {
    if (!variant_includes(variant, c.role)) continue;
    const LocalTime lt = local_time(c.minute * 60, cfg.roles.utc_offset_minutes);
    ++s.hours[lt.hour];
    ++s.days[lt.weekday];
    ++s.week[lt.hour_of_week];
    if (c.location != kNoLocation) s.locations.push_back(c.location);
    s.filtered.push_back(c.minute);
  }

  RegularityFeatures r;
  r.entropy_hour_of_day = shannon_entropy(s.hours);
  r.entropy_day_of_week = shannon_entropy(s.days);
  r.entropy_hour_of_week = shannon_entropy(s.week);

  std::sort(s.locations.begin(), s.locations.end());
  s.location_counts.clear();
  for (std::size_t i = 0; i < s.locations.size();) {
    std::size_t j = i;
    while (j < s.locations.size() && s.locations[j] == s.locations[i]) ++j;
    s.location_counts.push_back(j - i);
    i = j;
  }
  r.entropy_locations = shannon_entropy(s.location_counts);

  if (variant == Variant::Total) {
    for (std::size_t i = 1; i < meetings.size(); ++i) {
      s.gaps.push_back(static_cast<double>(meetings[i].start_minute - meetings[i - 1].end_minute));
    }
  } else {
    const auto runs = segment_minutes(s.filtered, cfg.gap_tolerance);
    for (std::size_t i = 1; i < runs.size(); ++i) {
      s.gaps.push_back(static_cast<double>(runs[i].start - runs[i - 1].end));
    }
  }
  const GapStats g = gap_stats(s.gaps, month_length_minutes);
  r.mean_inter_meeting = g.mean;
  r.median_inter_meeting = g.median;
  return r;
}

}  // namespace

RegularityFeatures regularity_features(std::span<const Meeting> meetings,
                                       std::span<const MinuteCell> minutes, Variant variant,
                                       const FeatureConfig& cfg,
                                       std::int64_t month_length_minutes) {
  Scratch s;
  return regularity_impl(meetings, minutes, variant, cfg, month_length_minutes, s);
}

ContactIndex ContactIndex::build(const MinuteGrid& grid) {
  ContactIndex idx;
  idx.users_ = grid.user_count();
  for (int v = 0; v < 3; ++v) {
    const auto variant = static_cast<Variant>(v);
    // Per-dyad minutes under the variant, then scatter into both endpoints.
    std::vector<std::uint32_t> per_dyad(grid.dyad_count(), 0);
    std::vector<std::size_t> degree(idx.users_ + 1, 0);
    for (std::size_t row = 0; row < grid.dyad_count(); ++row) {
      std::uint32_t n = 0;
      for (const auto& c : grid.minutes(row)) n += variant_includes(variant, c.role) ? 1 : 0;
      per_dyad[row] = n;
      if (n > 0) {
        ++degree[grid.dyad(row).a];
        ++degree[grid.dyad(row).b];
      }
    }
    auto& offsets = idx.offsets_[v];
    offsets.assign(idx.users_ + 1, 0);
    for (std::size_t u = 0; u < idx.users_; ++u) offsets[u + 1] = offsets[u] + degree[u];
    auto& list = idx.lists_[v];
    list.assign(offsets[idx.users_], Contact{0, 0});
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t row = 0; row < grid.dyad_count(); ++row) {
      if (per_dyad[row] == 0) continue;
      const DyadIndex d = grid.dyad(row);
      list[fill[d.a]++] = Contact{d.b, per_dyad[row]};
      list[fill[d.b]++] = Contact{d.a, per_dyad[row]};
    }
    for (std::size_t u = 0; u < idx.users_; ++u) {
      std::sort(list.begin() + static_cast<std::ptrdiff_t>(offsets[u]),
                list.begin() + static_cast<std::ptrdiff_t>(offsets[u + 1]),
                [](const Contact& x, const Contact& y) {
                  if (x.minutes != y.minutes) return x.minutes > y.minutes;
                  return x.partner < y.partner;
                });
    }
  }
  return idx;
}

std::span<const ContactIndex::Contact> ContactIndex::contacts(UserIndex user,
                                                              Variant variant) const {
  const int v = static_cast<int>(variant);
  if (user >= users_) return {};
  return std::span<const Contact>(lists_[v]).subspan(offsets_[v][user],
                                                     offsets_[v][user + 1] - offsets_[v][user]);
}

std::vector<UserIndex> ContactIndex::top_contacts(UserIndex user, int k, Variant variant,
                                                  std::optional<UserIndex> exclude) const {
  std::vector<UserIndex> out;
  for (const auto& c : contacts(user, variant)) {
    if (static_cast<int>(out.size()) >= k) break;
    if (exclude && c.partner == *exclude) continue;
    out.push_back(c.partner);
  }
  return out;
}

std::optional<std::size_t> FeatureMatrix::find(const Dyad& d) const {
  auto it = std::lower_bound(dyads.begin(), dyads.end(), d);
  if (it == dyads.end() || !(*it == d)) return std::nullopt;
  return static_cast<std::size_t>(it - dyads.begin());
}

FeatureMatrix build_feature_matrix(const EventLog& log, const MinuteGrid& grid,
                                   const MeetingTable& meetings, const MonthWindow& month,
                                   const FeatureConfig& cfg) {
  FeatureMatrix m;
  m.month = month.ym;
  const std::size_t rows = grid.dyad_count();
  m.dyads.reserve(rows);
  for (std::size_t row = 0; row < rows; ++row) m.dyads.push_back(log.dyad(grid.dyad(row)));
  m.values.assign(rows * kFeatureCount, 0.0);

  const ContactIndex contacts = ContactIndex::build(grid);
  const std::int64_t month_minutes = month.length_minutes();

  const int threads = std::max(1, cfg.threads);
  const std::size_t chunk = 1024;
  const std::size_t chunks = (rows + chunk - 1) / chunk;
  parallel_for(chunks, threads, [&](std::size_t ci) {
    Scratch scratch;
    const std::size_t end = std::min(rows, (ci + 1) * chunk);
    for (std::size_t row = ci * chunk; row < end; ++row) {
      const auto cells = grid.minutes(row);
      const auto dyad_meetings = meetings.for_row(row);
      const DyadIndex d = grid.dyad(row);
      double* out = &m.values[row * kFeatureCount];
      for (Variant v : kAllVariants) {
        const TimeFeatures t = time_features(cells, v);
        out[feature_column(kTotalTime, v)] = t.total;
        out[feature_column(kTimeOnCampus, v)] = t.on_campus;
        out[feature_column(kTimeOffCampus, v)] = t.off_campus;
        out[feature_column(kTimeAtHome, v)] = t.at_home;
        out[feature_column(kTimeWeightedPeople, v)] = t.weighted_people;
        out[feature_column(kTimeWeightedAps, v)] = t.weighted_aps;

        const RegularityFeatures r =
            regularity_impl(dyad_meetings, cells, v, cfg, month_minutes, scratch);
        out[feature_column(kEntropyHourOfDay, v)] = r.entropy_hour_of_day;
        out[feature_column(kEntropyDayOfWeek, v)] = r.entropy_day_of_week;
        out[feature_column(kEntropyHourOfWeek, v)] = r.entropy_hour_of_week;
        out[feature_column(kMeanInterMeeting, v)] = r.mean_inter_meeting;
        out[feature_column(kMedianInterMeeting, v)] = r.median_inter_meeting;
        out[feature_column(kEntropyLocations, v)] = r.entropy_locations;

        for (int i = 0; i < 4; ++i) {
          const int k = kTopContactSizes[i];
          const double j = jaccard(contacts.top_contacts(d.a, k, v, d.b),
                                   contacts.top_contacts(d.b, k, v, d.a));
          out[feature_column(static_cast<BaseFeature>(kJaccardTop5 + i), v)] = j;
        }
      }
    }
  });
  return m;
}

FeatureMatrix compute_month_features(const EventLog& log, const HomeMap& homes,
                                     const MonthWindow& month, const FeatureConfig& cfg) {
  GridConfig gcfg;
  gcfg.roles = cfg.roles;
  const MinuteGrid grid =
      build_minute_grid(log, homes, gcfg, std::make_pair(month.begin_ts(), month.end_ts()));
  const MeetingTable meetings = segment_meetings(grid, cfg.gap_tolerance);
  return build_feature_matrix(log, grid, meetings, month, cfg);
}

void write_features_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "user_a,user_b,year,month";
  for (const auto& name : feature_names()) out << ',' << name;
  out << '\n';
  std::string line;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    line.clear();
    line += m.dyads[i].a.str();
    line += ',';
    line += m.dyads[i].b.str();
    line += ',';
    line += std::to_string(m.month.year);
    line += ',';
    line += std::to_string(m.month.month);
    for (double v : m.row(i)) {
      line += ',';
      line += text::format_double(v);
    }
    line += '\n';
    out << line;
  }
}

FeatureMatrix read_features_csv(std::istream& in) {
  if (!in.good()) throw IoError("features stream is not readable");
  FeatureMatrix m;
  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 0;
  bool have_month = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::trim(line);
    if (view.empty()) continue;
    text::split(view, ',', f);
    if (line_no == 1) {
      if (f.size() != 4 + kFeatureCount || text::trim(f[0]) != "user_a") {
        throw ParseError("features header does not match the 48-column layout", {1});
      }
      for (int c = 0; c < kFeatureCount; ++c) {
        if (text::trim(f[4 + c]) != feature_names()[c]) {
          throw ParseError("unexpected feature column '" + std::string(f[4 + c]) + "'", {1});
        }
      }
      continue;
    }
    if (f.size() != 4 + kFeatureCount) throw ParseError("wrong field count", {line_no});
    const auto year = text::parse_int<int>(text::trim(f[2]));
    const auto month = text::parse_int<int>(text::trim(f[3]));
    if (!year || !month || *month < 1 || *month > 12) {
      throw ParseError("bad year/month", {line_no});
    }
    const YearMonth ym{*year, *month};
    if (!have_month) {
      m.month = ym;
      have_month = true;
    } else if (!(ym == m.month)) {
      throw ParseError("features file mixes months", {line_no});
    }
    m.dyads.push_back(canonical_dyad(text::trim(f[0]), text::trim(f[1])));
    for (int c = 0; c < kFeatureCount; ++c) {
      const auto v = text::parse_double(text::trim(f[4 + c]));
      if (!v) throw ParseError("non-numeric feature value", {line_no});
      m.values.push_back(*v);
    }
  }
  if (line_no == 0) throw ParseError("empty features file");
  if (!std::is_sorted(m.dyads.begin(), m.dyads.end())) {
    // Sort rows by dyad so lookups can binary search.
    std::vector<std::size_t> order(m.dyads.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return m.dyads[x] < m.dyads[y]; });
    FeatureMatrix sorted;
    sorted.month = m.month;
    for (auto i : order) {
      sorted.dyads.push_back(m.dyads[i]);
      const auto r = m.row(i);
      sorted.values.insert(sorted.values.end(), r.begin(), r.end());
    }
    return sorted;
  }
  return m;
}

FeatureMatrix read_features_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open features file '" + path + "'");
  return read_features_csv(in);
}

}  // namespace tieinfer
