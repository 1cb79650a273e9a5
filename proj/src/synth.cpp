#include "tieinfer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "tieinfer/errors.hpp"
#include "tieinfer/rng.hpp"

namespace tieinfer {

namespace {

constexpr std::array<Channel, 4> kGenerationOrder{Channel::Call, Channel::Sms, Channel::FbFriend,
                                                  Channel::FbInteraction};
// A dyad in several channels behaves like its first channel in this list.
constexpr std::array<Channel, 4> kProfilePriority{Channel::Call, Channel::Sms,
                                                  Channel::FbInteraction, Channel::FbFriend};

std::size_t ch(Channel c) { return static_cast<std::size_t>(c); }

}  // namespace

SynthConfig::SynthConfig() {
  auto& call = profiles[ch(Channel::Call)];
  call.extra_role_meeting_rate = 1.2;
  call.in_role_meeting_rate = 0.5;
  call.mean_group_size = 0.5;
  call.off_campus_prob = 0.6;
  call.home_visit_prob = 0.5;
  call.schedule_jitter = 0.8;
  call.mean_duration_minutes = 90;
  profiles[ch(Channel::Sms)] = call;

  auto& inter = profiles[ch(Channel::FbInteraction)];
  inter.extra_role_meeting_rate = 0.4;
  inter.in_role_meeting_rate = 0.8;
  inter.mean_group_size = 3.0;
  inter.off_campus_prob = 0.3;
  inter.home_visit_prob = 0.1;
  inter.schedule_jitter = 0.3;
  inter.mean_duration_minutes = 60;

  auto& fb = profiles[ch(Channel::FbFriend)];
  fb.extra_role_meeting_rate = 0.25;
  fb.in_role_meeting_rate = 0.4;
  fb.mean_group_size = 4.0;
  fb.off_campus_prob = 0.3;
  fb.home_visit_prob = 0.05;
  fb.schedule_jitter = 0.5;
  fb.mean_duration_minutes = 60;

  for (std::size_t i = 0; i < 4; ++i) overlap[i][i] = 1.0;
  auto set = [&](Channel a, Channel b, double v) {
    overlap[ch(a)][ch(b)] = v;
    overlap[ch(b)][ch(a)] = v;
  };
  set(Channel::Call, Channel::Sms, 0.7);
  set(Channel::Call, Channel::FbFriend, 0.5);
  set(Channel::Sms, Channel::FbFriend, 0.5);
  set(Channel::Call, Channel::FbInteraction, 0.15);
  set(Channel::Sms, Channel::FbInteraction, 0.15);
  set(Channel::FbFriend, Channel::FbInteraction, 0.5);
}

SynthConfig SynthConfig::chance() const {
  SynthConfig c = *this;
  for (auto& p : c.profiles) p = ChannelProfile{};
  c.major_homophily = 0.0;
  return c;
}

void SynthConfig::validate() const {
  auto prob = [](double v, const std::string& what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(what + " must be a probability in [0, 1]");
  };
  auto nonneg = [](double v, const std::string& what) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be >= 0");
  };
  if (n_users < 2) throw ConfigError("n_users must be at least 2");
  if (n_majors < 1 || n_majors > n_users) throw ConfigError("n_majors must be in [1, n_users]");
  if (months < 1) throw ConfigError("months must be at least 1");
  if (start.month < 1 || start.month > 12) throw ConfigError("start month out of range");
  if (scan_interval_minutes < 1) throw ConfigError("scan_interval_minutes must be >= 1");
  const auto& s = schedule;
  if (s.lectures_per_week < 0 || s.sections_per_week < 0 || s.section_size < 1 ||
      s.block_minutes < 1 || s.canteen_zones < 1 || s.venues < 1 || s.cafes < 1 ||
      s.lounges < 1) {
    throw ConfigError("schedule counts must be positive");
  }
  prob(s.attendance, "schedule.attendance");
  prob(s.lunch_prob, "schedule.lunch_prob");
  nonneg(s.venue_visits_per_week, "schedule.venue_visits_per_week");
  for (Channel c : kAllChannels) {
    const std::string name(channel_token(c));
    prob(density[ch(c)], "density." + name);
    const auto& p = profiles[ch(c)];
    nonneg(p.extra_role_meeting_rate, name + ".extra_role_meeting_rate");
    nonneg(p.in_role_meeting_rate, name + ".in_role_meeting_rate");
    nonneg(p.mean_group_size, name + ".mean_group_size");
    prob(p.off_campus_prob, name + ".off_campus_prob");
    prob(p.home_visit_prob, name + ".home_visit_prob");
    prob(p.schedule_jitter, name + ".schedule_jitter");
    if (!(p.mean_duration_minutes >= 1.0)) {
      throw ConfigError(name + ".mean_duration_minutes must be >= 1");
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (overlap[i][i] != 1.0) throw ConfigError("overlap matrix needs a unit diagonal");
    for (std::size_t j = 0; j < 4; ++j) {
      prob(overlap[i][j], "overlap entry");
      if (overlap[i][j] != overlap[j][i]) throw ConfigError("overlap matrix must be symmetric");
    }
  }
  prob(major_homophily, "major_homophily");
  prob(tie_persistence, "tie_persistence");
  prob(dormant_prob, "dormant_prob");
  prob(detection_prob, "detection_prob");
}

namespace {

nlohmann::json profile_json(const ChannelProfile& p) {
  return {{"extra_role_meeting_rate", p.extra_role_meeting_rate},
          {"in_role_meeting_rate", p.in_role_meeting_rate},
          {"mean_group_size", p.mean_group_size},
          {"off_campus_prob", p.off_campus_prob},
          {"home_visit_prob", p.home_visit_prob},
          {"schedule_jitter", p.schedule_jitter},
          {"mean_duration_minutes", p.mean_duration_minutes}};
}

// Copies known keys from `j` into fields; unknown keys are an error so typos
// do not silently fall back to defaults.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }
  template <class T>
  void get(const char* key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }
  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown config key " + where_ + "." + k);
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Channel channel_key(const std::string& key, const std::string& where) {
  const auto c = parse_channel(key);
  if (!c) throw ConfigError("unknown channel '" + key + "' in " + where);
  return *c;
}

}  // namespace

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json dens, prof, ov;
  for (Channel c : kAllChannels) {
    const std::string name(channel_token(c));
    dens[name] = density[ch(c)];
    prof[name] = profile_json(profiles[ch(c)]);
    for (Channel d : kAllChannels) ov[name][std::string(channel_token(d))] = overlap[ch(c)][ch(d)];
  }
  const auto& s = schedule;
  return {{"n_users", n_users},
          {"n_majors", n_majors},
          {"months", months},
          {"seed", seed},
          {"start", start.str()},
          {"utc_offset_minutes", utc_offset_minutes},
          {"schedule",
           {{"lectures_per_week", s.lectures_per_week},
            {"sections_per_week", s.sections_per_week},
            {"section_size", s.section_size},
            {"block_minutes", s.block_minutes},
            {"attendance", s.attendance},
            {"lunch_prob", s.lunch_prob},
            {"canteen_zones", s.canteen_zones},
            {"venue_visits_per_week", s.venue_visits_per_week},
            {"venues", s.venues},
            {"cafes", s.cafes},
            {"lounges", s.lounges}}},
          {"density", dens},
          {"profiles", prof},
          {"overlap", ov},
          {"major_homophily", major_homophily},
          {"tie_persistence", tie_persistence},
          {"dormant_prob", dormant_prob},
          {"detection_prob", detection_prob},
          {"scan_interval_minutes", scan_interval_minutes}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  Reader r(j, "config");
  r.get("n_users", c.n_users);
  r.get("n_majors", c.n_majors);
  r.get("months", c.months);
  r.get("seed", c.seed);
  std::string start = c.start.str();
  r.get("start", start);
  const auto ym = parse_year_month(start);
  if (!ym) throw ConfigError("config.start must be YYYY-MM");
  c.start = *ym;
  r.get("utc_offset_minutes", c.utc_offset_minutes);
  if (const auto* s = r.child("schedule")) {
    Reader rs(*s, "config.schedule");
    auto& d = c.schedule;
    rs.get("lectures_per_week", d.lectures_per_week);
    rs.get("sections_per_week", d.sections_per_week);
    rs.get("section_size", d.section_size);
    rs.get("block_minutes", d.block_minutes);
    rs.get("attendance", d.attendance);
    rs.get("lunch_prob", d.lunch_prob);
    rs.get("canteen_zones", d.canteen_zones);
    rs.get("venue_visits_per_week", d.venue_visits_per_week);
    rs.get("venues", d.venues);
    rs.get("cafes", d.cafes);
    rs.get("lounges", d.lounges);
    rs.finish();
  }
  if (const auto* dens = r.child("density")) {
    if (!dens->is_object()) throw ConfigError("config.density must be an object");
    for (const auto& [k, v] : dens->items()) {
      if (!v.is_number()) throw ConfigError("config.density." + k + " must be a number");
      c.density[ch(channel_key(k, "config.density"))] = v.get<double>();
    }
  }
  if (const auto* prof = r.child("profiles")) {
    if (!prof->is_object()) throw ConfigError("config.profiles must be an object");
    for (const auto& [k, v] : prof->items()) {
      auto& p = c.profiles[ch(channel_key(k, "config.profiles"))];
      Reader rp(v, "config.profiles." + k);
      rp.get("extra_role_meeting_rate", p.extra_role_meeting_rate);
      rp.get("in_role_meeting_rate", p.in_role_meeting_rate);
      rp.get("mean_group_size", p.mean_group_size);
      rp.get("off_campus_prob", p.off_campus_prob);
      rp.get("home_visit_prob", p.home_visit_prob);
      rp.get("schedule_jitter", p.schedule_jitter);
      rp.get("mean_duration_minutes", p.mean_duration_minutes);
      rp.finish();
    }
  }
  if (const auto* ov = r.child("overlap")) {
    if (!ov->is_object()) throw ConfigError("config.overlap must be an object");
    for (const auto& [k, row] : ov->items()) {
      const Channel a = channel_key(k, "config.overlap");
      if (!row.is_object()) throw ConfigError("config.overlap." + k + " must be an object");
      for (const auto& [k2, v] : row.items()) {
        if (!v.is_number()) throw ConfigError("config.overlap entries must be numbers");
        c.overlap[ch(a)][ch(channel_key(k2, "config.overlap." + k))] = v.get<double>();
      }
    }
  }
  r.get("major_homophily", c.major_homophily);
  r.get("tie_persistence", c.tie_persistence);
  r.get("dormant_prob", c.dormant_prob);
  r.get("detection_prob", c.detection_prob);
  r.get("scan_interval_minutes", c.scan_interval_minutes);
  r.finish();
  c.validate();
  return c;
}

nlohmann::json TruthReport::to_json() const {
  nlohmann::json months_j = nlohmann::json::array();
  for (const auto& m : months) {
    nlohmann::json edges, active, dormant;
    for (Channel c : kAllChannels) {
      const std::string name(channel_token(c));
      edges[name] = m.edges[ch(c)];
      active[name] = m.active_edges[ch(c)];
      dormant[name] = m.dormant_edges[ch(c)];
    }
    months_j.push_back({{"month", m.month.str()},
                        {"events", m.events},
                        {"active_users", m.active_users},
                        {"active_dyads", m.active_dyads},
                        {"friend_meetings", m.friend_meetings},
                        {"edges", edges},
                        {"active_edges", active},
                        {"dormant_edges", dormant}});
  }
  nlohmann::json majors = nlohmann::json::object();
  for (std::size_t i = 0; i < users.size(); ++i) majors[users[i]] = major[i];
  return {{"utc_offset_minutes", utc_offset_minutes}, {"majors", majors}, {"months", months_j}};
}

namespace {

using Pair = std::pair<std::uint32_t, std::uint32_t>;  // first < second

struct Location {
  std::string name;
  bool on_campus;
  std::uint32_t ap_lo, ap_hi;
};

struct Presence {
  std::uint32_t location;
  std::int64_t start, end;  // UTC minutes, [start, end)
  std::uint32_t user;
};

struct Slot {
  int weekday;
  int minute_of_day;
};

struct DyadPlan {
  Slot extra_slot;
  Slot in_slot;
};

class Generator {
 public:
  explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(Rng::stream(cfg.seed, StreamTag::Synth)) {
    const auto n = static_cast<std::uint32_t>(cfg.n_users);
    int width = 3;
    for (std::uint32_t v = n; v >= 1000; v /= 10) ++width;
    for (std::uint32_t u = 0; u < n; ++u) {
      std::string id = std::to_string(u);
      users_.push_back("u" + std::string(width - id.size(), '0') + id);
      major_.push_back(static_cast<int>(u % static_cast<std::uint32_t>(cfg.n_majors)));
    }
    by_major_.resize(cfg.n_majors);
    for (std::uint32_t u = 0; u < n; ++u) by_major_[major_[u]].push_back(u);
    plan_schedule();
  }

  SynthOutput run() {
    SynthOutput out;
    out.truth.utc_offset_minutes = cfg_.utc_offset_minutes;
    out.truth.users = users_;
    out.truth.major = major_;
    for (Channel c : kAllChannels) {
      for (const auto& u : users_) out.labels.add_channel_user(c, UserId(u));
    }

    std::array<std::set<Pair>, 4> edges;
    for (int mi = 0; mi < cfg_.months; ++mi) {
      const MonthWindow month{cfg_.start.plus(mi), cfg_.utc_offset_minutes};
      edges = month_edges(edges, mi == 0);
      SynthMonthTruth truth;
      truth.month = month.ym;
      for (Channel c : kAllChannels) {
        truth.edges[ch(c)] = edges[ch(c)].size();
        for (const auto& [a, b] : edges[ch(c)]) {
          out.labels.add_edge(month.ym, c, canonical_dyad(users_[a], users_[b]));
        }
      }
      presences_.clear();
      schedule_month(month);
      plant_meetings(month, edges, truth);
      emit_events(month, edges, truth);
      out.truth.months.push_back(truth);
    }
    out.log = std::move(builder_).build();
    // Overlapping presences can detect a pair twice in the same second; the
    // log keeps one record, and so does the report.
    for (auto& truth : out.truth.months) {
      const MonthWindow w{truth.month, cfg_.utc_offset_minutes};
      truth.events = out.log.events_between(w.begin_ts(), w.end_ts()).size();
    }
    return out;
  }

 private:
  std::uint32_t location(const std::string& name, bool on_campus, std::uint32_t lo,
                         std::uint32_t hi) {
    const auto it = location_ids_.find(name);
    if (it != location_ids_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(locations_.size());
    locations_.push_back({name, on_campus, lo, hi});
    location_ids_.emplace(name, id);
    return id;
  }

  std::uint32_t home_of(std::uint32_t u) { return location("home/" + users_[u], false, 1, 3); }

  void plan_schedule() {
    const auto& s = cfg_.schedule;
    const int hours[] = {9, 11, 13, 15};
    for (int m = 0; m < cfg_.n_majors; ++m) {
      std::vector<Slot> lectures;
      for (int i = 0; i < s.lectures_per_week; ++i) {
        lectures.push_back({static_cast<int>(rng_.below(5)), hours[rng_.below(4)] * 60});
      }
      lecture_slots_.push_back(lectures);
      const auto& members = by_major_[m];
      const std::size_t sections = (members.size() + s.section_size - 1) / s.section_size;
      for (std::size_t k = 0; k < sections; ++k) {
        std::vector<std::uint32_t> group;
        for (std::size_t i = k; i < members.size(); i += sections) group.push_back(members[i]);
        std::vector<Slot> slots;
        for (int i = 0; i < s.sections_per_week; ++i) {
          slots.push_back({static_cast<int>(rng_.below(5)), hours[rng_.below(4)] * 60});
        }
        sections_.push_back({m, static_cast<int>(k), std::move(group), std::move(slots)});
      }
    }
    for (std::size_t u = 0; u < users_.size(); ++u) {
      favorite_venue_.push_back(static_cast<int>(rng_.below(s.venues)));
    }
  }

  Pair random_pair(double homophily) {
    const auto n = static_cast<std::uint64_t>(users_.size());
    for (;;) {
      const auto u = static_cast<std::uint32_t>(rng_.below(n));
      std::uint32_t v;
      if (rng_.bernoulli(homophily)) {
        const auto& pool = by_major_[major_[u]];
        if (pool.size() < 2) continue;
        v = pool[rng_.below(pool.size())];
      } else {
        v = static_cast<std::uint32_t>(rng_.below(n));
      }
      if (u == v) continue;
      return {std::min(u, v), std::max(u, v)};
    }
  }

  std::array<std::set<Pair>, 4> month_edges(const std::array<std::set<Pair>, 4>& prev, bool first) {
    const double pairs = static_cast<double>(users_.size()) * (users_.size() - 1) / 2.0;
    std::array<std::set<Pair>, 4> out;
    std::vector<Channel> done;
    for (Channel c : kGenerationOrder) {
      const auto target = static_cast<std::size_t>(std::llround(cfg_.density[ch(c)] * pairs));
      std::set<Pair> chosen;
      if (!first) {
        std::vector<Pair> kept;
        for (const auto& e : prev[ch(c)]) {
          if (rng_.bernoulli(cfg_.tie_persistence)) kept.push_back(e);
        }
        add_upto(chosen, kept, target);
      }
      std::set<Pair> offered;
      for (Channel p : done) {
        for (const auto& e : out[ch(p)]) {
          if (!chosen.contains(e) && rng_.bernoulli(cfg_.overlap[ch(c)][ch(p)])) offered.insert(e);
        }
      }
      add_upto(chosen, std::vector<Pair>(offered.begin(), offered.end()), target);
      while (chosen.size() < target) chosen.insert(random_pair(cfg_.major_homophily));
      out[ch(c)] = std::move(chosen);
      done.push_back(c);
    }
    return out;
  }

  void add_upto(std::set<Pair>& chosen, std::vector<Pair> items, std::size_t target) {
    rng_.shuffle(std::span<Pair>(items));
    for (const auto& e : items) {
      if (chosen.size() >= target) break;
      chosen.insert(e);
    }
  }

  struct Day {
    std::int64_t start_minute;  // UTC minute of local midnight
    int weekday;
  };

  std::vector<Day> days_of(const MonthWindow& month) const {
    std::vector<Day> days;
    const int n = days_in_month(month.ym.year, month.ym.month);
    const std::int64_t first = days_from_civil(month.ym.year, month.ym.month, 1);
    for (int d = 0; d < n; ++d) {
      days.push_back({month.begin_ts() / 60 + d * 1440, static_cast<int>(floor_mod(first + d + 3, 7))});
    }
    return days;
  }

  void attend(std::uint32_t loc, std::int64_t start, std::int64_t end, std::uint32_t u) {
    if (end > start) presences_.push_back({loc, start, end, u});
  }

  void schedule_month(const MonthWindow& month) {
    const auto& s = cfg_.schedule;
    const auto days = days_of(month);
    const double weeks = static_cast<double>(days.size()) / 7.0;
    for (const auto& day : days) {
      if (day.weekday >= 5) continue;
      for (int m = 0; m < cfg_.n_majors; ++m) {
        const auto loc = location("campus/lecture-" + std::to_string(m), true, 20, 35);
        for (const auto& slot : lecture_slots_[m]) {
          if (slot.weekday != day.weekday) continue;
          const std::int64_t t0 = day.start_minute + slot.minute_of_day;
          for (auto u : by_major_[m]) {
            if (!rng_.bernoulli(s.attendance)) continue;
            attend(loc, t0 + rng_.below(6), t0 + s.block_minutes - rng_.below(6), u);
          }
        }
      }
      for (const auto& sec : sections_) {
        const auto loc = location("campus/section-" + std::to_string(sec.major) + "-" +
                                      std::to_string(sec.index),
                                  true, 8, 15);
        for (const auto& slot : sec.slots) {
          if (slot.weekday != day.weekday) continue;
          const std::int64_t t0 = day.start_minute + slot.minute_of_day;
          for (auto u : sec.members) {
            if (!rng_.bernoulli(s.attendance)) continue;
            attend(loc, t0 + rng_.below(6), t0 + s.block_minutes - rng_.below(6), u);
          }
        }
      }
      for (std::uint32_t u = 0; u < users_.size(); ++u) {
        if (!rng_.bernoulli(s.lunch_prob)) continue;
        const int zone = rng_.bernoulli(0.7) ? major_[u] % s.canteen_zones
                                             : static_cast<int>(rng_.below(s.canteen_zones));
        const auto loc = location("campus/canteen-" + std::to_string(zone), true, 25, 40);
        const std::int64_t t0 = day.start_minute + 11 * 60 + 30 + rng_.below(90);
        attend(loc, t0, t0 + 20 + rng_.below(30), u);
      }
    }
    std::vector<const Day*> nights;
    for (const auto& day : days) {
      if (day.weekday == 4 || day.weekday == 5) nights.push_back(&day);
    }
    for (std::uint32_t u = 0; u < users_.size() && !nights.empty(); ++u) {
      const auto visits = rng_.poisson(s.venue_visits_per_week * weeks);
      for (std::uint64_t v = 0; v < visits; ++v) {
        const Day& day = *nights[rng_.below(nights.size())];
        const int venue = rng_.bernoulli(0.6) ? favorite_venue_[u]
                                              : static_cast<int>(rng_.below(s.venues));
        const auto loc = location("city/venue-" + std::to_string(venue), false, 5, 15);
        const std::int64_t t0 = day.start_minute + 21 * 60 + rng_.below(120);
        attend(loc, t0, t0 + 60 + rng_.below(150), u);
      }
    }
  }

  const DyadPlan& plan_for(const Pair& p) {
    auto it = plans_.find(p);
    if (it != plans_.end()) return it->second;
    DyadPlan plan;
    plan.extra_slot.weekday = static_cast<int>(rng_.below(7));
    plan.extra_slot.minute_of_day = plan.extra_slot.weekday < 5 ? 18 * 60 + static_cast<int>(rng_.below(180))
                                                                : 12 * 60 + static_cast<int>(rng_.below(480));
    plan.in_slot = {static_cast<int>(rng_.below(5)), 10 * 60 + static_cast<int>(rng_.below(300))};
    return plans_.emplace(p, plan).first->second;
  }

  const ChannelProfile* profile_of(const Pair& p, const std::array<std::set<Pair>, 4>& edges) const {
    for (Channel c : kProfilePriority) {
      if (edges[ch(c)].contains(p)) return &cfg_.profiles[ch(c)];
    }
    return nullptr;
  }

  void plant_meetings(const MonthWindow& month, const std::array<std::set<Pair>, 4>& edges,
                      SynthMonthTruth& truth) {
    const auto days = days_of(month);
    const double weeks = static_cast<double>(days.size()) / 7.0;
    const auto& s = cfg_.schedule;

    std::set<Pair> friends;
    for (const auto& e : edges) friends.insert(e.begin(), e.end());
    std::vector<std::vector<std::uint32_t>> adjacency(users_.size());
    for (const auto& [a, b] : friends) {
      adjacency[a].push_back(b);
      adjacency[b].push_back(a);
    }

    dormant_.clear();
    for (const auto& p : friends) {
      const DyadPlan plan = plan_for(p);
      if (rng_.bernoulli(cfg_.dormant_prob)) {
        dormant_.insert(p);
        continue;
      }
      const ChannelProfile& prof = *profile_of(p, edges);
      for (int extra_role = 0; extra_role < 2; ++extra_role) {
        const double rate = extra_role ? prof.extra_role_meeting_rate : prof.in_role_meeting_rate;
        const auto count = rng_.poisson(rate * weeks);
        for (std::uint64_t k = 0; k < count; ++k) {
          const std::int64_t start = meeting_start(days, extra_role, prof,
                                                   extra_role ? plan.extra_slot : plan.in_slot);
          const auto duration = static_cast<std::int64_t>(
              rng_.geometric_at_least_one(prof.mean_duration_minutes));
          std::uint32_t loc;
          if (rng_.bernoulli(prof.off_campus_prob)) {
            if (rng_.bernoulli(prof.home_visit_prob)) {
              loc = home_of(rng_.bernoulli(0.5) ? p.first : p.second);
            } else {
              loc = location("city/cafe-" + std::to_string(rng_.below(s.cafes)), false, 3, 8);
            }
          } else {
            loc = location("campus/lounge-" + std::to_string(rng_.below(s.lounges)), true, 10, 20);
          }
          std::vector<std::uint32_t> group{p.first, p.second};
          const auto joiners = rng_.poisson(prof.mean_group_size);
          for (std::uint64_t j = 0; j < joiners; ++j) {
            std::uint32_t who;
            const auto& near = adjacency[rng_.bernoulli(0.5) ? p.first : p.second];
            if (!near.empty() && rng_.bernoulli(0.7)) {
              who = near[rng_.below(near.size())];
            } else {
              const auto& pool = by_major_[major_[p.first]];
              who = pool[rng_.below(pool.size())];
            }
            if (std::find(group.begin(), group.end(), who) == group.end()) group.push_back(who);
          }
          for (auto u : group) attend(loc, start, start + duration, u);
          ++truth.friend_meetings;
        }
      }
    }
    for (Channel c : kAllChannels) {
      for (const auto& e : edges[ch(c)]) truth.dormant_edges[ch(c)] += dormant_.contains(e) ? 1 : 0;
    }
  }

  std::int64_t meeting_start(const std::vector<Day>& days, bool extra_role,
                             const ChannelProfile& prof, const Slot& slot) {
    if (!rng_.bernoulli(prof.schedule_jitter)) {
      std::vector<const Day*> matching;
      for (const auto& d : days) {
        if (d.weekday == slot.weekday) matching.push_back(&d);
      }
      const Day& d = *matching[rng_.below(matching.size())];
      return d.start_minute + slot.minute_of_day + static_cast<std::int64_t>(rng_.below(31)) - 15;
    }
    if (extra_role) {
      const Day& d = days[rng_.below(days.size())];
      if (d.weekday < 5) return d.start_minute + 17 * 60 + 30 + rng_.below(270);
      return d.start_minute + 10 * 60 + rng_.below(660);
    }
    std::vector<const Day*> weekdays;
    for (const auto& d : days) {
      if (d.weekday < 5) weekdays.push_back(&d);
    }
    const Day& d = *weekdays[rng_.below(weekdays.size())];
    return d.start_minute + 9 * 60 + rng_.below(360);
  }

  // Every scan tick inside a presence detects each co-present pair with
  // detection_prob; the event lands at a random second of the tick minute.
  void emit_events(const MonthWindow& month, const std::array<std::set<Pair>, 4>& edges,
                   SynthMonthTruth& truth) {
    std::sort(presences_.begin(), presences_.end(), [](const Presence& x, const Presence& y) {
      return std::tie(x.location, x.start, x.end, x.user) < std::tie(y.location, y.start, y.end, y.user);
    });
    const std::int64_t step = cfg_.scan_interval_minutes;
    const std::int64_t month_begin = month.begin_ts() / 60, month_end = month.end_ts() / 60;
    std::set<Pair> active_dyads;
    std::set<std::uint32_t> active_users;

    std::vector<std::pair<std::int64_t, std::uint32_t>> ticks;
    for (std::size_t i = 0; i < presences_.size();) {
      std::size_t j = i;
      ticks.clear();
      while (j < presences_.size() && presences_[j].location == presences_[i].location) {
        const auto& p = presences_[j];
        const std::int64_t lo = std::max(p.start, month_begin), hi = std::min(p.end, month_end);
        for (std::int64_t t = floor_div(lo + step - 1, step) * step; t < hi; t += step) {
          ticks.emplace_back(t, p.user);
        }
        ++j;
      }
      std::sort(ticks.begin(), ticks.end());
      ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
      const Location& loc = locations_[presences_[i].location];
      for (std::size_t a = 0; a < ticks.size();) {
        std::size_t b = a;
        while (b < ticks.size() && ticks[b].first == ticks[a].first) ++b;
        if (b - a >= 2) {
          const auto ap = static_cast<std::uint32_t>(loc.ap_lo + rng_.below(loc.ap_hi - loc.ap_lo + 1));
          for (std::size_t x = a; x < b; ++x) {
            for (std::size_t y = x + 1; y < b; ++y) {
              if (!rng_.bernoulli(cfg_.detection_prob)) continue;
              const Timestamp ts = ticks[a].first * 60 + static_cast<Timestamp>(rng_.below(60));
              const auto u = ticks[x].second, v = ticks[y].second;
              builder_.add(ts, users_[u], users_[v], loc.name, loc.on_campus, ap);
              active_dyads.insert({std::min(u, v), std::max(u, v)});
              active_users.insert(u);
              active_users.insert(v);
            }
          }
        }
        a = b;
      }
      i = j;
    }
    truth.active_dyads = active_dyads.size();
    truth.active_users = active_users.size();
    for (Channel c : kAllChannels) {
      for (const auto& e : edges[ch(c)]) truth.active_edges[ch(c)] += active_dyads.contains(e) ? 1 : 0;
    }
  }

  struct Section {
    int major;
    int index;
    std::vector<std::uint32_t> members;
    std::vector<Slot> slots;
  };

  const SynthConfig& cfg_;
  Rng rng_;
  std::vector<std::string> users_;
  std::vector<int> major_;
  std::vector<std::vector<std::uint32_t>> by_major_;
  std::vector<std::vector<Slot>> lecture_slots_;
  std::vector<Section> sections_;
  std::vector<int> favorite_venue_;
  std::vector<Location> locations_;
  std::map<std::string, std::uint32_t> location_ids_;
  std::map<Pair, DyadPlan> plans_;
  std::set<Pair> dormant_;
  std::vector<Presence> presences_;
  EventLogBuilder builder_;
};

}  // namespace

SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  return Generator(cfg).run();
}

}  // namespace tieinfer
