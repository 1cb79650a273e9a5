#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tieinfer/context.hpp"
#include "tieinfer/errors.hpp"
#include "tieinfer/rng.hpp"

using namespace tieinfer;

namespace {

struct Ev {
  Timestamp ts;
  std::string a, b, loc;
  bool campus;
  std::uint32_t ap;
};

EventLog make_log(const std::vector<Ev>& events) {
  EventLogBuilder b;
  for (const auto& e : events) b.add(e.ts, e.a, e.b, e.loc, e.campus, e.ap);
  return std::move(b).build();
}

DyadIndex idx(const EventLog& log, const std::string& a, const std::string& b) {
  return {*log.users().find(a), *log.users().find(b)};
}

std::vector<MinuteIndex> grid_minutes(const MinuteGrid& g, std::size_t row) {
  std::vector<MinuteIndex> out;
  for (const auto& c : g.minutes(row)) out.push_back(c.minute);
  return out;
}

}  // namespace

TEST(MinuteGrid, FloorsToMinutes) {
  const EventLog log = make_log({{60, "a", "b", "", false, 0},
                                 {90, "a", "b", "", false, 0},
                                 {119, "a", "b", "", false, 0}});
  const MinuteGrid g = build_minute_grid(log, infer_homes(log), {});
  ASSERT_EQ(g.dyad_count(), 1u);
  EXPECT_EQ(grid_minutes(g, 0), (std::vector<MinuteIndex>{1}));
}

TEST(MinuteGrid, GroupSizeCountsOthersWithinWindow) {
  const EventLog log = make_log({{6000, "a", "b", "", false, 0},
                                 {6000 + 300, "a", "c", "", false, 0},
                                 {6000 + 360, "b", "d", "", false, 0}});
  const MinuteGrid g = build_minute_grid(log, infer_homes(log), {});
  const auto row = g.find(idx(log, "a", "b"));
  ASSERT_TRUE(row);
  // c is 5 minutes away (inside), d is 6 minutes away (outside).
  EXPECT_EQ(g.minutes(*row)[0].group_size, 1u);
  const auto ac = g.find(idx(log, "a", "c"));
  // The a-c minute sees b through a; d only met b.
  EXPECT_EQ(g.minutes(*ac)[0].group_size, 1u);
}

TEST(MinuteGrid, LoneDyadHasZeroGroupSize) {
  std::vector<Ev> ev;
  for (int i = 0; i < 50; ++i) ev.push_back({i * 60, "a", "b", "L", true, 2});
  const EventLog log = make_log(ev);
  const MinuteGrid g = build_minute_grid(log, infer_homes(log), {});
  ASSERT_EQ(g.total_minutes(), 50u);
  for (const auto& c : g.minutes(0)) EXPECT_EQ(c.group_size, 0u);
}

TEST(MinuteGrid, BestEventSuppliesContext) {
  const EventLog log = make_log({{60, "a", "b", "L2", true, 3},
                                 {70, "a", "b", "L1", false, 9},
                                 {80, "a", "b", "L0", true, 9}});
  const MinuteGrid g = build_minute_grid(log, infer_homes(log), {});
  const auto& c = g.minutes(0)[0];
  EXPECT_EQ(c.ap_count, 9u);
  EXPECT_EQ(log.location(c.location), "L0");
  EXPECT_TRUE(c.on_campus);
}

TEST(MinuteGrid, RangeRestrictsEvents) {
  const EventLog log = make_log({{0, "a", "b", "", false, 0},
                                 {600, "a", "b", "", false, 0},
                                 {1200, "a", "c", "", false, 0}});
  const MinuteGrid g = build_minute_grid(log, infer_homes(log), {}, std::pair<Timestamp, Timestamp>{600, 1200});
  ASSERT_EQ(g.dyad_count(), 1u);
  EXPECT_EQ(grid_minutes(g, 0), (std::vector<MinuteIndex>{10}));
}

TEST(InferHomes, ArgmaxAndTies) {
  std::vector<Ev> ev;
  for (int i = 0; i < 10; ++i) ev.push_back({i, "u1", "x" + std::to_string(i), "L1", false, 1});
  for (int i = 0; i < 3; ++i) ev.push_back({100 + i, "u1", "y" + std::to_string(i), "L2", false, 1});
  for (int i = 0; i < 5; ++i) ev.push_back({200 + i, "u2", "z" + std::to_string(i), "M2", false, 1});
  for (int i = 0; i < 5; ++i) ev.push_back({300 + i, "u2", "w" + std::to_string(i), "M1", false, 1});
  ev.push_back({400, "u3", "u4", "", false, 0});
  const EventLog log = make_log(ev);
  const HomeMap homes = infer_homes(log);
  EXPECT_EQ(log.location(*homes.home_of(*log.users().find("u1"))), "L1");
  EXPECT_EQ(log.location(*homes.home_of(*log.users().find("u2"))), "M1");
  EXPECT_FALSE(homes.home_of(*log.users().find("u3")));
}

TEST(InferHomes, CampusObservationsIgnoredByDefault) {
  std::vector<Ev> ev;
  for (int i = 0; i < 10; ++i) ev.push_back({i, "u1", "x", "Lecture", true, 5});
  ev.push_back({50, "u1", "x", "Flat", false, 1});
  const EventLog log = make_log(ev);
  EXPECT_EQ(log.location(*infer_homes(log).home_of(*log.users().find("u1"))), "Flat");
  EXPECT_EQ(log.location(*infer_homes(log, {false}).home_of(*log.users().find("u1"))), "Lecture");
}

TEST(MinuteGrid, AtHomeMeansEitherMembersHome) {
  std::vector<Ev> ev;
  for (int i = 0; i < 5; ++i) ev.push_back({i * 60, "a", "z", "HomeA", false, 1});
  for (int i = 0; i < 5; ++i) ev.push_back({i * 60, "b", "y", "HomeB", false, 1});
  ev.push_back({1000 * 60, "a", "b", "HomeA", false, 1});
  ev.push_back({1001 * 60, "a", "b", "Cafe", false, 1});
  const EventLog log = make_log(ev);
  const HomeMap homes = infer_homes(log);
  const MinuteGrid g = build_minute_grid(log, homes, {});
  const auto row = *g.find(idx(log, "a", "b"));
  EXPECT_TRUE(g.minutes(row)[0].at_home);
  EXPECT_FALSE(g.minutes(row)[1].at_home);
}

TEST(SegmentMinutes, SpecCases) {
  const MinuteIndex one[] = {10, 11, 12};
  auto runs = segment_minutes(one, 10);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].start, 10);
  EXPECT_EQ(runs[0].end, 12);
  EXPECT_EQ(runs[0].minutes, 3u);

  const MinuteIndex two[] = {10, 11, 40, 41};
  runs = segment_minutes(two, 10);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[1].start - runs[0].end, 29);

  const MinuteIndex edge[] = {10, 20};
  EXPECT_EQ(segment_minutes(edge, 10).size(), 1u);
  const MinuteIndex past[] = {10, 21};
  EXPECT_EQ(segment_minutes(past, 10).size(), 2u);
  EXPECT_TRUE(segment_minutes({}, 10).empty());
}

TEST(SegmentMeetings, RejectsBadTolerance) {
  const EventLog log = make_log({{0, "a", "b", "", false, 0}});
  const MinuteGrid g = build_minute_grid(log, infer_homes(log), {});
  EXPECT_THROW(segment_meetings(g, 0), ConfigError);
}

TEST(SegmentMeetings, DominantLocationAndCsv) {
  const EventLog log = make_log({{0, "a", "b", "L2", true, 1},
                                 {60, "a", "b", "L1", true, 1},
                                 {120, "a", "b", "L1", true, 1}});
  const MinuteGrid g = build_minute_grid(log, infer_homes(log), {});
  const MeetingTable t = segment_meetings(g, 10);
  ASSERT_EQ(t.all().size(), 1u);
  EXPECT_EQ(log.location(t.all()[0].dominant_location), "L1");
  std::ostringstream out;
  write_meetings_csv(out, log, t);
  EXPECT_EQ(out.str(), "user_a,user_b,start_minute,end_minute,minutes,location\na,b,0,2,3,L1\n");
}

class ContextProperty : public ::testing::TestWithParam<int> {};

TEST_P(ContextProperty, GridInvariants) {
  Rng rng(static_cast<std::uint64_t>(GetParam()));
  std::vector<Ev> ev;
  const int users = 10;
  for (int i = 0; i < 3000; ++i) {
    const auto u = rng.below(users), v = rng.below(users);
    if (u == v) continue;
    const bool located = rng.bernoulli(0.9);
    ev.push_back({static_cast<Timestamp>(rng.below(600 * 60)), "u" + std::to_string(u),
                  "u" + std::to_string(v), located ? "L" + std::to_string(rng.below(6)) : "",
                  rng.bernoulli(0.5), located ? static_cast<std::uint32_t>(1 + rng.below(9)) : 0});
  }
  const EventLog log = make_log(ev);
  const HomeMap homes = infer_homes(log);
  const MinuteGrid g = build_minute_grid(log, homes, {});
  const int tol = 1 + static_cast<int>(rng.below(15));
  const MeetingTable t = segment_meetings(g, tol);

  // Partner minutes per user for the group-size recomputation.
  std::vector<std::vector<std::pair<UserIndex, MinuteIndex>>> partners(log.users().size());
  for (const auto& e : log.events()) {
    partners[e.dyad.a].push_back({e.dyad.b, minute_of(e.ts)});
    partners[e.dyad.b].push_back({e.dyad.a, minute_of(e.ts)});
  }

  std::size_t total = 0;
  for (std::size_t r = 0; r < g.dyad_count(); ++r) {
    const auto d = g.dyad(r);
    const auto cells = g.minutes(r);
    total += cells.size();
    std::uint64_t meeting_minutes = 0;
    for (const auto& m : t.for_row(r)) {
      EXPECT_LE(m.start_minute, m.end_minute);
      EXPECT_GE(m.minutes, 1u);
      meeting_minutes += m.minutes;
    }
    EXPECT_EQ(meeting_minutes, cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) EXPECT_LT(cells[i - 1].minute, cells[i].minute);
      const auto& c = cells[i];
      EXPECT_EQ(c.role, role_of(c.minute * 60, RoleConfig{}));
      if (c.at_home) {
        EXPECT_TRUE(c.location == homes.raw(d.a) || c.location == homes.raw(d.b));
      }
      // Group size is the same union whichever member we start from.
      std::set<UserIndex> from_a, from_b;
      for (UserIndex who : {d.a, d.b}) {
        for (auto [p, pm] : partners[who]) {
          if (p == d.a || p == d.b || std::llabs(pm - c.minute) > 5) continue;
          from_a.insert(p);
        }
      }
      for (UserIndex who : {d.b, d.a}) {
        for (auto [p, pm] : partners[who]) {
          if (p == d.a || p == d.b || std::llabs(pm - c.minute) > 5) continue;
          from_b.insert(p);
        }
      }
      EXPECT_EQ(from_a, from_b);
      EXPECT_EQ(c.group_size, from_a.size());
    }
  }
  EXPECT_EQ(total, g.total_minutes());
}

INSTANTIATE_TEST_SUITE_P(Seeds, ContextProperty, ::testing::Values(1, 2, 3, 4));
