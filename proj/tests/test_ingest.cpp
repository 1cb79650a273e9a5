#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "tieinfer/errors.hpp"
#include "tieinfer/ingest.hpp"
#include "tieinfer/rng.hpp"
#include "tieinfer/synth.hpp"

using namespace tieinfer;

namespace {

EventLog parse_csv(const std::string& text, bool strict = true) {
  std::istringstream in(text);
  return parse_events(in, EventFormat::Csv, {strict, 20}).log;
}

std::string to_csv(const EventLog& log) {
  std::ostringstream out;
  write_events_csv(out, log);
  return out.str();
}

}  // namespace

TEST(ParseEvents, MapsFields) {
  const EventLog log = parse_csv("1394884800,u3,u7,ap_hash_9,true,12\n");
  ASSERT_EQ(log.size(), 1u);
  const auto& e = log.events()[0];
  EXPECT_EQ(e.ts, 1394884800);
  EXPECT_EQ(log.dyad(e.dyad), canonical_dyad("u3", "u7"));
  EXPECT_EQ(log.location(e.location), "ap_hash_9");
  EXPECT_TRUE(e.on_campus);
  EXPECT_EQ(e.ap_count, 12u);
}

TEST(ParseEvents, HeaderColumnsMayBeReordered) {
  const EventLog log = parse_csv(
      "ap_count,on_campus,location_id,user_b,user_a,ts\n"
      "4,false,home1,u1,u2,100\n");
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log.events()[0].ts, 100);
  EXPECT_EQ(log.events()[0].ap_count, 4u);
  EXPECT_EQ(log.user(log.events()[0].dyad.a), "u1");
}

TEST(ParseEvents, SymmetricDuplicatesCollapse) {
  const EventLog log = parse_csv(
      "ts,user_a,user_b,location_id,on_campus,ap_count\n"
      "100,u7,u3,L1,true,2\n"
      "100,u3,u7,L2,true,5\n");
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log.events()[0].ap_count, 5u);
  EXPECT_EQ(log.location(log.events()[0].location), "L2");
}

TEST(ParseEvents, DuplicateTieBreaksOnLocationThenCampus) {
  const EventLog log = parse_csv(
      "100,a,b,L2,true,3\n"
      "100,a,b,L1,false,3\n"
      "200,a,b,L1,false,3\n"
      "200,a,b,L1,true,3\n");
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log.location(log.events()[0].location), "L1");
  EXPECT_FALSE(log.events()[0].on_campus);
  EXPECT_TRUE(log.events()[1].on_campus);
}

TEST(ParseEvents, StrictRejectsMalformedWithLineNumbers) {
  std::istringstream in("notanumber,u1,u2,x,true,3\n");
  try {
    parse_events(in, EventFormat::Csv);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    ASSERT_EQ(e.lines().size(), 1u);
    EXPECT_EQ(e.lines()[0], 1u);
  }
}

TEST(ParseEvents, LenientDropsAndCounts) {
  std::istringstream in(
      "ts,user_a,user_b,location_id,on_campus,ap_count\n"
      "100,u1,u2,x,true,3\n"
      "101,u1,u1,x,true,3\n"
      "102,u1,u2,x,maybe,3\n"
      "103,u1,u2,x,true,0\n"
      "104,u1,u2,,false,0\n"
      "105,u1,u2\n");
  const auto parsed = parse_events(in, EventFormat::Csv, {false, 20});
  EXPECT_EQ(parsed.log.size(), 2u);
  EXPECT_EQ(parsed.malformed, 4u);
  EXPECT_EQ(parsed.malformed_lines, (std::vector<std::size_t>{3, 4, 5, 7}));
}

TEST(ParseEvents, JsonlMatchesCsv) {
  std::istringstream in(
      "{\"ts\":100,\"user_a\":\"u2\",\"user_b\":\"u1\",\"location_id\":\"L\",\"on_campus\":true,"
      "\"ap_count\":3}\n"
      "{\"ts\":50,\"user_a\":\"u1\",\"user_b\":\"u3\",\"location_id\":null,\"on_campus\":false,"
      "\"ap_count\":0}\n");
  const EventLog j = parse_events(in, EventFormat::Jsonl).log;
  const EventLog c = parse_csv("100,u1,u2,L,true,3\n50,u1,u3,,false,0\n");
  EXPECT_EQ(to_csv(j), to_csv(c));
  std::istringstream bad("{\"ts\":1}\n");
  EXPECT_THROW(parse_events(bad, EventFormat::Jsonl), ParseError);
}

TEST(ParseEvents, UnreadableFileIsIoError) {
  EXPECT_THROW(parse_events_file("/nonexistent/events.csv", EventFormat::Csv), IoError);
}

TEST(EventLog, SortedAndSpans) {
  const EventLog log = parse_csv("300,a,b,,false,0\n100,b,c,,false,0\n200,a,c,,false,0\n");
  ASSERT_EQ(log.size(), 3u);
  for (std::size_t i = 1; i < log.size(); ++i) {
    EXPECT_LE(log.events()[i - 1].ts, log.events()[i].ts);
  }
  EXPECT_EQ(log.time_span()->first, 100);
  EXPECT_EQ(log.time_span()->second, 300);
  EXPECT_EQ(log.events_between(150, 300).size(), 1u);
  EXPECT_EQ(log.users().size(), 3u);
  EXPECT_FALSE(parse_csv("").time_span());
}

class IngestProperty : public ::testing::TestWithParam<int> {};

TEST_P(IngestProperty, RoundTripAndShuffleInvariance) {
  Rng rng(static_cast<std::uint64_t>(GetParam()));
  std::vector<std::string> lines;
  for (int i = 0; i < 400; ++i) {
    const auto u = rng.below(12), v = rng.below(12);
    if (u == v) continue;
    const bool located = rng.bernoulli(0.8);
    std::string line = std::to_string(1000 + rng.below(300)) + ",u" + std::to_string(u) + ",u" +
                       std::to_string(v) + "," +
                       (located ? "L" + std::to_string(rng.below(5)) : std::string()) + "," +
                       (rng.bernoulli(0.5) ? "true" : "false") + "," +
                       std::to_string(located ? 1 + rng.below(9) : 0);
    lines.push_back(line);
  }
  auto join = [](const std::vector<std::string>& ls) {
    std::string s;
    for (const auto& l : ls) s += l + "\n";
    return s;
  };
  const EventLog base = parse_csv(join(lines));
  const std::string canonical = to_csv(base);
  EXPECT_EQ(to_csv(parse_csv(canonical)), canonical);
  for (int t = 0; t < 3; ++t) {
    rng.shuffle(std::span<std::string>(lines));
    EXPECT_EQ(to_csv(parse_csv(join(lines))), canonical);
  }
  // No duplicate (ts, dyad) pairs survive.
  for (std::size_t i = 1; i < base.size(); ++i) {
    const auto& p = base.events()[i - 1];
    const auto& q = base.events()[i];
    EXPECT_FALSE(p.ts == q.ts && p.dyad == q.dyad);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, IngestProperty, ::testing::Values(1, 2, 3, 4, 5));

TEST(GroundTruth, ParsesEdgesAndRoster) {
  std::istringstream labels(
      "year,month,channel,user_a,user_b\n"
      "2014,3,call,u7,u3\n"
      "2014,3,call,u3,u7\n"
      "2014,4,sms,u1,u2\n");
  std::istringstream roster("channel,user\ncall,u9\n");
  const LabelSet ls = parse_ground_truth(labels, &roster);
  const auto& e = ls.edges({2014, 3}, Channel::Call);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(*e.begin(), canonical_dyad("u3", "u7"));
  EXPECT_TRUE(ls.has_edge({2014, 4}, Channel::Sms, canonical_dyad("u2", "u1")));
  EXPECT_EQ(ls.channel_users(Channel::Call).size(), 3u);
  EXPECT_EQ(ls.months(), (std::vector<YearMonth>{{2014, 3}, {2014, 4}}));
  EXPECT_EQ(ls.edge_count(), 2u);
  EXPECT_TRUE(ls.edges({2014, 5}, Channel::Call).empty());
}

TEST(GroundTruth, RejectsUnknownChannel) {
  std::istringstream labels("2014,3,fax,u1,u2\n");
  EXPECT_THROW(parse_ground_truth(labels), ParseError);
  std::istringstream self("2014,3,call,u1,u1\n");
  EXPECT_THROW(parse_ground_truth(self), Error);
  std::istringstream month("2014,13,call,u1,u2\n");
  EXPECT_THROW(parse_ground_truth(month), ParseError);
}

TEST(GroundTruth, RoundTrips) {
  std::istringstream labels("2014,3,call,u7,u3\n2013,12,fb_friend,a,b\n");
  std::istringstream roster("sms,z\n");
  const LabelSet ls = parse_ground_truth(labels, &roster);
  std::ostringstream lo, ro;
  write_labels_csv(lo, ls);
  write_roster_csv(ro, ls);
  std::istringstream li(lo.str()), ri(ro.str());
  EXPECT_EQ(parse_ground_truth(li, &ri), ls);
}

TEST(ValidateLog, ReportsMissingUsersAndZeroMonths) {
  const EventLog log = parse_csv("1394884800,u1,u2,,false,0\n");
  std::istringstream labels("2014,3,call,u1,u99\n2014,4,call,u1,u2\n");
  const LabelSet ls = parse_ground_truth(labels);
  const auto report = validate_log(log, ls, 60);
  EXPECT_EQ(report.missing_users, (std::set<UserId>{UserId("u99")}));
  EXPECT_EQ(report.zero_event_months, (std::vector<YearMonth>{{2014, 4}}));

  const auto empty = validate_log(EventLog(), ls, 60);
  EXPECT_EQ(empty.zero_event_months.size(), 2u);
  EXPECT_EQ(empty.missing_users.size(), 3u);
}

TEST(ValidateLog, MatchesGeneratorBookkeeping) {
  SynthConfig cfg;
  cfg.months = 1;
  const auto out = generate(cfg);
  const auto report = validate_log(out.log, out.labels, cfg.utc_offset_minutes);
  ASSERT_EQ(out.truth.months.size(), 1u);
  const auto& truth = out.truth.months[0];
  const MonthSummary* summary = nullptr;
  for (const auto& m : report.months) {
    if (m.month == truth.month) summary = &m;
  }
  ASSERT_NE(summary, nullptr);
  EXPECT_EQ(summary->events, truth.events);
  EXPECT_EQ(summary->active_users, truth.active_users);
  EXPECT_EQ(summary->active_dyads, truth.active_dyads);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(summary->edges[c], truth.edges[c]) << c;
    EXPECT_EQ(summary->active_edges[c], truth.active_edges[c]) << c;
  }
  EXPECT_TRUE(report.missing_users.empty());
}
