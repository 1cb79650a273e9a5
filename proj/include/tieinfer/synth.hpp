#pragma once

// Synthetic campus: class schedules, lunches and nightlife create co-presence
// among strangers; friend dyads additionally meet according to the behavior
// profile of their strongest channel. Output is a pure function of the config.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tieinfer/core.hpp"
#include "tieinfer/ingest.hpp"

namespace tieinfer {

struct ChannelProfile {
  double extra_role_meeting_rate = 0.0;  // meetings per week, evenings and weekends
  double in_role_meeting_rate = 0.0;     // meetings per week, weekday working hours
  double mean_group_size = 0.0;          // mean number of people joining the pair
  double off_campus_prob = 0.0;
  double home_visit_prob = 0.0;          // share of off-campus meetings held at a home
  double schedule_jitter = 1.0;          // 0: always the dyad's fixed weekly slot; 1: any time
  double mean_duration_minutes = 60.0;
};

struct ScheduleSpec {
  int lectures_per_week = 2;  // whole-major sessions
  int sections_per_week = 2;  // per section of section_size students
  int section_size = 12;
  int block_minutes = 120;
  double attendance = 0.85;
  double lunch_prob = 0.6;  // per student per weekday
  int canteen_zones = 3;
  double venue_visits_per_week = 0.8;
  int venues = 6;
  int cafes = 10;
  int lounges = 8;
};

struct SynthConfig {
  int n_users = 200;
  int n_majors = 4;
  int months = 3;
  std::uint64_t seed = 42;
  YearMonth start{2013, 9};
  int utc_offset_minutes = 60;
  ScheduleSpec schedule;

  // Indexed by Channel.
  std::array<double, 4> density{0.06, 0.02, 0.02, 0.02};
  std::array<ChannelProfile, 4> profiles;
  // overlap[i][j]: probability that an edge already present in channel j is
  // also an edge of channel i. Symmetric, unit diagonal.
  std::array<std::array<double, 4>, 4> overlap{};

  double major_homophily = 0.5;  // share of new edges drawn within a major
  double tie_persistence = 0.9;  // monthly survival of an edge; 0 re-samples every month
  double dormant_prob = 0.1;     // edge labeled but with no planted meetings that month
  double detection_prob = 0.85;  // per pair per scan
  int scan_interval_minutes = 5;

  SynthConfig();  // defaults

  // Same world without planted friend behavior: profiles zeroed and edges
  // placed without regard to major.
  SynthConfig chance() const;

  // Throws ConfigError.
  void validate() const;

  nlohmann::json to_json() const;
  // Fields absent from `j` keep their defaults. Throws ConfigError.
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthMonthTruth {
  YearMonth month;
  std::size_t events = 0;
  std::size_t active_users = 0;
  std::size_t active_dyads = 0;
  std::size_t friend_meetings = 0;
  std::array<std::size_t, 4> edges{};
  std::array<std::size_t, 4> active_edges{};  // edges with co-presence that month
  std::array<std::size_t, 4> dormant_edges{};
};

struct TruthReport {
  int utc_offset_minutes = 0;
  std::vector<std::string> users;
  std::vector<int> major;  // per user
  std::vector<SynthMonthTruth> months;

  nlohmann::json to_json() const;
};

struct SynthOutput {
  EventLog log;
  LabelSet labels;
  TruthReport truth;
};

SynthOutput generate(const SynthConfig& cfg);

}  // namespace tieinfer
