#pragma once

// Minute-resolution co-presence with social, spatial and temporal context.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tieinfer/core.hpp"
#include "tieinfer/ingest.hpp"

namespace tieinfer {

struct HomeConfig {
  // Campus access points can never be a home router, so by default only
  // off-campus observations are candidates.
  bool off_campus_only = true;
};

// Per-user inferred home location (the most observed location).
class HomeMap {
 public:
  HomeMap() = default;
  explicit HomeMap(std::vector<LocationIndex> homes) : homes_(std::move(homes)) {}

  std::optional<LocationIndex> home_of(UserIndex u) const {
    if (u >= homes_.size() || homes_[u] == kNoLocation) return std::nullopt;
    return homes_[u];
  }
  LocationIndex raw(UserIndex u) const { return u < homes_.size() ? homes_[u] : kNoLocation; }
  std::size_t size() const;  // users with a home

 private:
  std::vector<LocationIndex> homes_;
};

// Users without any candidate observation are absent; ties go to the
// lexicographically smaller location id.
HomeMap infer_homes(const EventLog& log, const HomeConfig& cfg = {});

struct MinuteCell {
  MinuteIndex minute = 0;
  std::uint32_t group_size = 0;  // distinct other people met by either member within the window
  std::uint32_t ap_count = 0;
  LocationIndex location = kNoLocation;
  bool on_campus = false;
  bool at_home = false;
  Role role = Role::ExtraRole;
};

struct GridConfig {
  RoleConfig roles;
  // Partners met within this many seconds of a co-presence minute count
  // toward its group size. Applied at minute resolution: |m' - m| <= 300/60.
  int group_window_seconds = 300;
};

// Co-presence minutes grouped by dyad (CSR layout). Dyads ascend in
// lexicographic order; minutes ascend within a dyad.
class MinuteGrid {
 public:
  std::size_t dyad_count() const noexcept { return dyads_.size(); }
  std::size_t total_minutes() const noexcept { return cells_.size(); }
  std::size_t user_count() const noexcept { return user_count_; }
  DyadIndex dyad(std::size_t row) const { return dyads_[row]; }
  std::span<const DyadIndex> dyads() const noexcept { return dyads_; }
  std::span<const MinuteCell> minutes(std::size_t row) const {
    return std::span<const MinuteCell>(cells_).subspan(offsets_[row],
                                                       offsets_[row + 1] - offsets_[row]);
  }
  std::optional<std::size_t> find(DyadIndex d) const;

 private:
  friend MinuteGrid build_minute_grid(const EventLog&, const HomeMap&, const GridConfig&,
                                      std::optional<std::pair<Timestamp, Timestamp>>);
  std::size_t user_count_ = 0;
  std::vector<DyadIndex> dyads_;
  std::vector<std::size_t> offsets_{0};
  std::vector<MinuteCell> cells_;
};

// Builds the grid from events with range.first <= ts < range.second (all
// events when no range is given). Within one minute the event with the largest
// ap_count supplies location context (ties: smaller location id).
MinuteGrid build_minute_grid(const EventLog& log, const HomeMap& homes, const GridConfig& cfg,
                             std::optional<std::pair<Timestamp, Timestamp>> range = std::nullopt);

struct MinuteRun {
  MinuteIndex start = 0;
  MinuteIndex end = 0;  // inclusive
  std::uint32_t minutes = 0;
};

// Maximal runs of sorted, unique minutes whose consecutive members differ by
// at most gap_tolerance.
std::vector<MinuteRun> segment_minutes(std::span<const MinuteIndex> minutes, int gap_tolerance);

struct Meeting {
  DyadIndex dyad;
  MinuteIndex start_minute = 0;
  MinuteIndex end_minute = 0;
  std::uint32_t minutes = 0;
  LocationIndex dominant_location = kNoLocation;
};

// Meetings grouped per grid row (same row order as the grid).
class MeetingTable {
 public:
  std::span<const Meeting> for_row(std::size_t row) const {
    return std::span<const Meeting>(meetings_).subspan(offsets_[row],
                                                       offsets_[row + 1] - offsets_[row]);
  }
  std::size_t rows() const noexcept { return offsets_.size() - 1; }
  std::span<const Meeting> all() const noexcept { return meetings_; }

 private:
  friend MeetingTable segment_meetings(const MinuteGrid&, int);
  std::vector<Meeting> meetings_;
  std::vector<std::size_t> offsets_{0};
};

// Throws ConfigError when gap_tolerance < 1.
MeetingTable segment_meetings(const MinuteGrid& grid, int gap_tolerance);

void write_meetings_csv(std::ostream& out, const EventLog& log, const MeetingTable& meetings);

}  // namespace tieinfer
