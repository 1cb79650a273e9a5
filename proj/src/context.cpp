#include "tieinfer/context.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>

#include "tieinfer/errors.hpp"
#include "tieinfer/simd/kernels.hpp"

namespace tieinfer {

std::size_t HomeMap::size() const {
  return static_cast<std::size_t>(
      std::count_if(homes_.begin(), homes_.end(), [](LocationIndex l) { return l != kNoLocation; }));
}

HomeMap infer_homes(const EventLog& log, const HomeConfig& cfg) {
  // (user, location) observation keys; sorting groups them for counting.
  std::vector<std::uint64_t> keys;
  keys.reserve(log.size() * 2);
  for (const auto& e : log.events()) {
    if (e.location == kNoLocation) continue;
    if (cfg.off_campus_only && e.on_campus) continue;
    keys.push_back((static_cast<std::uint64_t>(e.dyad.a) << 32) | e.location);
    keys.push_back((static_cast<std::uint64_t>(e.dyad.b) << 32) | e.location);
  }
  std::sort(keys.begin(), keys.end());

  std::vector<LocationIndex> homes(log.users().size(), kNoLocation);
  std::vector<std::size_t> best(log.users().size(), 0);
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    const auto user = static_cast<UserIndex>(keys[i] >> 32);
    const auto loc = static_cast<LocationIndex>(keys[i] & 0xffffffffu);
    // Locations ascend within a user, so strict '>' keeps the smaller id on ties.
    if (j - i > best[user]) {
      best[user] = j - i;
      homes[user] = loc;
    }
    i = j;
  }
  return HomeMap(std::move(homes));
}

std::optional<std::size_t> MinuteGrid::find(DyadIndex d) const {
  auto it = std::lower_bound(dyads_.begin(), dyads_.end(), d);
  if (it == dyads_.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dyads_.begin());
}

namespace {

// Occurrence counts of each dyad inside the sliding group window.
class PairCounter {
 public:
  explicit PairCounter(std::size_t users) : users_(users) {
    if (users <= kDenseLimit) dense_.assign(users * users, 0);
  }

  // Returns the count after incrementing.
  std::uint32_t increment(DyadIndex d) {
    if (!dense_.empty()) return ++dense_[d.a * users_ + d.b];
    return ++sparse_[key(d)];
  }

  std::uint32_t decrement(DyadIndex d) {
    if (!dense_.empty()) return --dense_[d.a * users_ + d.b];
    auto it = sparse_.find(key(d));
    const std::uint32_t left = --it->second;
    if (left == 0) sparse_.erase(it);
    return left;
  }

 private:
  static constexpr std::size_t kDenseLimit = 16384;
  static std::uint64_t key(DyadIndex d) { return (static_cast<std::uint64_t>(d.a) << 32) | d.b; }

  std::size_t users_;
  std::vector<std::uint8_t> dense_;  // a window holds at most 2*5+1 minutes per dyad
  std::unordered_map<std::uint64_t, std::uint32_t> sparse_;
};

void assign_group_sizes(std::vector<MinuteCell>& cells, const std::vector<DyadIndex>& cell_dyads,
                        std::size_t users, MinuteIndex window) {
  if (cells.empty()) return;
  // Cell indices ordered by minute.
  std::vector<std::uint32_t> order(cells.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return cells[x].minute < cells[y].minute;
  });

  const std::size_t words = (users + 63) / 64;
  std::vector<std::uint64_t> partners(users * words, 0);
  PairCounter counts(users);
  auto set_bit = [&](UserIndex row, UserIndex col) {
    partners[row * words + col / 64] |= (std::uint64_t{1} << (col % 64));
  };
  auto clear_bit = [&](UserIndex row, UserIndex col) {
    partners[row * words + col / 64] &= ~(std::uint64_t{1} << (col % 64));
  };

  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < order.size();) {
    const MinuteIndex m = cells[order[i]].minute;
    while (hi < order.size() && cells[order[hi]].minute <= m + window) {
      const DyadIndex d = cell_dyads[order[hi]];
      if (counts.increment(d) == 1) {
        set_bit(d.a, d.b);
        set_bit(d.b, d.a);
      }
      ++hi;
    }
    while (lo < order.size() && cells[order[lo]].minute < m - window) {
      const DyadIndex d = cell_dyads[order[lo]];
      if (counts.decrement(d) == 0) {
        clear_bit(d.a, d.b);
        clear_bit(d.b, d.a);
      }
      ++lo;
    }
    std::size_t j = i;
    for (; j < order.size() && cells[order[j]].minute == m; ++j) {
      const DyadIndex d = cell_dyads[order[j]];
      // a is in b's partner set and b in a's; neither is its own partner.
      const std::size_t total =
          simd::union_popcount(&partners[d.a * words], &partners[d.b * words], words);
      cells[order[j]].group_size = static_cast<std::uint32_t>(total - 2);
    }
    i = j;
  }
}

}  // namespace

MinuteGrid build_minute_grid(const EventLog& log, const HomeMap& homes, const GridConfig& cfg,
                             std::optional<std::pair<Timestamp, Timestamp>> range) {
  const auto events = range ? log.events_between(range->first, range->second) : log.events();

  // Order events by (dyad, minute, preference) so the first of each
  // (dyad, minute) group is the one that supplies the minute's context.
  std::vector<std::uint32_t> order(events.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    const auto& ex = events[x];
    const auto& ey = events[y];
    if (ex.dyad != ey.dyad) return ex.dyad < ey.dyad;
    const MinuteIndex mx = minute_of(ex.ts), my = minute_of(ey.ts);
    if (mx != my) return mx < my;
    if (ex.ap_count != ey.ap_count) return ex.ap_count > ey.ap_count;
    if (ex.location != ey.location) return ex.location < ey.location;
    if (ex.on_campus != ey.on_campus) return ex.on_campus > ey.on_campus;
    return ex.ts < ey.ts;
  });

  MinuteGrid grid;
  grid.user_count_ = log.users().size();
  std::vector<DyadIndex> cell_dyads;
  cell_dyads.reserve(order.size());
  grid.cells_.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& e = events[order[i]];
    const MinuteIndex m = minute_of(e.ts);
    if (!grid.cells_.empty() && cell_dyads.back() == e.dyad && grid.cells_.back().minute == m) {
      continue;
    }
    if (grid.dyads_.empty() || grid.dyads_.back() != e.dyad) {
      if (!grid.dyads_.empty()) grid.offsets_.push_back(grid.cells_.size());
      grid.dyads_.push_back(e.dyad);
    }
    MinuteCell c;
    c.minute = m;
    c.ap_count = e.ap_count;
    c.location = e.location;
    c.on_campus = e.on_campus;
    c.at_home = e.location != kNoLocation &&
                (homes.raw(e.dyad.a) == e.location || homes.raw(e.dyad.b) == e.location);
    c.role = role_of(m * 60, cfg.roles);
    grid.cells_.push_back(c);
    cell_dyads.push_back(e.dyad);
  }
  if (!grid.dyads_.empty()) grid.offsets_.push_back(grid.cells_.size());

  assign_group_sizes(grid.cells_, cell_dyads, grid.user_count_, cfg.group_window_seconds / 60);
  return grid;
}

std::vector<MinuteRun> segment_minutes(std::span<const MinuteIndex> minutes, int gap_tolerance) {
  std::vector<MinuteRun> runs;
  for (std::size_t i = 0; i < minutes.size(); ++i) {
    if (!runs.empty() && minutes[i] - runs.back().end <= gap_tolerance) {
      runs.back().end = minutes[i];
      ++runs.back().minutes;
    } else {
      runs.push_back(MinuteRun{minutes[i], minutes[i], 1});
    }
  }
  return runs;
}

MeetingTable segment_meetings(const MinuteGrid& grid, int gap_tolerance) {
  if (gap_tolerance < 1) throw ConfigError("gap_tolerance must be >= 1");
  MeetingTable table;
  std::vector<LocationIndex> locs;
  for (std::size_t row = 0; row < grid.dyad_count(); ++row) {
    const auto cells = grid.minutes(row);
    std::size_t i = 0;
    while (i < cells.size()) {
      std::size_t j = i + 1;
      while (j < cells.size() && cells[j].minute - cells[j - 1].minute <= gap_tolerance) ++j;
      Meeting m;
      m.dyad = grid.dyad(row);
      m.start_minute = cells[i].minute;
      m.end_minute = cells[j - 1].minute;
      m.minutes = static_cast<std::uint32_t>(j - i);
      locs.clear();
      for (std::size_t k = i; k < j; ++k) {
        if (cells[k].location != kNoLocation) locs.push_back(cells[k].location);
      }
      std::sort(locs.begin(), locs.end());
      std::size_t best = 0;
      for (std::size_t a = 0; a < locs.size();) {
        std::size_t b = a;
        while (b < locs.size() && locs[b] == locs[a]) ++b;
        if (b - a > best) {
          best = b - a;
          m.dominant_location = locs[a];
        }
        a = b;
      }
      table.meetings_.push_back(m);
      i = j;
    }
    table.offsets_.push_back(table.meetings_.size());
  }
  return table;
}

void write_meetings_csv(std::ostream& out, const EventLog& log, const MeetingTable& meetings) {
  out << "user_a,user_b,start_minute,end_minute,minutes,location\n";
  for (const auto& m : meetings.all()) {
    out << log.user(m.dyad.a) << ',' << log.user(m.dyad.b) << ',' << m.start_minute << ','
        << m.end_minute << ',' << m.minutes << ',' << log.location(m.dominant_location) << '\n';
  }
}

}  // namespace tieinfer
