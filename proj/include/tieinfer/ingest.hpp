#pragma once

// Proximity-event logs and ground-truth label sets: parsing, canonical form,
// serialization and validation.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tieinfer/core.hpp"

namespace tieinfer {

using UserIndex = std::uint32_t;
using LocationIndex = std::uint32_t;
inline constexpr LocationIndex kNoLocation = 0xffffffffu;

// Sorted, duplicate-free string table. Index order equals lexicographic order,
// so comparing indices is the same as comparing the strings.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::vector<std::string> items);  // sorts and deduplicates

  std::size_t size() const noexcept { return items_.size(); }
  const std::string& at(std::uint32_t i) const { return items_.at(i); }
  std::optional<std::uint32_t> find(std::string_view s) const;
  const std::vector<std::string>& items() const noexcept { return items_; }

 private:
  std::vector<std::string> items_;
};

struct DyadIndex {
  UserIndex a = 0;
  UserIndex b = 0;  // a < b

  friend bool operator==(const DyadIndex&, const DyadIndex&) = default;
  friend auto operator<=>(const DyadIndex&, const DyadIndex&) = default;
};

struct ProximityEvent {
  Timestamp ts = 0;
  DyadIndex dyad;
  LocationIndex location = kNoLocation;
  std::uint32_t ap_count = 0;
  bool on_campus = false;
};

// Time-sorted, canonical, deduplicated proximity events with interned ids.
class EventLog {
 public:
  EventLog();

  const Dictionary& users() const noexcept { return *users_; }
  const Dictionary& locations() const noexcept { return *locations_; }
  std::span<const ProximityEvent> events() const noexcept { return events_; }
  bool empty() const noexcept { return events_.empty(); }
  std::size_t size() const noexcept { return events_.size(); }

  // Inclusive (min_ts, max_ts); nullopt for an empty log.
  std::optional<std::pair<Timestamp, Timestamp>> time_span() const;

  // Events with begin <= ts < end.
  std::span<const ProximityEvent> events_between(Timestamp begin, Timestamp end) const;

  Dyad dyad(DyadIndex d) const;
  const std::string& user(UserIndex u) const { return users_->at(u); }
  // Empty string for kNoLocation.
  const std::string& location(LocationIndex l) const;

 private:
  friend class EventLogBuilder;
  std::shared_ptr<const Dictionary> users_;
  std::shared_ptr<const Dictionary> locations_;
  std::vector<ProximityEvent> events_;
};

// Accumulates raw records, then produces the canonical EventLog: dyads
// ordered, events sorted by (ts, dyad), duplicate (ts, dyad) pairs collapsed
// to the record with the largest ap_count (ties: smaller location id, then
// on_campus). The result does not depend on insertion order.
class EventLogBuilder {
 public:
  // Throws InvalidDyad when user_a == user_b or either is empty.
  void add(Timestamp ts, std::string_view user_a, std::string_view user_b,
           std::string_view location_id, bool on_campus, std::uint32_t ap_count);
  std::size_t size() const noexcept { return raw_.size(); }
  EventLog build() &&;

 private:
  std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& table,
                       std::vector<std::string>& names, std::string_view s);

  std::unordered_map<std::string, std::uint32_t> user_ids_;
  std::vector<std::string> user_names_;
  std::unordered_map<std::string, std::uint32_t> location_ids_;
  std::vector<std::string> location_names_;
  std::vector<ProximityEvent> raw_;
};

enum class EventFormat { Csv, Jsonl };

struct ParseOptions {
  bool strict = true;
  std::size_t max_reported_lines = 20;
};

struct ParsedEvents {
  EventLog log;
  std::size_t malformed = 0;
  std::vector<std::size_t> malformed_lines;  // 1-based, truncated
};

// Throws IoError on an unreadable stream; ParseError when strict and any line
// is malformed.
ParsedEvents parse_events(std::istream& in, EventFormat format, const ParseOptions& opts = {});
ParsedEvents parse_events_file(const std::string& path, EventFormat format,
                               const ParseOptions& opts = {});

void write_events_csv(std::ostream& out, const EventLog& log);

class LabelSet {
 public:
  void add_edge(const YearMonth& month, Channel channel, const Dyad& dyad);
  void add_channel_user(Channel channel, const UserId& user);

  const std::set<Dyad>& edges(const YearMonth& month, Channel channel) const;
  const std::set<UserId>& channel_users(Channel channel) const;
  bool has_edge(const YearMonth& month, Channel channel, const Dyad& dyad) const;
  // Months with at least one edge in any channel, ascending.
  std::vector<YearMonth> months() const;
  std::size_t edge_count() const;

  const std::map<std::pair<YearMonth, Channel>, std::set<Dyad>>& all_edges() const {
    return edges_;
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::map<std::pair<YearMonth, Channel>, std::set<Dyad>> edges_;
  std::map<Channel, std::set<UserId>> channel_users_;
};

// labels.csv: year,month,channel,user_a,user_b. Optional roster
// channel_users.csv: channel,user. Every edge endpoint is added to its
// channel's roster. Throws ParseError on any malformed record.
LabelSet parse_ground_truth(std::istream& labels, std::istream* roster = nullptr);
LabelSet parse_ground_truth_files(const std::string& labels_path,
                                  const std::string& roster_path = {});

void write_labels_csv(std::ostream& out, const LabelSet& labels);
void write_roster_csv(std::ostream& out, const LabelSet& labels);

struct MonthSummary {
  YearMonth month;
  std::size_t events = 0;
  std::size_t active_users = 0;
  std::size_t active_dyads = 0;
  std::array<std::size_t, 4> edges{};          // indexed by Channel
  std::array<std::size_t, 4> active_edges{};   // edges whose dyad has events that month
};

struct ValidationReport {
  std::set<UserId> missing_users;            // in labels, absent from the event log
  std::vector<YearMonth> zero_event_months;  // months with labels or log coverage but no events
  std::vector<MonthSummary> months;
};

ValidationReport validate_log(const EventLog& log, const LabelSet& labels,
                              int utc_offset_minutes);

void write_availability_csv(std::ostream& out, const ValidationReport& report);

}  // namespace tieinfer
