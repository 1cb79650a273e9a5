#pragma once

// Shared domain types: participants, dyads, calendar months, roles, channels.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace tieinfer {

using Timestamp = std::int64_t;  // Unix seconds
using MinuteIndex = std::int64_t;  // floor(ts / 60)

inline constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}

inline constexpr MinuteIndex minute_of(Timestamp ts) { return floor_div(ts, 60); }

class UserId {
 public:
  // Throws InvalidDyad on an empty token.
  explicit UserId(std::string token);

  const std::string& str() const noexcept { return token_; }

  friend bool operator==(const UserId&, const UserId&) = default;
  friend std::strong_ordering operator<=>(const UserId& a, const UserId& b) {
    return a.token_.compare(b.token_) <=> 0;
  }

 private:
  std::string token_;
};

// Unordered participant pair stored canonically (a < b).
struct Dyad {
  UserId a;
  UserId b;

  friend bool operator==(const Dyad&, const Dyad&) = default;
  friend std::strong_ordering operator<=>(const Dyad& x, const Dyad& y) {
    if (auto c = x.a <=> y.a; c != 0) return c;
    return x.b <=> y.b;
  }
};

// Throws InvalidDyad when u == v.
Dyad canonical_dyad(const UserId& u, const UserId& v);
Dyad canonical_dyad(std::string_view u, std::string_view v);

struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12

  YearMonth next() const;
  YearMonth prev() const;
  YearMonth plus(int months) const;
  // Number of calendar months from `from` to this (may be negative).
  int months_since(const YearMonth& from) const;
  std::string str() const;  // "YYYY-MM"

  friend bool operator==(const YearMonth&, const YearMonth&) = default;
  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

// Parses "YYYY-MM"; nullopt on malformed input.
std::optional<YearMonth> parse_year_month(std::string_view text);

int days_in_month(int year, int month);

// A calendar month in a fixed local UTC offset: [begin_ts, end_ts).
struct MonthWindow {
  YearMonth ym;
  int utc_offset_minutes = 0;

  Timestamp begin_ts() const;
  Timestamp end_ts() const;  // exclusive
  Timestamp last_ts() const { return end_ts() - 1; }
  bool contains(Timestamp ts) const { return ts >= begin_ts() && ts < end_ts(); }
  std::int64_t length_minutes() const { return (end_ts() - begin_ts()) / 60; }
  MonthWindow next() const { return {ym.next(), utc_offset_minutes}; }

  friend bool operator==(const MonthWindow&, const MonthWindow&) = default;
};

MonthWindow month_of(Timestamp ts, int utc_offset_minutes);

enum class Role : std::uint8_t { InRole = 0, ExtraRole = 1 };

struct RoleConfig {
  int utc_offset_minutes = 60;
  int start_hour = 8;  // inclusive
  int end_hour = 17;   // exclusive
};

// Local calendar facts for a timestamp under a fixed offset.
struct LocalTime {
  int weekday;      // 0 = Monday .. 6 = Sunday
  int hour;         // 0..23
  int hour_of_week; // weekday * 24 + hour
};

LocalTime local_time(Timestamp ts, int utc_offset_minutes);

Role role_of(Timestamp ts, const RoleConfig& cfg);

enum class Channel : std::uint8_t { FbFriend = 0, FbInteraction = 1, Call = 2, Sms = 3 };

inline constexpr Channel kAllChannels[] = {Channel::FbFriend, Channel::FbInteraction,
                                           Channel::Call, Channel::Sms};

std::string_view channel_token(Channel c);
std::optional<Channel> parse_channel(std::string_view token);

// Days since 1970-01-01 for a proleptic Gregorian date, and back.
std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

}  // namespace tieinfer

template <>
struct std::hash<tieinfer::UserId> {
  std::size_t operator()(const tieinfer::UserId& u) const noexcept {
    return std::hash<std::string>{}(u.str());
  }
};

template <>
struct std::hash<tieinfer::Dyad> {
  std::size_t operator()(const tieinfer::Dyad& d) const noexcept {
    std::size_t h = std::hash<std::string>{}(d.a.str());
    return h ^ (std::hash<std::string>{}(d.b.str()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};
