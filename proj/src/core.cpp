#include "tieinfer/core.hpp"

#include <charconv>
#include <cstdio>

#include "tieinfer/errors.hpp"

namespace tieinfer {

UserId::UserId(std::string token) : token_(std::move(token)) {
  if (token_.empty()) throw InvalidDyad("empty user id");
}

Dyad canonical_dyad(const UserId& u, const UserId& v) {
  if (u == v) throw InvalidDyad("self-dyad on user '" + u.str() + "'");
  if (u < v) return Dyad{u, v};
  return Dyad{v, u};
}

Dyad canonical_dyad(std::string_view u, std::string_view v) {
  return canonical_dyad(UserId(std::string(u)), UserId(std::string(v)));
}

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(int year, int month, int day) {
  const std::int64_t y = static_cast<std::int64_t>(year) - (month <= 2 ? 1 : 0);
  const std::int64_t era = floor_div(y, 400);
  const std::int64_t yoe = y - era * 400;
  const std::int64_t mp = (month + 9) % 12;
  const std::int64_t doy = (153 * mp + 2) / 5 + day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t days, int& year, int& month, int& day) {
  days += 719468;
  const std::int64_t era = floor_div(days, 146097);
  const std::int64_t doe = days - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  year = static_cast<int>(yoe + era * 400 + (month <= 2 ? 1 : 0));
}

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2) {
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 29 : 28;
  }
  return kDays[month - 1];
}

YearMonth YearMonth::plus(int months) const {
  const std::int64_t idx = static_cast<std::int64_t>(year) * 12 + (month - 1) + months;
  return YearMonth{static_cast<int>(floor_div(idx, 12)), static_cast<int>(floor_mod(idx, 12)) + 1};
}

YearMonth YearMonth::next() const { return plus(1); }
YearMonth YearMonth::prev() const { return plus(-1); }

int YearMonth::months_since(const YearMonth& from) const {
  return (year - from.year) * 12 + (month - from.month);
}

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

std::optional<YearMonth> parse_year_month(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  int y = 0, m = 0;
  auto [p1, e1] = std::from_chars(text.data(), text.data() + dash, y);
  if (e1 != std::errc{} || p1 != text.data() + dash) return std::nullopt;
  auto [p2, e2] = std::from_chars(text.data() + dash + 1, text.data() + text.size(), m);
  if (e2 != std::errc{} || p2 != text.data() + text.size()) return std::nullopt;
  if (m < 1 || m > 12) return std::nullopt;
  return YearMonth{y, m};
}

Timestamp MonthWindow::begin_ts() const {
  return days_from_civil(ym.year, ym.month, 1) * 86400 -
         static_cast<Timestamp>(utc_offset_minutes) * 60;
}

Timestamp MonthWindow::end_ts() const { return next().begin_ts(); }

MonthWindow month_of(Timestamp ts, int utc_offset_minutes) {
  const Timestamp local = ts + static_cast<Timestamp>(utc_offset_minutes) * 60;
  int y, m, d;
  civil_from_days(floor_div(local, 86400), y, m, d);
  return MonthWindow{YearMonth{y, m}, utc_offset_minutes};
}

LocalTime local_time(Timestamp ts, int utc_offset_minutes) {
  const Timestamp local = ts + static_cast<Timestamp>(utc_offset_minutes) * 60;
  const std::int64_t days = floor_div(local, 86400);
  // 1970-01-01 was a Thursday (Monday-based index 3).
  const int weekday = static_cast<int>(floor_mod(days + 3, 7));
  const int hour = static_cast<int>(floor_mod(local, 86400) / 3600);
  return LocalTime{weekday, hour, weekday * 24 + hour};
}

Role role_of(Timestamp ts, const RoleConfig& cfg) {
  const LocalTime lt = local_time(ts, cfg.utc_offset_minutes);
  const bool weekday = lt.weekday < 5;
  const bool working = lt.hour >= cfg.start_hour && lt.hour < cfg.end_hour;
  return (weekday && working) ? Role::InRole : Role::ExtraRole;
}

std::string_view channel_token(Channel c) {
  switch (c) {
    case Channel::FbFriend: return "fb_friend";
    case Channel::FbInteraction: return "fb_interaction";
    case Channel::Call: return "call";
    case Channel::Sms: return "sms";
  }
  return "unknown";
}

std::optional<Channel> parse_channel(std::string_view token) {
  for (Channel c : kAllChannels) {
    if (channel_token(c) == token) return c;
  }
  return std::nullopt;
}

}  // namespace tieinfer
