#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fxnet {

// Calendar day. Stored as days since 1970-01-01 so it sorts and hashes cheaply.
class Date {
 public:
  constexpr Date() = default;
  explicit constexpr Date(std::chrono::sys_days d) : days_(d.time_since_epoch().count()) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : Date(std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}) {}

  // Parses YYYY-MM-DD; throws std::invalid_argument on anything else.
  static Date parse(std::string_view iso);

  constexpr std::chrono::sys_days sys() const { return std::chrono::sys_days{std::chrono::days{days_}}; }
  constexpr std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{sys()}; }
  constexpr std::int32_t serial() const { return days_; }

  int year() const { return static_cast<int>(ymd().year()); }
  unsigned month() const { return static_cast<unsigned>(ymd().month()); }
  unsigned day() const { return static_cast<unsigned>(ymd().day()); }

  // ISO-8601 week-numbering year and week (Monday-based, week 1 holds the first Thursday).
  std::pair<int, unsigned> iso_week() const;

  // Same day one calendar month earlier, clamped to the end of a shorter month.
  Date minus_one_month() const;

  Date operator+(int days) const { return Date(sys() + std::chrono::days{days}); }

  std::string str() const;

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::int32_t days_ = 0;
};

}  // namespace fxnet
