#include "fxnet/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace fxnet {

namespace {

unsigned parse_digits(std::string_view s) {
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("bad date field");
  return v;
}

}  // namespace

Date Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
    throw std::invalid_argument("expected YYYY-MM-DD, got '" + std::string(iso) + "'");
  }
  const int y = static_cast<int>(parse_digits(iso.substr(0, 4)));
  const unsigned m = parse_digits(iso.substr(5, 2));
  const unsigned d = parse_digits(iso.substr(8, 2));
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date '" + std::string(iso) + "'");
  return Date(std::chrono::sys_days{ymd});
}

std::pair<int, unsigned> Date::iso_week() const {
  using namespace std::chrono;
  const sys_days today = sys();
  const unsigned wd = weekday{today}.iso_encoding();  // Mon=1..Sun=7
  const sys_days thursday = today + days{4 - static_cast<int>(wd)};
  const year_month_day thu{thursday};
  const sys_days jan1{thu.year() / January / 1};
  const unsigned week = static_cast<unsigned>((thursday - jan1).count() / 7 + 1);
  return {static_cast<int>(thu.year()), week};
}

Date Date::minus_one_month() const {
  using namespace std::chrono;
  year_month_day d = ymd() - months{1};
  if (!d.ok()) d = d.year() / d.month() / last;
  return Date(sys_days{d});
}

std::string Date::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

}  // namespace fxnet
