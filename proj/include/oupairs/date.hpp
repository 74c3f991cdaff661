#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oupairs {

/// Calendar date with day resolution.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days day) : day_(day) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : day_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                         std::chrono::day{d}}) {}

  constexpr std::chrono::sys_days sys_days() const { return day_; }

  constexpr Date plus_days(int n) const { return Date(day_ + std::chrono::days{n}); }

  constexpr bool is_weekday() const {
    const auto wd = std::chrono::weekday{day_}.c_encoding();
    return wd != 0 && wd != 6;
  }

  /// Parses strict `YYYY-MM-DD`; returns nullopt on any deviation or invalid calendar date.
  static std::optional<Date> parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto digits = [](std::string_view s, auto& out) {
      for (char c : s)
        if (c < '0' || c > '9') return false;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      return ec == std::errc{} && ptr == s.data() + s.size();
    };
    if (!digits(text.substr(0, 4), y) || !digits(text.substr(5, 2), m) ||
        !digits(text.substr(8, 2), d))
      return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date(std::chrono::sys_days{ymd});
  }

  std::string iso() const {
    const std::chrono::year_month_day ymd{day_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days day_{};
};

/// `count` consecutive Monday-to-Friday dates, starting at the first weekday on or after `start`.
inline std::vector<Date> business_days(Date start, std::size_t count) {
  std::vector<Date> out;
  out.reserve(count);
  Date d = start;
  while (out.size() < count) {
    if (d.is_weekday()) out.push_back(d);
    d = d.plus_days(1);
  }
  return out;
}

}  // namespace oupairs
