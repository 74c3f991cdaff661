#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oupairs/date.hpp"
#include "oupairs/error.hpp"

namespace oupairs {

/// Daily prices of one asset. Dates strictly increasing, prices strictly positive.
class PriceSeries {
 public:
  PriceSeries() = default;

  PriceSeries(std::string asset_id, std::vector<Date> dates, std::vector<double> prices)
      : asset_id_(std::move(asset_id)), dates_(std::move(dates)), prices_(std::move(prices)) {
    if (dates_.size() != prices_.size())
      throw Error(ErrorKind::InvalidArgument, asset_id_ + ": dates and prices differ in length");
    for (std::size_t i = 0; i < prices_.size(); ++i) {
      if (!(prices_[i] > 0.0))
        throw Error(ErrorKind::NonPositivePrice,
                    asset_id_ + ": price on " + dates_[i].iso() + " is not positive");
      if (i > 0 && !(dates_[i - 1] < dates_[i])) {
        if (dates_[i - 1] == dates_[i])
          throw Error(ErrorKind::DuplicateDate, asset_id_ + ": duplicate date " + dates_[i].iso());
        throw Error(ErrorKind::InvalidArgument, asset_id_ + ": dates are not increasing");
      }
    }
  }

  const std::string& asset_id() const { return asset_id_; }
  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<double>& prices() const { return prices_; }
  std::size_t size() const { return prices_.size(); }
  bool empty() const { return prices_.empty(); }

  /// Sub-series over index range [begin, end).
  PriceSeries slice(std::size_t begin, std::size_t end) const {
    return PriceSeries(asset_id_, {dates_.begin() + begin, dates_.begin() + end},
                       {prices_.begin() + begin, prices_.begin() + end});
  }

  bool operator==(const PriceSeries&) const = default;

 private:
  std::string asset_id_;
  std::vector<Date> dates_;
  std::vector<double> prices_;
};

/// Two price series restricted to their common trading dates.
struct AlignedPair {
  PriceSeries series_a;
  PriceSeries series_b;
  std::vector<Date> dates;

  std::size_t size() const { return dates.size(); }

  AlignedPair slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > dates.size())
      throw Error(ErrorKind::InvalidArgument, "slice out of range");
    return {series_a.slice(begin, end), series_b.slice(begin, end),
            {dates.begin() + begin, dates.begin() + end}};
  }

  bool operator==(const AlignedPair&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Shortest representation that parses back to the same double.
inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Reads a `date,price` CSV from a stream. Rows may arrive in any order; the result is sorted.
inline PriceSeries read_csv(std::istream& in, const std::string& asset_id) {
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::vector<std::pair<Date, double>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    view = detail::trim(view);
    if (view.empty()) continue;
    if (!saw_header) {
      if (view != "date,price")
        throw Error(ErrorKind::MalformedRow,
                    asset_id + ": line " + std::to_string(line_no) + ": expected header date,price");
      saw_header = true;
      continue;
    }
    const auto comma = view.find(',');
    const auto bad = [&](const std::string& why) {
      return Error(ErrorKind::MalformedRow,
                   asset_id + ": line " + std::to_string(line_no) + ": " + why);
    };
    if (comma == std::string_view::npos) throw bad("missing comma");
    const auto date = Date::parse(detail::trim(view.substr(0, comma)));
    if (!date) throw bad("bad date");
    double price = 0.0;
    if (!detail::parse_double(detail::trim(view.substr(comma + 1)), price)) throw bad("bad price");
    if (!(price > 0.0))
      throw Error(ErrorKind::NonPositivePrice,
                  asset_id + ": line " + std::to_string(line_no) + ": price must be positive");
    rows.emplace_back(*date, price);
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyFile, asset_id + ": no price rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<Date> dates;
  std::vector<double> prices;
  dates.reserve(rows.size());
  prices.reserve(rows.size());
  for (const auto& [d, p] : rows) {
    if (!dates.empty() && dates.back() == d)
      throw Error(ErrorKind::DuplicateDate, asset_id + ": duplicate date " + d.iso());
    dates.push_back(d);
    prices.push_back(p);
  }
  return PriceSeries(asset_id, std::move(dates), std::move(prices));
}

inline PriceSeries load_csv(const std::filesystem::path& path, const std::string& asset_id) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
  return read_csv(in, asset_id);
}

inline void write_csv(std::ostream& out, const PriceSeries& series) {
  out << "date,price\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << series.dates()[i].iso() << ',' << detail::shortest(series.prices()[i]) << '\n';
}

inline void write_csv(const std::filesystem::path& path, const PriceSeries& series) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::FileNotFound, "cannot write " + path.string());
  write_csv(out, series);
}

/// Intersection alignment: keeps the dates present in both series, in order.
inline AlignedPair align(const PriceSeries& a, const PriceSeries& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidArgument, "align on an empty series");
  std::vector<Date> dates;
  std::vector<double> pa, pb;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a.dates()[i] < b.dates()[j]) {
      ++i;
    } else if (b.dates()[j] < a.dates()[i]) {
      ++j;
    } else {
      dates.push_back(a.dates()[i]);
      pa.push_back(a.prices()[i]);
      pb.push_back(b.prices()[j]);
      ++i;
      ++j;
    }
  }
  if (dates.empty())
    throw Error(ErrorKind::NoOverlap, a.asset_id() + " and " + b.asset_id() + " share no dates");
  if (dates.size() < 2)
    throw Error(ErrorKind::InsufficientData,
                a.asset_id() + " and " + b.asset_id() + " share a single date");
  return {PriceSeries(a.asset_id(), dates, std::move(pa)),
          PriceSeries(b.asset_id(), dates, std::move(pb)), dates};
}

}  // namespace oupairs
