#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "oupairs/data_ingest.hpp"
#include "oupairs/pair_formation.hpp"
#include "oupairs/signal_engine.hpp"

namespace oupairs {

/// A completed round trip. Position is held on ledger days [entry, exit).
struct Trade {
  std::size_t entry = 0;
  std::size_t exit = 0;
  int direction = 0;  // +1 long the portfolio, -1 short

  bool operator==(const Trade&) const = default;
};

/// Day-by-day record of one backtest run.
///
/// Index 0 is the anchor day preceding the first signal: always flat, zero
/// return. daily_returns[i] is earned from day i-1 to day i with the position
/// held at the close of day i-1, so the sample length is k = size() - 1.
struct TradeLedger {
  std::vector<Date> dates;
  std::vector<int> positions;
  std::vector<double> daily_returns;
  std::vector<Trade> trades;

  std::size_t size() const { return dates.size(); }
  bool operator==(const TradeLedger&) const = default;
};

/// Performance indices of one ledger. Absent optionals mark undefined values:
/// sharpe when all daily returns are equal, per-trade figures when n_trades is 0.
struct Metrics {
  std::optional<double> sharpe;
  double ann_return = 0.0;
  double max_drawdown = 0.0;
  double trade_freq = 0.0;
  std::optional<double> trade_range;
  std::optional<double> ret_per_trade;
  std::size_t n_trades = 0;
  std::size_t k_days = 0;

  bool operator==(const Metrics&) const = default;
};

inline double daily_return(double x_prev, double x_next, double cost_prev, int position_prev) {
  if (!(cost_prev > 0.0)) throw Error(ErrorKind::NonPositiveCost, "position cost must be positive");
  if (position_prev == 0) return 0.0;
  return (x_next - x_prev) / cost_prev * position_prev;
}

/// Rebuilds round trips from a position path. Positions never flip sign in one step.
inline std::vector<Trade> trades_from_positions(std::span<const int> positions) {
  std::vector<Trade> trades;
  std::optional<Trade> open;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const int p = positions[i];
    if (open && p != open->direction) {
      open->exit = i;
      trades.push_back(*open);
      open.reset();
    }
    if (!open && p != 0) open = Trade{i, 0, p};
  }
  if (open) {
    open->exit = positions.size();
    trades.push_back(*open);
  }
  return trades;
}

/// Folds the rule table over `signals` and marks the pair to market daily.
/// The final day is forced flat: an open trade exits there and no new trade opens.
inline TradeLedger run_backtest(const PairSpec& pair, const AlignedPair& data,
                                std::span<const SignalDay> signals, const Thresholds& th) {
  if (!th.valid()) throw Error(ErrorKind::InvalidArgument, "thresholds need s_open > s_close >= 0");
  if (signals.empty()) throw Error(ErrorKind::InvalidArgument, "no signals to backtest");
  const auto first = std::lower_bound(data.dates.begin(), data.dates.end(), signals.front().date);
  if (first == data.dates.end() || *first != signals.front().date || first == data.dates.begin())
    throw Error(ErrorKind::DateMisalignment,
                "first signal date " + signals.front().date.iso() + " has no preceding data day");
  const std::size_t anchor = static_cast<std::size_t>(first - data.dates.begin()) - 1;
  if (anchor + 1 + signals.size() > data.size())
    throw Error(ErrorKind::DateMisalignment, "signals run past the end of the data");
  for (std::size_t i = 0; i < signals.size(); ++i)
    if (data.dates[anchor + 1 + i] != signals[i].date)
      throw Error(ErrorKind::DateMisalignment, "signal date " + signals[i].date.iso() +
                                                   " does not match data date " +
                                                   data.dates[anchor + 1 + i].iso());

  const ValueSeries values = portfolio_values(pair, data);
  const auto& x = values.values();
  const auto& pa = data.series_a.prices();
  const auto& pb = data.series_b.prices();

  const std::size_t m = signals.size() + 1;
  TradeLedger ledger;
  ledger.dates.assign(data.dates.begin() + anchor, data.dates.begin() + anchor + m);
  ledger.positions.assign(m, 0);
  ledger.daily_returns.assign(m, 0.0);

  PositionState state = PositionState::Flat;
  for (std::size_t i = 1; i < m; ++i) {
    const std::size_t t = anchor + i;
    state = step_position(state, signals[i - 1].s_score, th);
    if (i == m - 1) state = PositionState::Flat;
    ledger.positions[i] = position_sign(state);
    const double cost_prev = pair.alpha * pa[t - 1] + pair.beta * pb[t - 1];
    ledger.daily_returns[i] = daily_return(x[t - 1], x[t], cost_prev, ledger.positions[i - 1]);
  }
  ledger.trades = trades_from_positions(ledger.positions);
  return ledger;
}

/// Compounded equity V_0 = 1, V_t = prod_{u<=t} (1 + ret_u).
inline std::vector<double> equity_curve(const TradeLedger& ledger) {
  std::vector<double> v(ledger.size(), 1.0);
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] * (1.0 + ledger.daily_returns[i]);
  return v;
}

inline Metrics compute_metrics(const TradeLedger& ledger) {
  if (ledger.size() < 2) throw Error(ErrorKind::InvalidArgument, "ledger needs at least one daily return");
  const std::span<const double> ret(ledger.daily_returns.data() + 1, ledger.size() - 1);
  const auto k = static_cast<double>(ret.size());

  Metrics m;
  m.k_days = ret.size();
  m.n_trades = ledger.trades.size();

  double growth = 1.0;
  for (double r : ret) growth *= 1.0 + r;
  m.ann_return = std::pow(growth, kTradingDaysPerYear / k) - 1.0;

  const bool all_equal = std::all_of(ret.begin(), ret.end(), [&](double r) { return r == ret.front(); });
  if (!all_equal) {
    double mean = 0.0;
    for (double r : ret) mean += r;
    mean /= k;
    double ss = 0.0;
    for (double r : ret) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / (k - 1.0));
    m.sharpe = m.ann_return / (sd * std::sqrt(kTradingDaysPerYear));
  }

  const auto equity = equity_curve(ledger);
  double peak = equity.front();
  for (double v : equity) {
    peak = std::max(peak, v);
    m.max_drawdown = std::min(m.max_drawdown, v / peak - 1.0);
  }

  const auto n = static_cast<double>(m.n_trades);
  m.trade_freq = n * kTradingDaysPerYear / k;
  if (m.n_trades > 0) {
    double held = 0.0;
    for (const auto& t : ledger.trades) held += static_cast<double>(t.exit - t.entry);
    m.trade_range = held / n;
    m.ret_per_trade = m.ann_return / m.trade_freq;
  }
  return m;
}

/// `date,position,daily_return,equity`, one row per ledger day.
inline void write_ledger_csv(std::ostream& out, const TradeLedger& ledger) {
  const auto equity = equity_curve(ledger);
  out << "date,position,daily_return,equity\n";
  for (std::size_t i = 0; i < ledger.size(); ++i)
    out << ledger.dates[i].iso() << ',' << ledger.positions[i] << ','
        << detail::shortest(ledger.daily_returns[i]) << ',' << detail::shortest(equity[i]) << '\n';
}

/// Reads a ledger written by write_ledger_csv; trades are rebuilt from positions.
inline TradeLedger read_ledger_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  TradeLedger ledger;
  const auto bad = [&](const std::string& why) {
    return Error(ErrorKind::MalformedRow, "ledger line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    if (line_no == 1) {
      if (view != "date,position,daily_return,equity") throw bad("unexpected header");
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t pos; (pos = view.find(',', start)) != std::string_view::npos; start = pos + 1)
      fields.push_back(view.substr(start, pos - start));
    fields.push_back(view.substr(start));
    if (fields.size() != 4) throw bad("expected 4 fields");
    const auto date = Date::parse(fields[0]);
    if (!date) throw bad("bad date");
    double position = 0.0, ret = 0.0;
    if (!detail::parse_double(fields[1], position) || !detail::parse_double(fields[2], ret))
      throw bad("bad number");
    if (position != -1.0 && position != 0.0 && position != 1.0) throw bad("position must be -1, 0 or 1");
    ledger.dates.push_back(*date);
    ledger.positions.push_back(static_cast<int>(position));
    ledger.daily_returns.push_back(ret);
  }
  if (ledger.dates.empty()) throw Error(ErrorKind::EmptyFile, "ledger has no rows");
  ledger.trades = trades_from_positions(ledger.positions);
  return ledger;
}

}  // namespace oupairs
