#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "oupairs/backtester.hpp"
#include "oupairs/parallel.hpp"

namespace oupairs {

/// {1.00, 1.05, ..., 2.00}
inline std::vector<double> default_s_open_grid() {
  std::vector<double> grid(21);
  for (int i = 0; i <= 20; ++i) grid[i] = (100 + 5 * i) / 100.0;
  return grid;
}

/// {0.00, 0.05, ..., 1.00}
inline std::vector<double> default_s_close_grid() {
  std::vector<double> grid(21);
  for (int j = 0; j <= 20; ++j) grid[j] = (5 * j) / 100.0;
  return grid;
}

struct SweepCell {
  Thresholds thresholds;
  Metrics metrics;

  bool operator==(const SweepCell&) const = default;
};

struct SweepResult {
  std::vector<SweepCell> cells;     // S_o major, S_c minor
  std::vector<Thresholds> skipped;  // grid pairs with S_c >= S_o

  bool operator==(const SweepResult&) const = default;
};

struct StudyConfig {
  std::vector<std::size_t> in_sample_lengths{880, 628, 376, 124};
  Date out_sample_start{2014, 12, 23};
  Date out_sample_end{2015, 11, 10};
  std::vector<double> s_open_grid = default_s_open_grid();
  std::vector<double> s_close_grid = default_s_close_grid();
  std::size_t window = 60;
  std::vector<double> b_grid = default_b_grid();
  double dt = kDailyDt;
  unsigned workers = 1;
};

enum class Period { InSample, OutOfSample };

/// Index range [begin, end) into an AlignedPair's dates.
struct PeriodRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const PeriodRange&) const = default;
};

/// The out-of-sample range covers [out_sample_start, out_sample_end]; the
/// in-sample range is the `in_sample_length` days immediately before it.
/// Both need `window` days of warm-up data in front.
inline PeriodRange period_range(const AlignedPair& data, const StudyConfig& cfg,
                                std::size_t in_sample_length, Period period) {
  const auto& d = data.dates;
  const auto ob = static_cast<std::size_t>(
      std::lower_bound(d.begin(), d.end(), cfg.out_sample_start) - d.begin());
  const auto oe = static_cast<std::size_t>(
      std::upper_bound(d.begin(), d.end(), cfg.out_sample_end) - d.begin());
  if (ob >= oe)
    throw Error(ErrorKind::InsufficientData, "no data between " + cfg.out_sample_start.iso() +
                                                 " and " + cfg.out_sample_end.iso());
  if (in_sample_length < 3) throw Error(ErrorKind::InvalidArgument, "in-sample length must be >= 3");
  if (ob < in_sample_length + cfg.window)
    throw Error(ErrorKind::InsufficientData,
                "in-sample length " + std::to_string(in_sample_length) + " plus window " +
                    std::to_string(cfg.window) + " needs " +
                    std::to_string(in_sample_length + cfg.window) + " days before " +
                    cfg.out_sample_start.iso() + ", have " + std::to_string(ob));
  if (period == Period::OutOfSample) return {ob, oe};
  return {ob - in_sample_length, ob};
}

/// Rolling s-scores for every day of `range`, warmed up on the `window` days before it.
inline std::vector<SignalDay> period_signals(const PairSpec& pair, const AlignedPair& data,
                                             PeriodRange range, std::size_t window, double dt) {
  if (range.begin < window || range.end > data.size() || range.begin >= range.end)
    throw Error(ErrorKind::InsufficientData, "period lacks warm-up data");
  const ValueSeries values = portfolio_values(pair, data.slice(range.begin - window, range.end));
  auto signals = rolling_signals(values, window, dt);
  if (signals.empty())
    throw Error(ErrorKind::InsufficientData, "no rolling fit succeeded in the period");
  // Days before the first successful fit stay flat: s = 0 never opens a trade.
  const std::size_t missing = (range.end - range.begin) - signals.size();
  std::vector<SignalDay> padded;
  padded.reserve(range.end - range.begin);
  for (std::size_t i = 0; i < missing; ++i) padded.push_back({data.dates[range.begin + i], 0.0, {}});
  padded.insert(padded.end(), signals.begin(), signals.end());
  return padded;
}

/// Backtests every valid (S_o, S_c) grid pair on one precomputed signal path.
/// Output order and contents do not depend on `workers`.
inline SweepResult sweep_signals(const PairSpec& pair, const AlignedPair& data,
                                 std::span<const SignalDay> signals, std::span<const double> s_open_grid,
                                 std::span<const double> s_close_grid, unsigned workers = 1) {
  if (s_open_grid.empty() || s_close_grid.empty())
    throw Error(ErrorKind::InvalidArgument, "threshold grids must be non-empty");
  SweepResult result;
  std::vector<Thresholds> todo;
  for (double so : s_open_grid)
    for (double sc : s_close_grid) {
      const Thresholds th{so, sc};
      if (th.valid())
        todo.push_back(th);
      else
        result.skipped.push_back(th);
    }
  result.cells.resize(todo.size());
  detail::parallel_for(todo.size(), workers, [&](std::size_t i) {
    result.cells[i] = {todo[i], compute_metrics(run_backtest(pair, data, signals, todo[i]))};
  });
  return result;
}

inline SweepResult run_sweep(const PairSpec& pair, const AlignedPair& data, const StudyConfig& cfg,
                             PeriodRange range) {
  const auto signals = period_signals(pair, data, range, cfg.window, cfg.dt);
  return sweep_signals(pair, data, signals, cfg.s_open_grid, cfg.s_close_grid, cfg.workers);
}

/// Highest Sharpe; ties go to the lower S_o, then the lower S_c.
inline SweepCell select_best(std::span<const SweepCell> cells) {
  const SweepCell* best = nullptr;
  for (const auto& c : cells) {
    if (!c.metrics.sharpe) continue;
    if (!best) {
      best = &c;
      continue;
    }
    const double s = *c.metrics.sharpe, b = *best->metrics.sharpe;
    const auto key = [](const SweepCell& x) { return std::pair{x.thresholds.s_open, x.thresholds.s_close}; };
    if (s > b || (s == b && key(c) < key(*best))) best = &c;
  }
  if (!best) throw Error(ErrorKind::NoDefinedSharpe, "no cell has a defined Sharpe ratio");
  return *best;
}

struct StudySection {
  std::size_t in_sample_length = 0;
  PairSpec pair;
  SweepResult in_sweep;
  SweepCell best_in;
  Metrics out_metrics;
};

struct StudyReport {
  std::vector<StudySection> sections;
  std::optional<std::size_t> best_section;  // highest out-of-sample Sharpe
};

/// One section per in-sample length: form the pair on that window, sweep it,
/// pick the best thresholds, and evaluate them out of sample with the same (alpha, beta).
inline StudyReport run_study(const AlignedPair& data, const StudyConfig& cfg) {
  if (cfg.in_sample_lengths.empty()) throw Error(ErrorKind::InvalidArgument, "no in-sample lengths");
  StudyReport report;
  for (std::size_t len : cfg.in_sample_lengths) {
    const PeriodRange in_range = period_range(data, cfg, len, Period::InSample);
    const PeriodRange out_range = period_range(data, cfg, len, Period::OutOfSample);

    StudySection section;
    section.in_sample_length = len;
    section.pair = form_pair(data.slice(in_range.begin, in_range.end), cfg.b_grid, cfg.dt, cfg.workers);
    section.in_sweep = run_sweep(section.pair, data, cfg, in_range);
    section.best_in = select_best(section.in_sweep.cells);
    const auto out_signals = period_signals(section.pair, data, out_range, cfg.window, cfg.dt);
    section.out_metrics =
        compute_metrics(run_backtest(section.pair, data, out_signals, section.best_in.thresholds));
    report.sections.push_back(std::move(section));
  }
  for (std::size_t i = 0; i < report.sections.size(); ++i) {
    const auto& s = report.sections[i].out_metrics.sharpe;
    if (!s) continue;
    if (!report.best_section || *s > *report.sections[*report.best_section].out_metrics.sharpe)
      report.best_section = i;
  }
  return report;
}

}  // namespace oupairs
