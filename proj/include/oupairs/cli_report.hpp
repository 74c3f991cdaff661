#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oupairs/sweep.hpp"

#include <unistd.h>

namespace oupairs {

/// Everything a CLI command needs. Built from a key=value file, then the
/// OUPAIRS_SEED environment variable, then `--key value` flags, in that order.
struct RunConfig {
  std::filesystem::path data_dir;
  std::string asset_a;
  std::string asset_b;
  StudyConfig study;
  std::optional<std::size_t> in_sample_length;  // defaults to the first in_sample_lengths entry
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;
  std::optional<double> so;
  std::optional<double> sc;
  std::size_t sim_steps = 5000;

  std::size_t in_length() const {
    return in_sample_length ? *in_sample_length : study.in_sample_lengths.front();
  }
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; `#` starts a comment line.
inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::ConfigError, "config line " + std::to_string(line_no) + ": expected key=value");
    out.emplace_back(std::string(detail::trim(view.substr(0, eq))),
                     std::string(detail::trim(view.substr(eq + 1))));
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = value.find(',', start);
    const auto item = trim(std::string_view(value).substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (!item.empty()) out.emplace_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double config_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!parse_double(trim(value), v)) throw Error(ErrorKind::ConfigError, key + ": not a number: " + value);
  return v;
}

inline std::uint64_t config_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto s = trim(value);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorKind::ConfigError, key + ": not a non-negative integer: " + value);
  return v;
}

inline Date config_date(const std::string& key, const std::string& value) {
  const auto d = Date::parse(trim(value));
  if (!d) throw Error(ErrorKind::ConfigError, key + ": not a YYYY-MM-DD date: " + value);
  return *d;
}

inline std::vector<double> config_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(config_double(key, item));
  if (out.empty()) throw Error(ErrorKind::ConfigError, key + ": empty list");
  return out;
}

}  // namespace detail

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "data_dir") {
    cfg.data_dir = value;
  } else if (key == "pair") {
    const auto items = split_list(value);
    if (items.size() != 2) throw Error(ErrorKind::ConfigError, "pair: expected two tickers, got " + value);
    cfg.asset_a = items[0];
    cfg.asset_b = items[1];
  } else if (key == "in_sample_lengths") {
    cfg.study.in_sample_lengths.clear();
    for (const auto& item : split_list(value)) cfg.study.in_sample_lengths.push_back(config_uint(key, item));
    if (cfg.study.in_sample_lengths.empty()) throw Error(ErrorKind::ConfigError, key + ": empty list");
  } else if (key == "in_sample_length") {
    cfg.in_sample_length = config_uint(key, value);
  } else if (key == "out_sample_start") {
    cfg.study.out_sample_start = config_date(key, value);
  } else if (key == "out_sample_end") {
    cfg.study.out_sample_end = config_date(key, value);
  } else if (key == "s_open_grid") {
    cfg.study.s_open_grid = config_doubles(key, value);
  } else if (key == "s_close_grid") {
    cfg.study.s_close_grid = config_doubles(key, value);
  } else if (key == "so") {
    cfg.so = config_double(key, value);
  } else if (key == "sc") {
    cfg.sc = config_double(key, value);
  } else if (key == "window") {
    cfg.study.window = config_uint(key, value);
  } else if (key == "b_grid") {
    cfg.study.b_grid = config_doubles(key, value);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "seed") {
    cfg.seed = config_uint(key, value);
  } else if (key == "workers") {
    cfg.study.workers = static_cast<unsigned>(config_uint(key, value));
  } else if (key == "sim_steps") {
    cfg.sim_steps = config_uint(key, value);
  } else {
    throw Error(ErrorKind::ConfigError, "unknown key: " + key);
  }
}

inline void validate(const RunConfig& cfg) {
  if (cfg.data_dir.empty()) throw Error(ErrorKind::ConfigError, "data_dir is not set");
  if (!std::filesystem::is_directory(cfg.data_dir))
    throw Error(ErrorKind::ConfigError, "data_dir does not exist: " + cfg.data_dir.string());
  if (cfg.asset_a.empty() || cfg.asset_b.empty()) throw Error(ErrorKind::ConfigError, "pair is not set");
  if (cfg.study.workers < 1) throw Error(ErrorKind::ConfigError, "workers must be >= 1");
  if (cfg.study.window < 3) throw Error(ErrorKind::ConfigError, "window must be >= 3");
  if (cfg.sim_steps < 1) throw Error(ErrorKind::ConfigError, "sim_steps must be >= 1");
  if (cfg.so.has_value() != cfg.sc.has_value())
    throw Error(ErrorKind::ConfigError, "so and sc must be given together");
  if (cfg.so && !Thresholds{*cfg.so, *cfg.sc}.valid())
    throw Error(ErrorKind::ConfigError, "so/sc need so > sc >= 0");
}

inline RunConfig load_run_config(const std::optional<std::filesystem::path>& config_file,
                                 const KeyValues& overrides, const char* env_seed) {
  RunConfig cfg;
  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw Error(ErrorKind::FileNotFound, "cannot open config " + config_file->string());
    for (const auto& [k, v] : parse_key_values(in)) apply_setting(cfg, k, v);
  }
  if (env_seed && *env_seed) cfg.seed = detail::config_uint("OUPAIRS_SEED", env_seed);
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  validate(cfg);
  return cfg;
}

/// Six significant digits; absent values print as NA.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("NA"); }

struct OutputFile {
  std::string name;
  std::string contents;
};

struct CommandOutput {
  std::string text;  // printed to stdout
  std::vector<OutputFile> files;
};

/// Writes every file through a temporary name and renames it into place.
/// Called only after a command has fully succeeded.
inline void commit_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files) {
  if (files.empty()) return;
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged;
  try {
    for (const auto& f : files) {
      const auto target = dir / f.name;
      auto tmp = target;
      tmp += ".tmp." + std::to_string(::getpid());
      std::ofstream out(tmp, std::ios::binary);
      out << f.contents;
      out.close();
      staged.emplace_back(tmp, target);
      if (!out) throw Error(ErrorKind::FileNotFound, "cannot write " + tmp.string());
    }
  } catch (...) {
    for (const auto& [tmp, target] : staged) std::filesystem::remove(tmp);
    throw;
  }
  for (const auto& [tmp, target] : staged) std::filesystem::rename(tmp, target);
}

inline AlignedPair load_pair(const RunConfig& cfg) {
  return align(load_csv(cfg.data_dir / (cfg.asset_a + ".csv"), cfg.asset_a),
               load_csv(cfg.data_dir / (cfg.asset_b + ".csv"), cfg.asset_b));
}

namespace detail {

inline PairSpec form_in_sample(const RunConfig& cfg, const AlignedPair& data, PeriodRange in_range) {
  return form_pair(data.slice(in_range.begin, in_range.end), cfg.study.b_grid, cfg.study.dt,
                   cfg.study.workers);
}

inline std::string params_row(const std::string& label, const std::string& kind, const OuParams& p) {
  return label + "," + kind + "," + fmt(p.theta) + "," + fmt(p.mu) + "," + fmt(p.sigma) + "," +
         fmt(p.avg_loglik) + "\n";
}

/// Summary row order.
inline std::vector<std::pair<std::string, std::string>> metric_rows(const Metrics& m) {
  return {{"SR", fmt(m.sharpe)},         {"AR", fmt(m.ann_return)},
          {"DD", fmt(m.max_drawdown)},   {"TF", fmt(m.trade_freq)},
          {"TR", fmt(m.trade_range)},    {"RPT", fmt(m.ret_per_trade)}};
}

inline std::string thresholds_list(const std::vector<Thresholds>& ths) {
  std::string out;
  for (const auto& th : ths) out += (out.empty() ? "" : ";") + fmt(th.s_open) + ":" + fmt(th.s_close);
  return out;
}

struct InSampleSweep {
  PairSpec pair;
  SweepResult sweep;
  SweepCell best;
};

inline InSampleSweep sweep_in_sample(const RunConfig& cfg, const AlignedPair& data, PeriodRange in_range) {
  InSampleSweep out;
  out.pair = form_in_sample(cfg, data, in_range);
  const auto signals = period_signals(out.pair, data, in_range, cfg.study.window, cfg.study.dt);
  std::vector<double> so = cfg.study.s_open_grid, sc = cfg.study.s_close_grid;
  if (cfg.so) {
    so = {*cfg.so};
    sc = {*cfg.sc};
  }
  out.sweep = sweep_signals(out.pair, data, signals, so, sc, cfg.study.workers);
  out.best = select_best(out.sweep.cells);
  return out;
}

}  // namespace detail

/// Fitted OU parameters and the selected hedge amount for the in-sample window.
inline CommandOutput cmd_fit(const RunConfig& cfg) {
  const auto data = load_pair(cfg);
  const auto in_range = period_range(data, cfg.study, cfg.in_length(), Period::InSample);
  const auto pair = detail::form_in_sample(cfg, data, in_range);
  CommandOutput out;
  out.text = "theta=" + fmt(pair.fitted.theta) + "\nmu=" + fmt(pair.fitted.mu) +
             "\nsigma=" + fmt(pair.fitted.sigma) + "\navg_loglik=" + fmt(pair.fitted.avg_loglik) +
             "\nb_star=" + fmt(pair.invest_b) + "\n";
  return out;
}

/// Heatmap CSVs for the in-sample grid plus best.txt comparing in/out of sample.
inline CommandOutput cmd_sweep(const RunConfig& cfg) {
  const auto data = load_pair(cfg);
  const auto in_range = period_range(data, cfg.study, cfg.in_length(), Period::InSample);
  const auto out_range = period_range(data, cfg.study, cfg.in_length(), Period::OutOfSample);
  const auto in = detail::sweep_in_sample(cfg, data, in_range);
  const auto out_signals = period_signals(in.pair, data, out_range, cfg.study.window, cfg.study.dt);
  const Metrics out_metrics = compute_metrics(run_backtest(in.pair, data, out_signals, in.best.thresholds));

  const std::vector<std::pair<std::string, std::optional<double> Metrics::*>> optional_fields{
      {"sharpe", &Metrics::sharpe}, {"trade_range", &Metrics::trade_range}, {"ret_per_trade", &Metrics::ret_per_trade}};
  const std::vector<std::pair<std::string, double Metrics::*>> plain_fields{
      {"ann_return", &Metrics::ann_return}, {"max_drawdown", &Metrics::max_drawdown}, {"trade_freq", &Metrics::trade_freq}};

  CommandOutput result;
  const auto heatmap = [&](const std::string& name, auto value_of) {
    std::string csv = "s_open,s_close,value\n";
    for (const auto& c : in.sweep.cells)
      csv += fmt(c.thresholds.s_open) + "," + fmt(c.thresholds.s_close) + "," + fmt(value_of(c.metrics)) + "\n";
    result.files.push_back({"heatmap_" + name + ".csv", std::move(csv)});
  };
  for (const auto& [name, field] : optional_fields) heatmap(name, [f = field](const Metrics& m) { return m.*f; });
  for (const auto& [name, field] : plain_fields) heatmap(name, [f = field](const Metrics& m) { return m.*f; });

  std::string best = "pair=" + cfg.asset_a + "," + cfg.asset_b + "\n";
  best += "b_star=" + fmt(in.pair.invest_b) + "\n";
  best += "s_open=" + fmt(in.best.thresholds.s_open) + "\n";
  best += "s_close=" + fmt(in.best.thresholds.s_close) + "\n";
  best += "cells=" + std::to_string(in.sweep.cells.size()) + "\n";
  best += "skipped=" + std::to_string(in.sweep.skipped.size()) + "\n";
  best += "skipped_cells=" + detail::thresholds_list(in.sweep.skipped) + "\n";
  best += "metric,in_sample,out_of_sample\n";
  best += "Length," + std::to_string(in.best.metrics.k_days) + "," + std::to_string(out_metrics.k_days) + "\n";
  const auto in_rows = detail::metric_rows(in.best.metrics);
  const auto out_rows = detail::metric_rows(out_metrics);
  for (std::size_t i = 0; i < in_rows.size(); ++i)
    best += in_rows[i].first + "," + in_rows[i].second + "," + out_rows[i].second + "\n";
  result.files.push_back({"best.txt", best});
  result.text = best;
  return result;
}

/// Simulates the fitted in-sample OU process, refits it, and tabulates both parameter sets.
inline CommandOutput cmd_simulate(const RunConfig& cfg) {
  const auto data = load_pair(cfg);
  const auto in_range = period_range(data, cfg.study, cfg.in_length(), Period::InSample);
  const auto pair = detail::form_in_sample(cfg, data, in_range);
  const double x0 = portfolio_values(pair, data.slice(in_range.begin, in_range.begin + 2)).values().front();
  const auto path = simulate(pair.fitted, x0, cfg.sim_steps, cfg.study.dt, cfg.seed, data.dates[in_range.begin]);
  const auto refit = fit_mle(path, cfg.study.dt);

  const std::string label = cfg.asset_a + "-" + cfg.asset_b;
  CommandOutput out;
  out.text = "pair,price,theta,mu,sigma,avg_loglik\n" + detail::params_row(label, "empirical", pair.fitted) +
             detail::params_row(label, "simulated", refit);
  std::string csv = "date,x\n";
  for (std::size_t i = 0; i < path.size(); ++i)
    csv += path.dates()[i].iso() + "," + detail::shortest(path.values()[i]) + "\n";
  out.files.push_back({"simulated_path.csv", std::move(csv)});
  out.files.push_back({"simulate_table.csv", out.text});
  return out;
}

/// Per-day ledgers for the in-sample and out-of-sample periods. Uses so/sc when
/// given, otherwise the best in-sample thresholds.
inline CommandOutput cmd_backtest(const RunConfig& cfg) {
  const auto data = load_pair(cfg);
  const auto in_range = period_range(data, cfg.study, cfg.in_length(), Period::InSample);
  const auto out_range = period_range(data, cfg.study, cfg.in_length(), Period::OutOfSample);

  PairSpec pair;
  Thresholds th;
  if (cfg.so) {
    pair = detail::form_in_sample(cfg, data, in_range);
    th = Thresholds{*cfg.so, *cfg.sc};
  } else {
    const auto in = detail::sweep_in_sample(cfg, data, in_range);
    pair = in.pair;
    th = in.best.thresholds;
  }

  CommandOutput out;
  out.text = "s_open=" + fmt(th.s_open) + "\ns_close=" + fmt(th.s_close) + "\n";
  const auto emit = [&](const std::string& name, PeriodRange range) {
    const auto signals = period_signals(pair, data, range, cfg.study.window, cfg.study.dt);
    const auto ledger = run_backtest(pair, data, signals, th);
    const auto equity = equity_curve(ledger);
    const auto values = portfolio_values(pair, data);
    const std::size_t anchor = range.end - signals.size() - 1;
    std::string csv = "date,x,s_score,position,daily_return,equity\n";
    for (std::size_t i = 1; i < ledger.size(); ++i)
      csv += ledger.dates[i].iso() + "," + fmt(values.values()[anchor + i]) + "," + fmt(signals[i - 1].s_score) +
             "," + std::to_string(ledger.positions[i]) + "," + fmt(ledger.daily_returns[i]) + "," +
             fmt(equity[i]) + "\n";
    out.files.push_back({name, std::move(csv)});
    out.text += name + "_rows=" + std::to_string(signals.size()) + "\n";
  };
  emit("backtest_in.csv", in_range);
  emit("backtest_out.csv", out_range);
  return out;
}

/// In-sample length study written as key=value lines.
inline CommandOutput cmd_study(const RunConfig& cfg) {
  const auto data = load_pair(cfg);
  const auto report = run_study(data, cfg.study);
  std::string doc = "pair=" + cfg.asset_a + "," + cfg.asset_b + "\n";
  doc += "out_sample_start=" + cfg.study.out_sample_start.iso() + "\n";
  doc += "out_sample_end=" + cfg.study.out_sample_end.iso() + "\n";
  doc += "sections=" + std::to_string(report.sections.size()) + "\n";
  for (std::size_t i = 0; i < report.sections.size(); ++i) {
    const auto& s = report.sections[i];
    const std::string p = "section." + std::to_string(i + 1) + ".";
    doc += p + "in_sample_length=" + std::to_string(s.in_sample_length) + "\n";
    doc += p + "b_star=" + fmt(s.pair.invest_b) + "\n";
    doc += p + "theta=" + fmt(s.pair.fitted.theta) + "\n";
    doc += p + "mu=" + fmt(s.pair.fitted.mu) + "\n";
    doc += p + "sigma=" + fmt(s.pair.fitted.sigma) + "\n";
    doc += p + "avg_loglik=" + fmt(s.pair.fitted.avg_loglik) + "\n";
    doc += p + "s_open=" + fmt(s.best_in.thresholds.s_open) + "\n";
    doc += p + "s_close=" + fmt(s.best_in.thresholds.s_close) + "\n";
    doc += p + "skipped_cells=" + detail::thresholds_list(s.in_sweep.skipped) + "\n";
    doc += p + "in.Length=" + std::to_string(s.best_in.metrics.k_days) + "\n";
    for (const auto& [k, v] : detail::metric_rows(s.best_in.metrics)) doc += p + "in." + k + "=" + v + "\n";
    doc += p + "out.Length=" + std::to_string(s.out_metrics.k_days) + "\n";
    for (const auto& [k, v] : detail::metric_rows(s.out_metrics)) doc += p + "out." + k + "=" + v + "\n";
  }
  doc += "best_in_sample_length=" +
         (report.best_section ? std::to_string(report.sections[*report.best_section].in_sample_length)
                              : std::string("NA")) +
         "\n";
  CommandOutput out;
  out.text = doc;
  out.files.push_back({"study.txt", doc});
  return out;
}

}  // namespace oupairs
