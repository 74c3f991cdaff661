#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace oupairs;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool within(double got, double truth, double rel) { return std::abs(got - truth) <= rel * std::abs(truth); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome mle_recovery() {
  const auto start = Clock::now();
  bool ok = true;
  std::string failed;
  for (const auto& col : testing::reference_pairs()) {
    const OuParams truth{col.theta, col.mu, col.sigma, 0.0};
    std::vector<double> th, mu, sg;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto fit = fit_mle(simulate(truth, truth.theta, 5000, kDailyDt, seed), kDailyDt);
      th.push_back(fit.theta);
      mu.push_back(fit.mu);
      sg.push_back(fit.sigma);
    }
    const double mt = median(th), mm = median(mu), ms = median(sg);
    if (!within(mt, col.theta, 0.05) || !within(mm, col.mu, 0.30) || !within(ms, col.sigma, 0.05)) {
      ok = false;
      failed += std::string(" ") + col.pair + "(theta " + num(mt) + "/" + num(col.theta) + ", mu " + num(mm) + "/" +
                num(col.mu) + ", sigma " + num(ms) + "/" + num(col.sigma) + ")";
    }
  }
  const double secs = seconds_since(start);
  ok = ok && secs < 60.0;
  return {ok, num(secs) + " s" + (failed.empty() ? std::string() : "; outside tolerance:" + failed)};
}

Outcome likelihood_argmax() {
  const std::vector<OuParams> truths{{0.9319, 9.9715, 0.1969, 0}, {1.2082, 0.3042, 0.1482, 0},
                                     {0.2455, 15.7538, 0.1466, 0}, {0.6211, 6.5194, 0.1278, 0},
                                     {0.5213, 2.3036, 0.1267, 0}};
  std::size_t checked = 0, beaten = 0;
  for (std::size_t s = 0; s < truths.size(); ++s) {
    const auto path = simulate(truths[s], truths[s].theta, 1000, kDailyDt, 100 + s);
    const auto fit = fit_mle(path, kDailyDt);
    const double sd = equilibrium_sd(fit);
    for (int i = 0; i < 20; ++i) {
      const double theta = fit.theta + sd * (-1.0 + (i + 0.5) / 10.0);
      for (int j = 0; j < 20; ++j) {
        const double mu = fit.mu * std::exp(-1.0 + (j + 0.5) / 10.0);
        for (int k = 0; k < 20; ++k) {
          const double sigma = fit.sigma * (0.7 + 0.6 * (k + 0.5) / 20.0);
          ++checked;
          if (avg_log_likelihood(path, {theta, mu, sigma, 0.0}, kDailyDt) > fit.avg_loglik) ++beaten;
        }
      }
    }
  }
  return {beaten == 0, std::to_string(checked) + " grid points, " + std::to_string(beaten) + " above the fit"};
}

double field(const std::string& row, std::size_t index) {
  std::istringstream in(row);
  std::string cell;
  for (std::size_t i = 0; i <= index; ++i) std::getline(in, cell, ',');
  return std::stod(cell);
}

RunConfig world_config(const fs::path& root, const testing::SyntheticWorld& world) {
  RunConfig cfg;
  cfg.data_dir = root / "data";
  cfg.asset_a = world.data.series_a.asset_id();
  cfg.asset_b = world.data.series_b.asset_id();
  cfg.study.in_sample_lengths = {250};
  cfg.study.out_sample_start = world.data.dates[310];
  cfg.study.out_sample_end = world.data.dates.back();
  cfg.output_dir = root / "out";
  cfg.seed = 7;
  cfg.study.workers = 4;
  return cfg;
}

Outcome simulate_table() {
  const auto root = testing::fresh_dir("acceptance_simulate");
  const auto world = testing::synthetic_world(12, 430, 0.4, 12.0, 0.04, 0.35, "CCI", "HCP");
  testing::write_world(world, root / "data");
  const auto result = cmd_simulate(world_config(root, world));
  fs::remove_all(root);
  std::istringstream in(result.text);
  std::string header, empirical, simulated;
  std::getline(in, header);
  std::getline(in, empirical);
  std::getline(in, simulated);
  const double et = field(empirical, 2), em = field(empirical, 3), es = field(empirical, 4);
  const double st = field(simulated, 2), sm = field(simulated, 3), ss = field(simulated, 4);
  const bool ok = within(st, et, 0.05) && within(sm, em, 0.30) && within(ss, es, 0.05);
  return {ok, "empirical (" + num(et) + ", " + num(em) + ", " + num(es) + ") simulated (" + num(st) + ", " + num(sm) +
                  ", " + num(ss) + ")"};
}

Outcome state_machine_oracle() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0, 1.5);
  std::uniform_int_distribution<int> so_i(0, 20), sc_i(0, 20);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Thresholds th{(100 + 5 * so_i(rng)) / 100.0, (5 * sc_i(rng)) / 100.0};
    if (!th.valid()) th.s_close = 0.0;
    std::vector<double> path(500);
    for (auto& v : path) v = z(rng);
    PositionState s = PositionState::Flat;
    std::vector<int> got;
    for (double v : path) got.push_back(position_sign(s = step_position(s, v, th)));
    if (got != testing::reference_positions(path, th.s_open, th.s_close)) ++mismatches;
  }
  return {mismatches == 0, "1000 paths, " + std::to_string(mismatches) + " mismatches"};
}

bool identities_hold(const TradeLedger& ledger, const Metrics& m) {
  bool ok = true;
  if (m.n_trades > 0) {
    const double n = static_cast<double>(m.n_trades);
    ok = ok && std::abs(*m.ret_per_trade * m.trade_freq - m.ann_return) <= 1e-12 * std::abs(m.ann_return);
    ok = ok && m.trade_freq == n * 252.0 / static_cast<double>(m.k_days);
    const double recovered = m.trade_freq * static_cast<double>(m.k_days) / 252.0;
    ok = ok && std::abs(recovered - n) <= 4 * std::numeric_limits<double>::epsilon() * n;
  } else {
    ok = ok && m.trade_freq == 0.0;
  }
  const auto v = equity_curve(ledger);
  ok = ok && ((m.max_drawdown == 0.0) == std::is_sorted(v.begin(), v.end()));
  return ok;
}

Outcome metric_identities() {
  std::size_t runs = 0, bad = 0;
  StudyConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto world = testing::synthetic_world(seed, 430);
    cfg.in_sample_lengths = {250};
    cfg.out_sample_start = world.data.dates[310];
    cfg.out_sample_end = world.data.dates.back();
    cfg.b_grid = {0.5};
    const auto range = period_range(world.data, cfg, 250, Period::InSample);
    const auto pair = form_pair(world.data.slice(range.begin, range.end), cfg.b_grid, cfg.dt);
    const auto signals = period_signals(pair, world.data, range, cfg.window, cfg.dt);
    for (double so : cfg.s_open_grid)
      for (double sc : cfg.s_close_grid) {
        const Thresholds th{so, sc};
        if (!th.valid()) continue;
        const auto ledger = run_backtest(pair, world.data, signals, th);
        ++runs;
        if (!identities_hold(ledger, compute_metrics(ledger))) ++bad;
      }
  }
  std::ifstream in(std::string(OUPAIRS_FIXTURE_DIR) + "/cci_hcp_like_ledger.csv");
  const auto fixture = read_ledger_csv(in);
  ++runs;
  if (!identities_hold(fixture, compute_metrics(fixture))) ++bad;
  return {bad == 0, std::to_string(runs) + " backtests, " + std::to_string(bad) + " violations"};
}

Outcome fixture_consistency() {
  std::ifstream in(std::string(OUPAIRS_FIXTURE_DIR) + "/cci_hcp_like_ledger.csv");
  const auto m = compute_metrics(read_ledger_csv(in));
  if (!m.ret_per_trade) return {false, "no trades in fixture"};
  const double ratio = m.ann_return / m.trade_freq;
  return {within(ratio, *m.ret_per_trade, 0.05) && within(*m.ret_per_trade, 0.034, 0.05),
          "AR/TF " + num(ratio) + ", RPT " + num(*m.ret_per_trade) + ", reference 0.034"};
}

Outcome hand_fixture() {
  TradeLedger l;
  l.dates = business_days(Date(2015, 1, 5), 4);
  l.positions = {1, 1, 1, 0};
  l.daily_returns = {0.0, 0.01, -0.005, 0.02};
  l.trades = trades_from_positions(l.positions);
  const auto m = compute_metrics(l);
  const double growth = 1.01 * 0.995 * 1.02;
  const double ann = std::pow(1.025049, 252.0 / 3.0) - 1.0;
  const bool ok = std::abs(equity_curve(l).back() - growth) <= 1e-9 && std::abs(growth - 1.025049) <= 1e-9 &&
                  std::abs(m.ann_return - ann) <= 1e-9 * std::max(1.0, ann) && m.trade_freq == 84.0 &&
                  m.trade_range && *m.trade_range == 3.0 && m.ret_per_trade &&
                  std::abs(*m.ret_per_trade - ann / 84.0) <= 1e-9;
  return {ok, "G " + num(equity_curve(l).back()) + ", TF " + num(m.trade_freq) + ", TR " + num(m.trade_range.value_or(0)) +
                  ", RPT " + num(m.ret_per_trade.value_or(0))};
}

Outcome sweep_determinism() {
  const auto world = testing::synthetic_world(2, 430);
  StudyConfig cfg;
  cfg.in_sample_lengths = {250};
  cfg.out_sample_start = world.data.dates[310];
  cfg.out_sample_end = world.data.dates.back();
  const auto range = period_range(world.data, cfg, 250, Period::InSample);
  const auto pair = form_pair(world.data.slice(range.begin, range.end), cfg.b_grid, cfg.dt, 4);
  cfg.workers = 1;
  const auto serial = run_sweep(pair, world.data, cfg, range);
  cfg.workers = 8;
  const auto parallel = run_sweep(pair, world.data, cfg, range);
  const auto so = default_s_open_grid(), sc = default_s_close_grid();
  bool exact = so.size() == 21 && sc.size() == 21;
  for (std::size_t i = 0; exact && i < 21; ++i) {
    char a[16], b[16];
    std::snprintf(a, sizeof a, "%zu.%02zu", (100 + 5 * i) / 100, (100 + 5 * i) % 100);
    std::snprintf(b, sizeof b, "%zu.%02zu", (5 * i) / 100, (5 * i) % 100);
    exact = so[i] == std::strtod(a, nullptr) && sc[i] == std::strtod(b, nullptr);
  }
  const std::size_t candidates = serial.cells.size() + serial.skipped.size();
  return {serial == parallel && exact && candidates == 441,
          std::to_string(candidates) + " candidates (" + std::to_string(serial.skipped.size()) +
              " skipped), workers 1 vs 8 " + (serial == parallel ? "identical" : "differ")};
}

// CCI-HCP-like dynamics on the default study calendar.
Outcome selection_sanity() {
  const auto start = Clock::now();
  const StudyConfig cfg;
  const std::size_t in_len = cfg.in_sample_lengths.front();
  const auto days = business_days(Date(2011, 1, 3), 1400);
  const std::size_t n_days =
      static_cast<std::size_t>(std::upper_bound(days.begin(), days.end(), cfg.out_sample_end) - days.begin());
  int wins = 0, worlds = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto world = testing::synthetic_world(seed, n_days, 0.5, 9.9715, 0.1969, 0.25);
    const auto in_range = period_range(world.data, cfg, in_len, Period::InSample);
    const auto out_range = period_range(world.data, cfg, in_len, Period::OutOfSample);
    const auto pair = form_pair(world.data.slice(in_range.begin, in_range.end), cfg.b_grid, cfg.dt, 8);
    auto run = cfg;
    run.workers = 8;
    const auto best = select_best(run_sweep(pair, world.data, run, in_range).cells);
    const auto out = run_sweep(pair, world.data, run, out_range);
    std::vector<double> sharpes;
    std::optional<double> chosen;
    for (const auto& c : out.cells) {
      const double s = c.metrics.sharpe.value_or(0.0);
      sharpes.push_back(s);
      if (c.thresholds == best.thresholds) chosen = s;
    }
    ++worlds;
    if (chosen && *chosen > median(sharpes)) ++wins;
  }
  const double secs = seconds_since(start);
  return {wins >= 14 && secs < 300.0,
          std::to_string(wins) + "/" + std::to_string(worlds) + " worlds above median, " + num(secs) + " s"};
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = std::string(OUPAIRS_CLI) + " " + args + " > " + stdout_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string snapshot(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + testing::read_file(f);
  return all;
}

Outcome cli_determinism() {
  const auto root = testing::fresh_dir("acceptance_cli");
  const auto world = testing::synthetic_world(12, 430, 0.4, 12.0, 0.04, 0.35, "CCI", "HCP");
  testing::write_world(world, root / "data");
  {
    std::ofstream cfg(root / "run.cfg");
    cfg << "data_dir = " << (root / "data").string() << "\npair = CCI,HCP\nin_sample_lengths = 250,124\n"
        << "out_sample_start = " << world.data.dates[310].iso() << "\nout_sample_end = " << world.data.dates.back().iso()
        << "\nseed = 7\nworkers = 4\n";
  }
  std::vector<std::string> differ;
  for (const char* command : {"fit", "sweep", "simulate", "backtest", "study"}) {
    std::string runs[2];
    for (int r = 0; r < 2; ++r) {
      const auto out = root / ("out" + std::to_string(r)) / command;
      const auto stdout_file = root / (std::string(command) + std::to_string(r) + ".txt");
      const int code = run_cli(std::string(command) + " --config " + (root / "run.cfg").string() + " --output_dir " +
                                   out.string(),
                               stdout_file);
      runs[r] = std::to_string(code) + "\n" + testing::read_file(stdout_file);
      if (fs::exists(out)) runs[r] += snapshot(out);
      if (code != 0) runs[r] += "#failed" + std::to_string(r);
    }
    if (runs[0] != runs[1]) differ.push_back(command);
  }
  fs::remove_all(root);
  std::string detail = "fit, sweep, simulate, backtest, study";
  for (const auto& c : differ) detail += "; " + c + " not reproducible";
  return {differ.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"MLE recovery", mle_recovery},
      {"likelihood argmax", likelihood_argmax},
      {"empirical vs simulated table", simulate_table},
      {"state-machine oracle", state_machine_oracle},
      {"metric identities", metric_identities},
      {"fixture AR/TF vs RPT", fixture_consistency},
      {"three-day hand fixture", hand_fixture},
      {"sweep determinism", sweep_determinism},
      {"selection sanity", selection_sanity},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
