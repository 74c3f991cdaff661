#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oupairs/date.hpp"
#include "oupairs/error.hpp"

namespace oupairs {

/// Years per trading day.
inline constexpr double kTradingDaysPerYear = 252.0;
inline constexpr double kDailyDt = 1.0 / kTradingDaysPerYear;

/// Fitted Ornstein-Uhlenbeck parameters for dx = mu (theta - x) dt + sigma dB.
struct OuParams {
  double theta = 0.0;       // long-run mean
  double mu = 1.0;          // mean-reversion speed, per year
  double sigma = 1.0;       // volatility per sqrt(year)
  double avg_loglik = 0.0;  // average transition log-density at these parameters

  bool valid() const { return mu > 0.0 && sigma > 0.0 && std::isfinite(theta); }
  bool operator==(const OuParams&) const = default;
};

/// Portfolio values on trading dates.
class ValueSeries {
 public:
  ValueSeries() = default;
  ValueSeries(std::vector<Date> dates, std::vector<double> values)
      : dates_(std::move(dates)), values_(std::move(values)) {
    if (dates_.size() != values_.size())
      throw Error(ErrorKind::InvalidArgument, "dates and values differ in length");
    if (values_.size() < 2) throw Error(ErrorKind::InvalidArgument, "value series needs >= 2 points");
    for (std::size_t i = 1; i < dates_.size(); ++i)
      if (!(dates_[i - 1] < dates_[i]))
        throw Error(ErrorKind::InvalidArgument, "value series dates must increase");
  }

  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool operator==(const ValueSeries&) const = default;

 private:
  std::vector<Date> dates_;
  std::vector<double> values_;
};

/// Mean and variance of the exact one-step transition x_{t+dt} | x_t.
struct Transition {
  double decay;     // e^{-mu dt}
  double variance;  // sigma^2 (1 - e^{-2 mu dt}) / (2 mu)
};

inline Transition transition(const OuParams& p, double dt) {
  return {std::exp(-p.mu * dt), p.sigma * p.sigma * -std::expm1(-2.0 * p.mu * dt) / (2.0 * p.mu)};
}

/// Standard deviation of the stationary distribution, sigma / sqrt(2 mu).
inline double equilibrium_sd(const OuParams& p) {
  if (!p.valid()) throw Error(ErrorKind::InvalidArgument, "OU parameters require mu > 0, sigma > 0");
  return p.sigma / std::sqrt(2.0 * p.mu);
}

namespace detail {

inline bool is_degenerate(std::span<const double> values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return var <= 1e-18 * mean * mean;
}

}  // namespace detail

/// Average exact-transition log-density over the n = len - 1 consecutive pairs.
inline double avg_log_likelihood(std::span<const double> values, const OuParams& p, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (!p.valid()) throw Error(ErrorKind::InvalidArgument, "OU parameters require mu > 0, sigma > 0");
  if (values.size() < 2) throw Error(ErrorKind::InvalidArgument, "likelihood needs >= 2 points");
  if (detail::is_degenerate(values))
    throw Error(ErrorKind::DegenerateSeries, "series is constant");

  const auto [decay, variance] = transition(p, dt);
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * variance);
  double sum = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double resid = values[i] - (p.theta + (values[i - 1] - p.theta) * decay);
    sum += log_norm - resid * resid / (2.0 * variance);
  }
  return sum / static_cast<double>(values.size() - 1);
}

inline double avg_log_likelihood(const ValueSeries& series, const OuParams& p, double dt) {
  return avg_log_likelihood(std::span<const double>(series.values()), p, dt);
}

/// Bounds and tolerance of the one-dimensional search over mu.
struct MleOptions {
  double mu_min = 1e-4;
  double mu_max = 1e4;
  double rel_tol = 1e-10;
};

/// Maximum-likelihood OU fit.
///
/// For a fixed mu the AR(1) decay a = e^{-mu dt} is fixed, and theta and the
/// conditional variance have closed forms (least squares with intercept). The
/// profiled residual variance is convex in a and a is monotone in mu, so a
/// golden-section search on ln(mu) finds the global optimum. An optimum pinned
/// to either search bound means the series is not mean-reverting inside the
/// range and is reported as NoConvergence.
inline OuParams fit_mle(std::span<const double> values, double dt, const MleOptions& opt = {}) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (values.size() < 3) throw Error(ErrorKind::InvalidArgument, "fit needs >= 3 points");
  if (detail::is_degenerate(values))
    throw Error(ErrorKind::DegenerateSeries, "series is constant");

  const std::size_t n = values.size() - 1;
  double mean_next = 0.0, mean_prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_prev += values[i];
    mean_next += values[i + 1];
  }
  mean_prev /= static_cast<double>(n);
  mean_next /= static_cast<double>(n);
  std::vector<double> d_next(n), d_prev(n);
  for (std::size_t i = 0; i < n; ++i) {
    d_prev[i] = values[i] - mean_prev;
    d_next[i] = values[i + 1] - mean_next;
  }

  // Unconstrained optimum of the convex profile is the least-squares slope.
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += d_next[i] * d_prev[i];
    sxx += d_prev[i] * d_prev[i];
  }
  const double slope = sxy / sxx;
  if (!(slope > std::exp(-opt.mu_max * dt)) || !(slope < std::exp(-opt.mu_min * dt)))
    throw Error(ErrorKind::NoConvergence, "no mean-reverting optimum inside the mu search range");

  const auto resid_var = [&](double log_mu) {
    const double a = std::exp(-std::exp(log_mu) * dt);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = d_next[i] - a * d_prev[i];
      s += e * e;
    }
    return s / static_cast<double>(n);
  };

  const double lo_bound = std::log(opt.mu_min);
  const double hi_bound = std::log(opt.mu_max);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = lo_bound, hi = hi_bound;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = resid_var(x1), f2 = resid_var(x2);
  while (hi - lo > opt.rel_tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = resid_var(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = resid_var(x2);
    }
  }
  const double log_mu = f1 <= f2 ? x1 : x2;
  constexpr double kEdge = 1e-6;
  if (log_mu - lo_bound < kEdge || hi_bound - log_mu < kEdge)
    throw Error(ErrorKind::NoConvergence, "likelihood maximum lies on the mu search bound");

  const double mu = std::exp(log_mu);
  const double a = std::exp(-mu * dt);
  const double cond_var = resid_var(log_mu);
  if (!(cond_var > 0.0) || !std::isfinite(cond_var))
    throw Error(ErrorKind::DegenerateSeries, "zero conditional variance");

  OuParams p;
  p.mu = mu;
  p.theta = (mean_next - a * mean_prev) / (1.0 - a);
  p.sigma = std::sqrt(cond_var * 2.0 * mu / -std::expm1(-2.0 * mu * dt));
  p.avg_loglik = avg_log_likelihood(values, p, dt);
  return p;
}

inline OuParams fit_mle(const ValueSeries& series, double dt, const MleOptions& opt = {}) {
  return fit_mle(std::span<const double>(series.values()), dt, opt);
}

/// Exact-discretization path of n_steps + 1 values starting at x0, dated on business days.
inline ValueSeries simulate(const OuParams& p, double x0, std::size_t n_steps, double dt,
                            std::uint64_t seed, Date start = Date(2000, 1, 3)) {
  if (n_steps < 1) throw Error(ErrorKind::InvalidArgument, "n_steps must be >= 1");
  if (!p.valid()) throw Error(ErrorKind::InvalidArgument, "OU parameters require mu > 0, sigma > 0");
  const auto [decay, variance] = transition(p, dt);
  const double step_sd = std::sqrt(variance);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n_steps + 1);
  x[0] = x0;
  for (std::size_t i = 1; i <= n_steps; ++i)
    x[i] = p.theta + (x[i - 1] - p.theta) * decay + step_sd * normal(rng);
  return ValueSeries(business_days(start, n_steps + 1), std::move(x));
}

}  // namespace oupairs
