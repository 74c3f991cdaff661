#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oupairs/data_ingest.hpp"
#include "oupairs/ou_model.hpp"
#include "oupairs/parallel.hpp"

namespace oupairs {

/// Static pair portfolio: long alpha shares of asset_a, short beta shares of asset_b.
struct PairSpec {
  std::string asset_a;
  std::string asset_b;
  double invest_a = 1.0;  // dollars long in asset_a at formation
  double invest_b = 0.0;  // dollars short in asset_b at formation
  double alpha = 0.0;
  double beta = 0.0;
  OuParams fitted;

  bool operator==(const PairSpec&) const = default;
};

/// {0.001, 0.002, ..., 1.000}, built from integer indices.
inline std::vector<double> default_b_grid() {
  std::vector<double> grid(1000);
  for (int i = 0; i < 1000; ++i) grid[i] = (i + 1) / 1000.0;
  return grid;
}

inline double portfolio_value(double alpha, double beta, double price_a, double price_b) {
  return alpha * price_a - beta * price_b;
}

/// Share weights fixed from the first date of `data`.
inline PairSpec make_pair(const AlignedPair& data, double invest_b, double invest_a = 1.0) {
  PairSpec pair;
  pair.asset_a = data.series_a.asset_id();
  pair.asset_b = data.series_b.asset_id();
  pair.invest_a = invest_a;
  pair.invest_b = invest_b;
  pair.alpha = invest_a / data.series_a.prices().front();
  pair.beta = invest_b / data.series_b.prices().front();
  return pair;
}

inline ValueSeries portfolio_values(const PairSpec& pair, const AlignedPair& data) {
  if (pair.asset_a != data.series_a.asset_id() || pair.asset_b != data.series_b.asset_id())
    throw Error(ErrorKind::TickerMismatch, "pair " + pair.asset_a + "/" + pair.asset_b +
                                               " does not match data " +
                                               data.series_a.asset_id() + "/" +
                                               data.series_b.asset_id());
  const auto& pa = data.series_a.prices();
  const auto& pb = data.series_b.prices();
  std::vector<double> x(data.size());
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = portfolio_value(pair.alpha, pair.beta, pa[t], pb[t]);
  return ValueSeries(data.dates, std::move(x));
}

/// Sweeps the short-leg dollar amount over `b_grid` and keeps the OU fit with the
/// highest average log-likelihood; equal likelihoods resolve to the smallest B.
/// `data` is exactly the formation window. The reduction is independent of `workers`.
inline PairSpec form_pair(const AlignedPair& data, std::span<const double> b_grid, double dt,
                          unsigned workers = 1) {
  if (b_grid.empty()) throw Error(ErrorKind::InvalidArgument, "b_grid is empty");
  for (double b : b_grid)
    if (!(b > 0.0 && b <= 1.0)) throw Error(ErrorKind::InvalidArgument, "b_grid entries must lie in (0, 1]");
  if (data.size() < 3) throw Error(ErrorKind::InsufficientData, "formation window needs >= 3 dates");

  std::vector<std::optional<PairSpec>> fits(b_grid.size());
  detail::parallel_for(b_grid.size(), workers, [&](std::size_t i) {
    PairSpec pair = make_pair(data, b_grid[i]);
    try {
      pair.fitted = fit_mle(portfolio_values(pair, data), dt);
      fits[i] = pair;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateSeries && e.kind() != ErrorKind::NoConvergence) throw;
    }
  });

  const PairSpec* best = nullptr;
  for (const auto& f : fits) {
    if (!f) continue;
    const bool better = !best || f->fitted.avg_loglik > best->fitted.avg_loglik ||
                        (f->fitted.avg_loglik == best->fitted.avg_loglik && f->invest_b < best->invest_b);
    if (better) best = &*f;
  }
  if (!best) throw Error(ErrorKind::AllFitsFailed, "no hedge amount produced a valid OU fit");
  return *best;
}

}  // namespace oupairs
