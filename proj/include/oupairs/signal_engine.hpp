#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "oupairs/ou_model.hpp"

namespace oupairs {

/// Entry threshold S_o and exit threshold S_c on the s-score.
struct Thresholds {
  double s_open = 0.0;
  double s_close = 0.0;

  bool valid() const { return s_open >= 0.0 && s_close >= 0.0 && s_open > s_close; }
  bool operator==(const Thresholds&) const = default;
};

inline Thresholds make_thresholds(double s_open, double s_close) {
  Thresholds th{s_open, s_close};
  if (!th.valid())
    throw Error(ErrorKind::InvalidArgument, "thresholds need s_open > s_close >= 0");
  return th;
}

enum class PositionState { Flat, Long, Short };

constexpr int position_sign(PositionState s) {
  return s == PositionState::Long ? 1 : s == PositionState::Short ? -1 : 0;
}

struct SignalDay {
  Date date;
  double s_score = 0.0;
  OuParams window_params;

  bool operator==(const SignalDay&) const = default;
};

/// Deviation from theta in equilibrium standard deviations.
inline double s_score(double x, const OuParams& p) { return (x - p.theta) / equilibrium_sd(p); }

/// One day of the contrarian rule table. Opens only from Flat, so a close
/// consumes the day and Long/Short never flip directly.
constexpr PositionState step_position(PositionState state, double s, const Thresholds& th) {
  switch (state) {
    case PositionState::Flat:
      if (s < -th.s_open) return PositionState::Long;
      if (s > th.s_open) return PositionState::Short;
      return PositionState::Flat;
    case PositionState::Long:
      return s > -th.s_close ? PositionState::Flat : PositionState::Long;
    case PositionState::Short:
      return s < th.s_close ? PositionState::Flat : PositionState::Short;
  }
  return state;
}

/// Daily s-scores from a trailing-window refit.
///
/// Day t (t >= window) is scored against a fit on values[t-window, t). A window
/// whose fit fails reuses the last successful parameters; days before the
/// first successful fit produce no signal, so the output is a contiguous
/// suffix of the input dates.
inline std::vector<SignalDay> rolling_signals(const ValueSeries& values, std::size_t window, double dt) {
  if (window < 3) throw Error(ErrorKind::InvalidArgument, "window must be >= 3");
  if (values.size() < window + 1)
    throw Error(ErrorKind::WindowTooLong, "series has " + std::to_string(values.size()) +
                                              " points, window needs " + std::to_string(window + 1));
  const auto& x = values.values();
  std::vector<SignalDay> out;
  out.reserve(x.size() - window);
  std::optional<OuParams> last;
  for (std::size_t t = window; t < x.size(); ++t) {
    try {
      last = fit_mle(std::span<const double>(x).subspan(t - window, window), dt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateSeries && e.kind() != ErrorKind::NoConvergence) throw;
    }
    if (!last) continue;
    out.push_back({values.dates()[t], s_score(x[t], *last), *last});
  }
  return out;
}

}  // namespace oupairs
