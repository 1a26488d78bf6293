#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ivpvae/errors.hpp"

namespace ivpvae::data {

/// One irregularly sampled multivariate series. `values` and `mask` are
/// row-major L x D; unobserved entries hold 0.
struct IrregularSeries {
  std::string series_id;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<char> mask;
  std::size_t num_vars = 0;
  std::optional<int> label;

  std::size_t length() const { return times.size(); }
  double value(std::size_t i, std::size_t d) const { return values[i * num_vars + d]; }
  bool observed(std::size_t i, std::size_t d) const { return mask[i * num_vars + d] != 0; }

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (char m : mask) n += m != 0;
    return n;
  }

  void validate() const {
    const std::string who = "series '" + series_id + "'";
    if (times.empty()) throw DataError(who + ": no timesteps");
    if (num_vars == 0) throw DataError(who + ": zero variables");
    if (values.size() != times.size() * num_vars || mask.size() != values.size()) {
      throw DataError(who + ": values/mask size does not match L x D");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!std::isfinite(times[i])) throw DataError(who + ": non-finite time at step " + std::to_string(i));
      if (i > 0 && times[i] < times[i - 1]) throw DataError(who + ": times are not sorted");
      bool any = false;
      for (std::size_t d = 0; d < num_vars; ++d) {
        if (!observed(i, d)) continue;
        any = true;
        if (!std::isfinite(value(i, d))) {
          throw DataError(who + ": non-finite value at step " + std::to_string(i));
        }
      }
      if (!any) throw DataError(who + ": step " + std::to_string(i) + " has no observed variable");
    }
    if (label && *label != 0 && *label != 1) throw DataError(who + ": label must be 0 or 1");
  }

  bool operator==(const IrregularSeries&) const = default;
};

/// A collection of series sharing one variable list.
struct Dataset {
  std::vector<std::string> variables;
  std::vector<IrregularSeries> series;

  std::size_t num_vars() const { return variables.size(); }
  std::size_t size() const { return series.size(); }

  Dataset subset(const std::vector<std::size_t>& indices) const {
    Dataset out{variables, {}};
    out.series.reserve(indices.size());
    for (std::size_t i : indices) out.series.push_back(series.at(i));
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

/// Steps with lo <= t <= hi (hi inclusive) or lo < t <= hi (`open_lo`).
/// Returns an empty series (L = 0) if nothing falls inside.
inline IrregularSeries time_window(const IrregularSeries& s, double lo, double hi, bool open_lo = false) {
  IrregularSeries out;
  out.series_id = s.series_id;
  out.num_vars = s.num_vars;
  out.label = s.label;
  for (std::size_t i = 0; i < s.length(); ++i) {
    const double t = s.times[i];
    if ((open_lo ? t > lo : t >= lo) && t <= hi) {
      out.times.push_back(t);
      for (std::size_t d = 0; d < s.num_vars; ++d) {
        out.values.push_back(s.value(i, d));
        out.mask.push_back(s.mask[i * s.num_vars + d]);
      }
    }
  }
  return out;
}

/// Input part (t <= boundary) and forecast part (t > boundary).
struct WindowedSeries {
  IrregularSeries input;
  IrregularSeries target;
};

inline WindowedSeries split_at(const IrregularSeries& s, double boundary) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {time_window(s, -inf, boundary), time_window(s, boundary, inf, true)};
}

}  // namespace ivpvae::data
