#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ivpvae/seriesdata/series.hpp"
#include "ivpvae/util/kvfile.hpp"
#include "ivpvae/util/log.hpp"

namespace ivpvae::data {

inline constexpr double kStdFloor = 1e-6;

/// Per-variable standardization plus the time horizon used to rescale
/// timestamps.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<char> seen;
  double horizon = 1.0;

  std::size_t num_vars() const { return mean.size(); }
  double normalize(std::size_t d, double x) const { return (x - mean[d]) / std[d]; }
  double denormalize(std::size_t d, double z) const { return z * std[d] + mean[d]; }

  bool operator==(const NormStats&) const = default;
};

/// Statistics over observed entries of the training split only. Variables
/// that are never observed get an identity transform and a warning.
inline NormStats compute_norm(const Dataset& train, double horizon) {
  if (!(horizon > 0) || !std::isfinite(horizon)) throw ConfigError("time horizon must be a positive number");
  const std::size_t D = train.num_vars();
  NormStats st;
  st.horizon = horizon;
  st.mean.assign(D, 0.0);
  st.std.assign(D, 1.0);
  st.seen.assign(D, 0);
  for (std::size_t d = 0; d < D; ++d) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : train.series)
      for (std::size_t i = 0; i < s.length(); ++i)
        if (s.observed(i, d)) {
          sum += s.value(i, d);
          ++n;
        }
    if (n == 0) {
      warn("variable '" + train.variables[d] + "' is never observed in the training split; leaving it unscaled");
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : train.series)
      for (std::size_t i = 0; i < s.length(); ++i)
        if (s.observed(i, d)) ss += (s.value(i, d) - mean) * (s.value(i, d) - mean);
    st.mean[d] = mean;
    st.std[d] = std::max(kStdFloor, std::sqrt(ss / static_cast<double>(n)));
    st.seen[d] = 1;
  }
  return st;
}

inline IrregularSeries apply_norm(const IrregularSeries& s, const NormStats& st) {
  if (s.num_vars != st.num_vars()) throw DataError("series '" + s.series_id + "' does not match the normalization");
  IrregularSeries out = s;
  for (double& t : out.times) t /= st.horizon;
  for (std::size_t i = 0; i < s.length(); ++i)
    for (std::size_t d = 0; d < s.num_vars; ++d)
      if (s.observed(i, d)) out.values[i * s.num_vars + d] = st.normalize(d, s.value(i, d));
  return out;
}

inline IrregularSeries invert_norm(const IrregularSeries& s, const NormStats& st) {
  if (s.num_vars != st.num_vars()) throw DataError("series '" + s.series_id + "' does not match the normalization");
  IrregularSeries out = s;
  for (double& t : out.times) t *= st.horizon;
  for (std::size_t i = 0; i < s.length(); ++i)
    for (std::size_t d = 0; d < s.num_vars; ++d)
      if (s.observed(i, d)) out.values[i * s.num_vars + d] = st.denormalize(d, s.value(i, d));
  return out;
}

inline Dataset apply_norm(const Dataset& ds, const NormStats& st) {
  Dataset out{ds.variables, {}};
  out.series.reserve(ds.size());
  for (const auto& s : ds.series) out.series.push_back(apply_norm(s, st));
  return out;
}

}  // namespace ivpvae::data
