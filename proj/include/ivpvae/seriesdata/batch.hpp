#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "ivpvae/seriesdata/series.hpp"

namespace ivpvae::data {

/// Series padded to a common length. Position (b, l) is real iff
/// step_mask[b * max_len + l]; padding carries zero values and false masks.
struct PaddedBatch {
  std::size_t batch_size = 0;
  std::size_t max_len = 0;
  std::size_t num_vars = 0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<char> var_mask;
  std::vector<char> step_mask;
  std::vector<std::size_t> lengths;
  std::optional<std::vector<int>> labels;
  /// Index of each row in the source collection.
  std::vector<std::size_t> members;

  double time(std::size_t b, std::size_t l) const { return times[b * max_len + l]; }
  double value(std::size_t b, std::size_t l, std::size_t d) const {
    return values[(b * max_len + l) * num_vars + d];
  }
  bool observed(std::size_t b, std::size_t l, std::size_t d) const {
    return var_mask[(b * max_len + l) * num_vars + d] != 0;
  }
  bool real(std::size_t b, std::size_t l) const { return step_mask[b * max_len + l] != 0; }
  std::size_t total_steps() const { return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}); }
};

/// Pads the given series (all with the same D). Series with L = 0 are
/// allowed and produce an all-padding row.
inline PaddedBatch pad_batch(const std::vector<const IrregularSeries*>& rows,
                             const std::vector<std::size_t>& members = {}) {
  PaddedBatch pb;
  pb.batch_size = rows.size();
  if (rows.empty()) return pb;
  pb.num_vars = rows.front()->num_vars;
  for (const auto* s : rows) {
    if (s->num_vars != pb.num_vars) throw DataError("pad_batch: series disagree on the number of variables");
    pb.max_len = std::max(pb.max_len, s->length());
  }
  const std::size_t B = rows.size(), L = pb.max_len, D = pb.num_vars;
  pb.times.assign(B * L, 0.0);
  pb.values.assign(B * L * D, 0.0);
  pb.var_mask.assign(B * L * D, 0);
  pb.step_mask.assign(B * L, 0);
  const bool labelled = std::all_of(rows.begin(), rows.end(), [](const auto* s) { return s->label.has_value(); });
  if (labelled) pb.labels.emplace();
  for (std::size_t b = 0; b < B; ++b) {
    const IrregularSeries& s = *rows[b];
    pb.lengths.push_back(s.length());
    if (labelled) pb.labels->push_back(*s.label);
    for (std::size_t l = 0; l < s.length(); ++l) {
      pb.times[b * L + l] = s.times[l];
      pb.step_mask[b * L + l] = 1;
      for (std::size_t d = 0; d < D; ++d) {
        if (!s.observed(l, d)) continue;
        pb.values[(b * L + l) * D + d] = s.value(l, d);
        pb.var_mask[(b * L + l) * D + d] = 1;
      }
    }
  }
  pb.members = members.empty() ? std::vector<std::size_t>(B) : members;
  if (members.empty()) std::iota(pb.members.begin(), pb.members.end(), 0);
  return pb;
}

/// Consecutive groups of `batch_size` indices into [0, n), shuffled when
/// `seed` is given.
inline std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                           std::optional<std::uint64_t> seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  }
  return out;
}

inline std::vector<PaddedBatch> make_batches(const std::vector<IrregularSeries>& series, std::size_t batch_size,
                                             std::optional<std::uint64_t> seed) {
  std::vector<PaddedBatch> out;
  for (const auto& group : batch_indices(series.size(), batch_size, seed)) {
    std::vector<const IrregularSeries*> rows;
    for (std::size_t i : group) rows.push_back(&series[i]);
    out.push_back(pad_batch(rows, group));
  }
  return out;
}

}  // namespace ivpvae::data
