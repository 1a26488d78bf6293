#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "ivpvae/seriesdata/series.hpp"

namespace ivpvae::data {

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// 80/10/10 random assignment; each part lists indices in ascending order.
inline SplitIndices split_indices(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw DataError("need at least 10 series to split, got " + std::to_string(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
  SplitIndices s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
               perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

struct DatasetSplit {
  Dataset train, val, test;
};

inline DatasetSplit split(const Dataset& ds, std::uint64_t seed) {
  const SplitIndices idx = split_indices(ds.size(), seed);
  return {ds.subset(idx.train), ds.subset(idx.val), ds.subset(idx.test)};
}

}  // namespace ivpvae::data
