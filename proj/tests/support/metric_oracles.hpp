#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <vector>

namespace ivpvae::testing {

/// Direct count over all positive-negative pairs.
inline double brute_force_auroc(std::span<const double> s, std::span<const int> y) {
  std::size_t twice_wins = 0, n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] == 1) ++n_pos;
    else ++n_neg;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      if (s[i] > s[j]) twice_wins += 2;
      else if (s[i] == s[j]) twice_wins += 1;
    }
  }
  return 0.5 * static_cast<double>(twice_wins) / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Average precision from its definition: for each distinct threshold τ in
/// descending order, precision and recall of the rule score >= τ, both
/// recounted from scratch.
inline double brute_force_auprc(std::span<const double> s, std::span<const int> y) {
  const std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  std::size_t n_pos = 0;
  for (int v : y) n_pos += v == 1;
  double ap = 0.0;
  std::size_t prev_tp = 0;
  for (double tau : thresholds) {
    std::size_t tp = 0, predicted = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < tau) continue;
      ++predicted;
      tp += y[i] == 1;
    }
    if (tp > prev_tp) {
      ap += (static_cast<double>(tp - prev_tp) / static_cast<double>(n_pos)) *
            (static_cast<double>(tp) / static_cast<double>(predicted));
    }
    prev_tp = tp;
  }
  return ap;
}

}  // namespace ivpvae::testing
