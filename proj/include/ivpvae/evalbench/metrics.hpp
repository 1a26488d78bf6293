#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ivpvae/errors.hpp"
#include "ivpvae/util/io.hpp"
#include "ivpvae/util/kvfile.hpp"

namespace ivpvae::eval {

/// Pooled squared error over observed entries of any number of blocks.
/// Squared residuals are summed in sorted order, so the result does not
/// depend on the order in which blocks are added.
class MseAccumulator {
 public:
  void add(std::span<const double> pred, std::span<const double> target, std::span<const double> mask) {
    if (pred.size() != target.size() || pred.size() != mask.size()) {
      throw ContractError("masked_mse: prediction, target and mask sizes differ");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (mask[i] == 0.0) continue;
      const double r = pred[i] - target[i];
      squares_.push_back(r * r);
    }
  }

  std::size_t count() const { return squares_.size(); }

  double value() const {
    if (squares_.empty()) throw DataError("masked_mse: no observed entries");
    std::vector<double> sorted = squares_;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    return sum / static_cast<double>(sorted.size());
  }

 private:
  std::vector<double> squares_;
};

inline double masked_mse(std::span<const double> pred, std::span<const double> target, std::span<const double> mask) {
  MseAccumulator acc;
  acc.add(pred, target, mask);
  return acc.value();
}

namespace detail {

inline void check_binary(std::span<const double> scores, std::span<const int> labels, const char* who) {
  if (scores.size() != labels.size()) throw ContractError(std::string(who) + ": scores and labels differ in length");
  for (int y : labels)
    if (y != 0 && y != 1) throw ContractError(std::string(who) + ": labels must be 0 or 1");
  for (double s : scores)
    if (std::isnan(s)) throw NumericError(std::string(who) + ": NaN score");
}

}  // namespace detail

/// P(score⁺ > score⁻) + ½ P(tie) from average ranks; exact up to the final
/// division.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_binary(scores, labels, "auroc");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y == 1;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auroc: both classes must be present");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum of positives keeps tied average ranks integral.
  std::size_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::size_t twice_avg_rank = (i + 1) + j;  // 2 · (i+1 + j) / 2
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) twice_rank_sum += twice_avg_rank;
    i = j;
  }
  const std::size_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return 0.5 * static_cast<double>(twice_u) / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Average precision: Σ over distinct thresholds (descending) of
/// ΔRecall · Precision, with tied scores forming one threshold.
inline double auprc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_binary(scores, labels, "auprc");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y == 1;
  if (n_pos == 0) throw DataError("auprc: no positive labels");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i, group_tp = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) ++group_tp;
      ++j;
    }
    tp += group_tp;
    fp += (j - i) - group_tp;
    if (group_tp > 0) {
      const double delta_recall = static_cast<double>(group_tp) / static_cast<double>(n_pos);
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += delta_recall * precision;
    }
    i = j;
  }
  return ap;
}

struct MetricReport {
  std::string task;
  std::optional<double> mse;
  std::optional<double> auroc;
  std::optional<double> auprc;
  std::size_t n_series = 0;

  std::string to_text() const {
    std::string out = "task      " + task + "\nn_series  " + std::to_string(n_series) + "\n";
    if (mse) out += "mse       " + io::format_double(*mse) + "\n";
    if (auroc) out += "auroc     " + io::format_double(*auroc) + "\n";
    if (auprc) out += "auprc     " + io::format_double(*auprc) + "\n";
    return out;
  }

  io::KeyValueFile to_kv() const {
    io::KeyValueFile kv;
    kv.set("task", task);
    kv.set("n_series", std::to_string(n_series));
    if (mse) kv.set("mse", io::format_double(*mse));
    if (auroc) kv.set("auroc", io::format_double(*auroc));
    if (auprc) kv.set("auprc", io::format_double(*auprc));
    return kv;
  }
};

}  // namespace ivpvae::eval
