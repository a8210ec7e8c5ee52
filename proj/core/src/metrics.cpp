#include "cvar/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "cvar/errors.hpp"

namespace cvar {

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw ArgumentError("auc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (double y : labels) positives += y > 0.5 ? 1 : 0;
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw StateError("auc undefined: only one class present");
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks across tie groups, accumulate positive ranks.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t) {
      if (labels[idx[t]] > 0.5) positive_rank_sum += avg_rank;
    }
    i = j;
  }

  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double f1(std::span<const double> scores, std::span<const double> labels,
          double threshold) {
  if (scores.size() != labels.size()) {
    throw ArgumentError("f1: scores and labels differ in length");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = labels[i] > 0.5;
    if (pred && truth) ++tp;
    if (pred && !truth) ++fp;
    if (!pred && truth) ++fn;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace cvar
