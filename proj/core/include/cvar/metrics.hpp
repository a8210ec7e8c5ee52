#pragma once

#include <span>

namespace cvar {

// Rank-statistic AUC (Mann-Whitney form) with tied scores averaged.
// Requires both classes present.
double auc(std::span<const double> scores, std::span<const double> labels);

// Harmonic mean of precision and recall at `threshold`; 0 when there are
// no predicted or no actual positives.
double f1(std::span<const double> scores, std::span<const double> labels,
          double threshold = 0.5);

}  // namespace cvar
