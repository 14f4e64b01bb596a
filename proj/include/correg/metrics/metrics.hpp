#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace correg::metrics {

// Non-differentiable evaluation metrics over prediction/target vectors.
// Correlations on a constant input return 0 and raise the degenerate flag
// instead of NaN, so collapsed predictions early in training stay usable by
// the plateau tracker.

// Pearson linear correlation. Inputs must have equal length >= 2.
double pearson(std::span<const double> x, std::span<const double> y,
               bool* degenerate = nullptr);

// Spearman rank correlation: Pearson correlation of average ranks. Ties get
// fractional ranks.
double spearman(std::span<const double> x, std::span<const double> y,
                bool* degenerate = nullptr);

// Kendall tau-b over all n(n-1)/2 pairs, tie-corrected.
double kendall(std::span<const double> x, std::span<const double> y,
               bool* degenerate = nullptr);

// Average (fractional) ranks, 1-based; tied values share the mean of the
// positions they occupy.
std::vector<double> average_ranks(std::span<const double> x);

struct ErrorStats {
  double ae_mean = 0.0;
  double ae_std = 0.0;
  double re_mean = 0.0;  // percent
  double re_std = 0.0;   // percent
};

// Per-sample absolute error |pred - target| and relative error
// 100 * AE / |target|; means and population standard deviations. Targets
// must be nonzero for the relative part.
ErrorStats abs_rel_error(std::span<const double> pred, std::span<const double> target);

struct MetricsReport {
  double plc = 0.0;
  double src = 0.0;
  double klc = 0.0;
  double ae_mean = 0.0;
  double ae_std = 0.0;
  double re_mean = 0.0;
  double re_std = 0.0;
  std::size_t n = 0;
  bool degenerate = false;
  std::vector<std::pair<double, double>> residuals;  // (prediction, target)
};

// Full report on one split; requires n >= 2 and nonzero targets.
MetricsReport evaluate(std::span<const double> pred, std::span<const double> target);

}  // namespace correg::metrics
