#ifndef DCS_STATS_HPP_
#define DCS_STATS_HPP_

#include <optional>
#include <span>
#include <vector>

#include "dcs/agent.hpp"

namespace dcs {

struct MannWhitney {
  double u = 0.0;  // U statistic of the first sample
  double p = 1.0;  // two-tailed
  bool exact = false;
};

// Largest pooled sample size that takes the exact permutation path.
inline constexpr std::size_t kExactLimit = 16;

// Rank-sum test with midranks for ties. Uses the exact permutation
// distribution when n_a + n_b <= kExactLimit, otherwise the normal
// approximation. Throws UsageError on an empty sample.
MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b);

// The two regimes, callable regardless of sample size. The exact path
// enumerates all C(n_a + n_b, n_a) splits of the pooled midranks (throws
// UsageError above 30 pooled values).
MannWhitney mann_whitney_exact(std::span<const double> a, std::span<const double> b);
// Normal approximation with tie-corrected variance and a 0.5 continuity
// correction.
MannWhitney mann_whitney_normal(std::span<const double> a, std::span<const double> b);

// Midranks (1-based) of the pooled values.
std::vector<double> midranks(std::span<const double> values);

// Linear interpolation between order statistics: position (n - 1) * q of the
// sorted sample.
double quantile(std::vector<double> values, double q);

struct CurvePoint {
  long step = 0;
  int runs = 0;  // runs with a value at this checkpoint
  std::optional<double> min, q1, median, q3, max;
};

struct CurveSummary {
  std::vector<CurvePoint> points;
};

// Per-checkpoint order statistics of mean_recent_score over runs. Missing
// values are skipped. Throws UsageError if the runs' step grids differ.
CurveSummary summarize_curves(std::span<const RunLog> runs);

struct SignificancePoint {
  long step = 0;
  std::optional<MannWhitney> test;  // absent when either side has no data
  bool significant = false;
};

// Mann-Whitney U on per-run mean_recent_score at each shared checkpoint;
// significant where p < alpha.
std::vector<SignificancePoint> significance_bars(std::span<const RunLog> a,
                                                 std::span<const RunLog> b,
                                                 double alpha = 0.05);

// Runs whose best checkpoint score is at least `threshold`.
std::vector<RunLog> filter_runs(std::span<const RunLog> runs, double threshold);

}  // namespace dcs

#endif  // DCS_STATS_HPP_
