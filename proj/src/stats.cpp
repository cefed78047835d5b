#include "dcs/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace dcs {
namespace {

void require_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw UsageError("mann_whitney_u: empty sample");
}

// U of the first sample from pooled midranks.
double u_statistic(std::span<const double> ranks, std::size_t na) {
  double r = 0.0;
  for (std::size_t i = 0; i < na; ++i) r += ranks[i];
  return r - 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
}

std::vector<double> pooled(std::span<const double> a, std::span<const double> b) {
  std::vector<double> v(a.begin(), a.end());
  v.insert(v.end(), b.begin(), b.end());
  return v;
}

void check_grid(std::span<const RunLog> runs, const std::vector<Checkpoint>& ref) {
  for (const RunLog& r : runs) {
    if (r.checkpoints.size() != ref.size())
      throw UsageError("runs do not share a checkpoint grid");
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (r.checkpoints[i].step != ref[i].step)
        throw UsageError("runs do not share a checkpoint grid");
  }
}

std::vector<double> scores_at(std::span<const RunLog> runs, std::size_t i) {
  std::vector<double> v;
  for (const RunLog& r : runs)
    if (r.checkpoints[i].mean_recent_score) v.push_back(*r.checkpoints[i].mean_recent_score);
  return v;
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

MannWhitney mann_whitney_exact(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const std::size_t na = a.size(), n = a.size() + b.size();
  if (n > 30) throw UsageError("mann_whitney_exact: pooled sample too large to enumerate");
  const std::vector<double> ranks = midranks(pooled(a, b));
  MannWhitney out;
  out.exact = true;
  out.u = u_statistic(ranks, na);
  const double mean = 0.5 * static_cast<double>(na) * static_cast<double>(b.size());
  const double observed = std::abs(out.u - mean);
  // Relative slack so tied midrank sums compare equal despite rounding.
  const double slack = 1e-9 * std::max(1.0, mean);
  const double offset = 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
  std::uint64_t extreme = 0, total = 0;
  const std::uint32_t limit = std::uint32_t{1} << n;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != na) continue;
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) r += ranks[i];
    ++total;
    if (std::abs(r - offset - mean) >= observed - slack) ++extreme;
  }
  out.p = static_cast<double>(extreme) / static_cast<double>(total);
  return out;
}

MannWhitney mann_whitney_normal(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const std::vector<double> all = pooled(a, b);
  const std::vector<double> ranks = midranks(all);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double n = na + nb;
  MannWhitney out;
  out.u = u_statistic(ranks, a.size());

  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double mean = 0.5 * na * nb;
  const double var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    out.p = 1.0;
    return out;
  }
  const double dev = std::max(0.0, std::abs(out.u - mean) - 0.5);
  const double z = dev / std::sqrt(var);
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  if (a.size() + b.size() <= kExactLimit) return mann_whitney_exact(a, b);
  return mann_whitney_normal(a, b);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

CurveSummary summarize_curves(std::span<const RunLog> runs) {
  CurveSummary s;
  if (runs.empty()) return s;
  const std::vector<Checkpoint>& ref = runs.front().checkpoints;
  check_grid(runs, ref);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CurvePoint p;
    p.step = ref[i].step;
    const std::vector<double> v = scores_at(runs, i);
    p.runs = static_cast<int>(v.size());
    if (!v.empty()) {
      p.min = quantile(v, 0.0);
      p.q1 = quantile(v, 0.25);
      p.median = quantile(v, 0.5);
      p.q3 = quantile(v, 0.75);
      p.max = quantile(v, 1.0);
    }
    s.points.push_back(p);
  }
  return s;
}

std::vector<SignificancePoint> significance_bars(std::span<const RunLog> a,
                                                 std::span<const RunLog> b, double alpha) {
  std::vector<SignificancePoint> out;
  if (a.empty() || b.empty()) return out;
  const std::vector<Checkpoint>& ref = a.front().checkpoints;
  check_grid(a, ref);
  check_grid(b, ref);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    SignificancePoint p;
    p.step = ref[i].step;
    const std::vector<double> va = scores_at(a, i), vb = scores_at(b, i);
    if (!va.empty() && !vb.empty()) {
      p.test = mann_whitney_u(va, vb);
      p.significant = p.test->p < alpha;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<RunLog> filter_runs(std::span<const RunLog> runs, double threshold) {
  std::vector<RunLog> out;
  for (const RunLog& r : runs)
    if (r.best_score() >= threshold) out.push_back(r);
  return out;
}

}  // namespace dcs
