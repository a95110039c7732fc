#pragma once

// Run statistics: correlation, regression, effect size, bootstrap intervals
// and two-sample tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "symroute/types.hpp"

namespace symroute::stats {

namespace detail {

inline void require_pairs(std::span<const double> xs, std::span<const double> ys, std::size_t min_n) {
  if (xs.size() != ys.size()) throw ContractViolation("paired samples differ in length");
  if (xs.size() < min_n)
    throw UndefinedStatistic("need at least " + std::to_string(min_n) + " observations");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw ValidationError("non-finite observation");
}

/// SplitMix64 step, used to derive independent per-iteration seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

inline double mean(std::span<const double> v) {
  if (v.empty()) throw UndefinedStatistic("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Unbiased (n-1) variance.
inline double variance(std::span<const double> v) {
  if (v.size() < 2) throw UndefinedStatistic("variance needs n >= 2");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double stddev(std::span<const double> v) { return std::sqrt(variance(v)); }

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  detail::require_pairs(xs, ys, 2);
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("zero variance in correlation input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  detail::require_pairs(xs, ys, 2);
  const auto rx = average_ranks(xs), ry = average_ranks(ys);
  return pearson(rx, ry);
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};

inline LinearFit linfit(std::span<const double> xs, std::span<const double> ys) {
  detail::require_pairs(xs, ys, 3);
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw UndefinedStatistic("regressor has zero variance");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += r * r;
    ss_tot += (ys[i] - my) * (ys[i] - my);
  }
  f.r_squared = ss_tot == 0.0 ? 0.0 : 1.0 - ss_res / ss_tot;
  return f;
}

/// Mean difference (a - b) over the pooled standard deviation.
inline double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw UndefinedStatistic("cohen's d needs n >= 2 per group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled =
      std::sqrt(((na - 1) * variance(a) + (nb - 1) * variance(b)) / (na + nb - 2));
  const double diff = mean(a) - mean(b);
  if (pooled == 0.0) {
    if (diff == 0.0) return 0.0;
    throw UndefinedStatistic("zero pooled standard deviation");
  }
  return diff / pooled;
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Linear-interpolated quantile of a sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw UndefinedStatistic("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Percentile bootstrap over resampled indices. Iteration i draws from its own
/// generator seeded by mix(seed, i), so iterations are order-independent.
inline Interval bootstrap_ci_indexed(
    std::size_t n, const std::function<double(std::span<const std::size_t>)>& statistic,
    std::size_t iterations = 1000, double level = 0.95, std::uint64_t seed = 0) {
  if (n == 0) throw UndefinedStatistic("bootstrap of empty sample");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must be in (0,1)");
  std::vector<double> stats;
  stats.reserve(iterations);
  std::vector<std::size_t> idx(n);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::mt19937_64 rng(detail::mix_seed(seed ^ detail::mix_seed(it)));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& i : idx) i = pick(rng);
    stats.push_back(statistic(idx));
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

inline Interval bootstrap_ci(std::span<const double> values,
                             const std::function<double(std::span<const double>)>& statistic,
                             std::size_t iterations = 1000, double level = 0.95,
                             std::uint64_t seed = 0) {
  std::vector<double> buf(values.size());
  return bootstrap_ci_indexed(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) buf[i] = values[idx[i]];
        return statistic(buf);
      },
      iterations, level, seed);
}

// ---------------------------------------------------------------------------
// two-sample tests
// ---------------------------------------------------------------------------

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided, Student t distribution
};

inline double two_sided_t_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

inline TTest welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw UndefinedStatistic("welch t needs n >= 2 per group");
  const double va = variance(a) / static_cast<double>(a.size());
  const double vb = variance(b) / static_cast<double>(b.size());
  if (va + vb == 0.0) throw UndefinedStatistic("zero variance in both groups");
  TTest r;
  r.t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  r.p_value = two_sided_t_p(r.t, r.df);
  return r;
}

inline TTest paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("paired samples differ in length");
  if (a.size() < 2) throw UndefinedStatistic("paired t needs n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double sd = stddev(d);
  if (sd == 0.0) throw UndefinedStatistic("zero variance in paired differences");
  TTest r;
  r.df = static_cast<double>(d.size() - 1);
  r.t = mean(d) / (sd / std::sqrt(static_cast<double>(d.size())));
  r.p_value = two_sided_t_p(r.t, r.df);
  return r;
}

/// Two-sided permutation test on the difference of means, with the +1
/// correction so p is never 0.
inline double permutation_p(std::span<const double> a, std::span<const double> b,
                            std::size_t iterations = 10000, std::uint64_t seed = 0) {
  if (a.empty() || b.empty()) throw UndefinedStatistic("permutation test needs two samples");
  std::vector<double> pool(a.begin(), a.end());
  pool.insert(pool.end(), b.begin(), b.end());
  const double observed = std::abs(mean(a) - mean(b));
  const double total = std::accumulate(pool.begin(), pool.end(), 0.0);
  const auto na = a.size(), nb = b.size();
  std::mt19937_64 rng(detail::mix_seed(seed));
  std::size_t extreme = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::shuffle(pool.begin(), pool.end(), rng);
    const double sa = std::accumulate(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(na), 0.0);
    const double diff = std::abs(sa / static_cast<double>(na) - (total - sa) / static_cast<double>(nb));
    if (diff >= observed - 1e-12) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(iterations + 1);
}

inline double bonferroni(double p, std::size_t comparisons) {
  return std::min(1.0, p * static_cast<double>(std::max<std::size_t>(comparisons, 1)));
}

}  // namespace symroute::stats
