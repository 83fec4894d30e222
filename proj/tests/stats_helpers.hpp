//
// Copyright 2026 The dphelmet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Test-only statistics utilities: independent oracles for distributional
// checks. Nothing here touches the library's random or accounting paths.

#ifndef DPHELMET_TESTS_STATS_HELPERS_HPP_
#define DPHELMET_TESTS_STATS_HELPERS_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dphelmet/core.hpp"

namespace test_stats {

inline double normal_cdf(double x, double mean, double std_dev) {
  return 0.5 * std::erfc(-(x - mean) / (std_dev * std::sqrt(2.0)));
}

// One-sample Kolmogorov-Smirnov statistic against N(mean, std^2).
inline double ks_statistic_normal(std::vector<double> samples, double mean,
                                  double std_dev) {
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    double cdf = normal_cdf(samples[i], mean, std_dev);
    double hi = (static_cast<double>(i) + 1.0) / n - cdf;
    double lo = cdf - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

// Asymptotic Kolmogorov distribution tail: P(D > d) for sample size n.
inline double ks_pvalue(double d, size_t n) {
  double t = (std::sqrt(static_cast<double>(n)) + 0.12 +
              0.11 / std::sqrt(static_cast<double>(n))) *
             d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                  std::exp(-2.0 * k * k * t * t);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, p));
}

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / (static_cast<double>(v.size()) - 1.0));
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) +
                      1.0;
    for (size_t k = i; k <= j; ++k) r[order[k]] = avg_rank;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& x,
                      const std::vector<double>& y) {
  double mx = mean_of(x), my = mean_of(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman_rho(const std::vector<double>& x,
                           const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

// One-sided permutation p-value for "rho is this negative by chance".
inline double spearman_negative_pvalue(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       dphelmet::Rng& rng,
                                       int permutations = 20000) {
  double observed = spearman_rho(x, y);
  std::vector<double> shuffled = y;
  int at_most = 0;
  for (int p = 0; p < permutations; ++p) {
    rng.shuffle(shuffled);
    if (spearman_rho(x, shuffled) <= observed) ++at_most;
  }
  return (static_cast<double>(at_most) + 1.0) /
         (static_cast<double>(permutations) + 1.0);
}

}  // namespace test_stats

#endif  // DPHELMET_TESTS_STATS_HELPERS_HPP_
