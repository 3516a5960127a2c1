#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace reentry::testkit {

// Doubled Mann-Whitney U of `a` against `b` by direct pair counting:
// 2 per strict win, 1 per tie.
inline long doubled_u(std::span<const double> a, std::span<const double> b) {
  long u = 0;
  for (const double x : a) {
    for (const double y : b) u += x > y ? 2 : (x == y ? 1 : 0);
  }
  return u;
}

// Two-sided exact p by enumerating every way to relabel the pooled values:
// 2 * min(P(U <= u_obs), P(U >= u_obs)), capped at 1.
inline double permutation_p(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const long observed = doubled_u(a, b);
  std::uint64_t total = 0, lower = 0, upper = 0;
  std::vector<double> xa, xb;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
    xa.clear();
    xb.clear();
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? xa : xb).push_back(pooled[i]);
    const long u = doubled_u(xa, xb);
    ++total;
    lower += u <= observed;
    upper += u >= observed;
  }
  const double p = 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(total);
  return std::min(1.0, p);
}

}  // namespace reentry::testkit
