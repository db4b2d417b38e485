#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "crlm/error.hpp"

namespace crlm::survstats {

inline constexpr double kZ975 = 1.959963984540054;

// Two-sided normal tail P(|Z| >= |z|).
inline double normal_two_sided_p(double z) { return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0))); }

// Upper tail of chi-square with 1 df.
inline double chi2_1df_sf(double x) { return x <= 0 ? 1.0 : std::erfc(std::sqrt(x / 2.0)); }

// Linear-interpolation quantile (the common "type 7" definition).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidArgument("quantile of empty sample");
  if (!(q >= 0 && q <= 1)) throw InvalidArgument("quantile level must be in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("mean of empty sample");
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace crlm::survstats
