#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string_view>
#include <vector>

#include "crlm/radiomics/preprocess.hpp"

namespace crlm::radiomics {

inline constexpr std::array<std::string_view, 18> kFirstOrderNames{
    "Energy",   "Entropy",       "Minimum",    "10Percentile", "90Percentile", "Maximum",
    "Mean",     "Median",        "InterquartileRange", "Range", "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation", "RootMeanSquared", "StandardDeviation", "Skewness", "Kurtosis",
    "Variance", "Uniformity"};

namespace detail {

// -sum p log2 p with 0 log 0 = 0.
inline double entropy_of(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0) h -= p * std::log2(p);
  return h;
}

}  // namespace detail

// `values` are the roi intensities; `levels` their discretised gray levels
// (same order), used by entropy and uniformity.
inline std::array<double, 18> first_order(const std::vector<double>& values, const std::vector<std::int32_t>& levels) {
  if (values.empty()) throw InvalidArgument("first_order: roi is empty");
  if (levels.size() != values.size()) throw InvalidArgument("first_order: levels/values size mismatch");
  const auto n = static_cast<double>(values.size());

  double sum = 0, sq = 0;
  for (double x : values) {
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  double m2 = 0, m3 = 0, m4 = 0, mad = 0;
  for (double x : values) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    mad += std::abs(d);
  }
  m2 /= n, m3 /= n, m4 /= n, mad /= n;

  const double p10 = percentile(values, 10), p90 = percentile(values, 90);
  const double p25 = percentile(values, 25), p75 = percentile(values, 75);
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());

  std::vector<double> robust;
  for (double x : values)
    if (x >= p10 && x <= p90) robust.push_back(x);
  double rmean = 0;
  for (double x : robust) rmean += x;
  rmean /= static_cast<double>(robust.size());
  double rmad = 0;
  for (double x : robust) rmad += std::abs(x - rmean);
  rmad /= static_cast<double>(robust.size());

  std::map<std::int32_t, double> hist;
  for (auto l : levels) hist[l] += 1.0;
  std::vector<double> probs;
  double uniformity = 0;
  for (const auto& [l, c] : hist) {
    probs.push_back(c / n);
    uniformity += (c / n) * (c / n);
  }

  return {sq,
          detail::entropy_of(probs),
          *mn_it,
          p10,
          p90,
          *mx_it,
          mean,
          percentile(values, 50),
          p75 - p25,
          *mx_it - *mn_it,
          mad,
          rmad,
          std::sqrt(sq / n),
          std::sqrt(m2),
          m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0,
          m2 > 0 ? m4 / (m2 * m2) : 0.0,
          m2,
          uniformity};
}

inline std::array<double, 18> first_order(const DiscretizedVolume& dv) {
  std::vector<double> values;
  std::vector<std::int32_t> levels;
  for (std::size_t i = 0; i < dv.roi.size(); ++i)
    if (dv.roi[i]) {
      values.push_back(dv.intensities[i]);
      levels.push_back(dv.levels[i]);
    }
  return first_order(values, levels);
}

}  // namespace crlm::radiomics
