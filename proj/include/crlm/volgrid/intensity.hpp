#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "crlm/volgrid/grid.hpp"

namespace crlm {

// Percentile with linear interpolation between order statistics
// (position p/100 * (n-1) in the sorted sample).
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("percentile: empty sample");
  if (p < 0.0 || p > 100.0) throw InvalidArgument("percentile: p must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline Volume3D clip_percentile(const Volume3D& v, double p) {
  if (!(p > 0.0 && p <= 100.0)) throw InvalidArgument("clip_percentile: p must be in (0, 100]");
  const double cap = percentile(v.buffer(), p);
  Volume3D out = v;
  for (double& x : out.buffer()) x = std::min(x, cap);
  return out;
}

// Affine map of [min, max] onto [lo, hi]; a constant volume maps to lo.
inline Volume3D normalize_range(const Volume3D& v, double lo, double hi) {
  if (!(lo < hi)) throw InvalidArgument("normalize_range: lo must be < hi");
  const auto [mn, mx] = std::minmax_element(v.buffer().begin(), v.buffer().end());
  const double a = *mn;
  const double range = *mx - *mn;
  Volume3D out = v;
  for (double& x : out.buffer()) x = range > 0.0 ? lo + (x - a) / range * (hi - lo) : lo;
  return out;
}

struct MomentStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

inline MomentStats population_moments(std::span<const double> xs) {
  MomentStats s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

// Within the roi: clip to mean +- 3 sd, z-score the clipped values (population
// sd of the clipped roi), then scale by 100. Voxels outside the roi are
// returned unchanged. A zero-variance roi yields zeros.
inline Volume3D clip_sigma_zscore(const Volume3D& v, const Mask3D& roi, double n_sigma = 3.0, double scale = 100.0) {
  if (!same_lattice(v, roi)) throw InvalidArgument("clip_sigma_zscore: roi geometry mismatch");
  std::vector<std::size_t> idx;
  std::vector<double> vals;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (roi[i]) {
      idx.push_back(i);
      vals.push_back(v[i]);
    }
  if (idx.empty()) throw InvalidArgument("clip_sigma_zscore: roi is empty");

  const MomentStats raw = population_moments(vals);
  const double lo = raw.mean - n_sigma * raw.stddev;
  const double hi = raw.mean + n_sigma * raw.stddev;
  for (double& x : vals) x = std::clamp(x, lo, hi);
  const MomentStats clipped = population_moments(vals);

  // sd at round-off level (e.g. a constant image after resampling) counts as zero
  const bool flat = clipped.stddev <= 1e-10 * std::max(1.0, std::abs(clipped.mean));
  Volume3D out = v;
  for (std::size_t k = 0; k < idx.size(); ++k)
    out[idx[k]] = flat ? 0.0 : (vals[k] - clipped.mean) / clipped.stddev * scale;
  return out;
}

}  // namespace crlm
