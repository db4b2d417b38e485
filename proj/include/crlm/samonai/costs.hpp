#pragma once

// Prompt-selection criteria. For a candidate p drawn from a candidate set P:
//   intensity    |I(p) - median_{q in P} I(q)|
//   location     || p - centroid(P) ||            (pixel units)
//   homogeneity  population sd of I over the window centred on p
// Each criterion is min-max normalised over P and combined with weights.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "crlm/volgrid/grid.hpp"

namespace crlm::samonai {

struct PromptCostWeights {
  double alpha = 1.0;  // intensity
  double beta = 1.0;   // location
  double gamma = 2.0;  // homogeneity

  void validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0) throw InvalidArgument("cost weights must be nonnegative");
    if (!(alpha + beta + gamma > 0)) throw InvalidArgument("cost weights must not all be zero");
  }
};

inline constexpr int kDefaultWindow = 11;

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of empty set");
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

inline void require_member(Pixel p, std::span<const Pixel> set) {
  if (std::find(set.begin(), set.end(), p) == set.end())
    throw InvalidArgument("candidate point is not a member of the candidate set");
}

inline std::array<double, 2> centroid(std::span<const Pixel> set) {
  double r = 0, c = 0;
  for (const Pixel q : set) {
    r += static_cast<double>(q.row);
    c += static_cast<double>(q.col);
  }
  const auto n = static_cast<double>(set.size());
  return {r / n, c / n};
}

inline double distance_to(Pixel p, std::array<double, 2> c) {
  return std::hypot(static_cast<double>(p.row) - c[0], static_cast<double>(p.col) - c[1]);
}

inline std::vector<double> minmax_normalized(const std::vector<double>& v) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out(v.size(), 0.0);
  if (*mx > *mn)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *mn) / (*mx - *mn);
  return out;
}

}  // namespace detail

inline double intensity_cost(Pixel p, std::span<const Pixel> candidates, const Image2D& image) {
  detail::require_member(p, candidates);
  std::vector<double> vals;
  vals.reserve(candidates.size());
  for (const Pixel q : candidates) vals.push_back(image[q]);
  return std::abs(image[p] - median_of(std::move(vals)));
}

inline double location_cost(Pixel p, std::span<const Pixel> candidates) {
  detail::require_member(p, candidates);
  return detail::distance_to(p, detail::centroid(candidates));
}

// The window is clipped at the image border.
inline double homogeneity_cost(Pixel p, const Image2D& image, int window = kDefaultWindow) {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("homogeneity window must be odd");
  const std::int64_t h = window / 2;
  const std::int64_t r0 = std::max<std::int64_t>(0, p.row - h), r1 = std::min(image.rows() - 1, p.row + h);
  const std::int64_t c0 = std::max<std::int64_t>(0, p.col - h), c1 = std::min(image.cols() - 1, p.col + h);
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::int64_t r = r0; r <= r1; ++r)
    for (std::int64_t c = c0; c <= c1; ++c) {
      sum += image(r, c);
      ++n;
    }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::int64_t r = r0; r <= r1; ++r)
    for (std::int64_t c = c0; c <= c1; ++c) ss += (image(r, c) - mean) * (image(r, c) - mean);
  return std::sqrt(ss / static_cast<double>(n));
}

struct CostBreakdown {
  std::vector<double> intensity;
  std::vector<double> location;
  std::vector<double> homogeneity;
  std::vector<double> total;  // weighted sum of the normalised criteria
};

// Evaluates all criteria for every member of `candidates` in one pass.
inline CostBreakdown evaluate_costs(std::span<const Pixel> candidates, const Image2D& image,
                                    const PromptCostWeights& w, int window = kDefaultWindow) {
  if (candidates.empty()) throw InvalidArgument("candidate set is empty");
  w.validate();
  CostBreakdown out;
  std::vector<double> vals;
  vals.reserve(candidates.size());
  for (const Pixel q : candidates) {
    if (!image.contains(q)) throw InvalidArgument("candidate point out of bounds");
    vals.push_back(image[q]);
  }
  const double med = median_of(vals);
  const auto cen = detail::centroid(candidates);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.intensity.push_back(std::abs(vals[i] - med));
    out.location.push_back(detail::distance_to(candidates[i], cen));
    out.homogeneity.push_back(homogeneity_cost(candidates[i], image, window));
  }
  const auto ni = detail::minmax_normalized(out.intensity);
  const auto nl = detail::minmax_normalized(out.location);
  const auto nh = detail::minmax_normalized(out.homogeneity);
  out.total.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) out.total[i] = w.alpha * ni[i] + w.beta * nl[i] + w.gamma * nh[i];
  return out;
}

inline double total_cost(Pixel p, std::span<const Pixel> candidates, const Image2D& image,
                         const PromptCostWeights& w, int window = kDefaultWindow) {
  detail::require_member(p, candidates);
  const auto costs = evaluate_costs(candidates, image, w, window);
  const auto at = std::find(candidates.begin(), candidates.end(), p) - candidates.begin();
  return costs.total[static_cast<std::size_t>(at)];
}

// Argmin of the total cost; ties go to the lowest (row, col).
inline Pixel select_positive_prompt(std::span<const Pixel> candidates, const Image2D& image,
                                    const PromptCostWeights& w, int window = kDefaultWindow) {
  const auto costs = evaluate_costs(candidates, image, w, window);
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (costs.total[i] < costs.total[best] ||
        (costs.total[i] == costs.total[best] && candidates[i] < candidates[best]))
      best = i;
  }
  return candidates[best];
}

// Drops the darkest floor(fraction * n) candidates (at least one survives),
// then picks the cost argmin among the survivors.
inline Pixel select_negative_prompt(std::span<const Pixel> candidates, const Image2D& image,
                                    const PromptCostWeights& w, double exclusion_fraction = 0.10,
                                    int window = kDefaultWindow) {
  if (candidates.empty()) throw InvalidArgument("negative candidate set is empty");
  if (!(exclusion_fraction >= 0.0 && exclusion_fraction < 1.0))
    throw InvalidArgument("exclusion fraction must be in [0, 1)");
  std::vector<Pixel> sorted(candidates.begin(), candidates.end());
  std::stable_sort(sorted.begin(), sorted.end(), [&](Pixel a, Pixel b) {
    if (image[a] != image[b]) return image[a] < image[b];
    return a < b;
  });
  auto drop = static_cast<std::size_t>(std::floor(exclusion_fraction * static_cast<double>(sorted.size())));
  drop = std::min(drop, sorted.size() - 1);
  std::vector<Pixel> survivors(sorted.begin() + static_cast<std::ptrdiff_t>(drop), sorted.end());
  std::sort(survivors.begin(), survivors.end());
  return select_positive_prompt(survivors, image, w, window);
}

}  // namespace crlm::samonai
