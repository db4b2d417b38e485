#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "crlm/survstats/distributions.hpp"

namespace crlm::survstats {

struct RankSumResult {
  double statistic = 0.0;  // rank sum of sample a (mid-ranks for ties)
  double p = 1.0;
  bool exact = false;
  double z = 0.0;          // only for the normal approximation
};

inline constexpr std::size_t kExactRankSumLimit = 12;

namespace detail {

inline std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t s = 0; s < v.size();) {
    std::size_t e = s;
    while (e < v.size() && v[order[e]] == v[order[s]]) ++e;
    const double mid = (static_cast<double>(s) + static_cast<double>(e - 1)) / 2.0 + 1.0;
    for (std::size_t k = s; k < e; ++k) r[order[k]] = mid;
    s = e;
  }
  return r;
}

// Visits the rank sum of every size-k subset of `ranks`.
template <typename F>
void for_each_subset_sum(const std::vector<double>& ranks, std::size_t k, F&& f) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t n = ranks.size();
  while (true) {
    double s = 0;
    for (auto i : idx) s += ranks[i];
    f(s);
    std::size_t j = k;
    while (j > 0 && idx[j - 1] == n - k + j - 1) --j;
    if (j == 0) return;
    ++idx[j - 1];
    for (std::size_t m = j; m < k; ++m) idx[m] = idx[m - 1] + 1;
  }
}

}  // namespace detail

// Two-sided rank-sum test. Exact by enumerating every assignment of the
// pooled mid-ranks when n_a + n_b <= 12; otherwise normal approximation with
// tie and continuity correction.
inline RankSumResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("wilcoxon: both samples must be non-empty");
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled)
    if (!std::isfinite(v)) throw InvalidArgument("wilcoxon: non-finite value");
  const auto ranks = detail::midranks(pooled);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size()), n = na + nb;
  RankSumResult r;
  r.statistic = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  const double expect = na * (n + 1.0) / 2.0;
  const double dev = std::abs(r.statistic - expect);
  if (pooled.size() <= kExactRankSumLimit) {
    r.exact = true;
    double extreme = 0, total = 0;
    detail::for_each_subset_sum(ranks, a.size(), [&](double s) {
      total += 1;
      if (std::abs(s - expect) >= dev - 1e-9) extreme += 1;
    });
    r.p = extreme / total;
    return r;
  }
  double ties = 0;
  std::vector<double> sorted(ranks);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t s = 0; s < sorted.size();) {
    std::size_t e = s;
    while (e < sorted.size() && sorted[e] == sorted[s]) ++e;
    const double t = static_cast<double>(e - s);
    ties += t * t * t - t;
    s = e;
  }
  const double var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (var <= 0) return r;
  r.z = std::max(0.0, dev - 0.5) / std::sqrt(var);
  r.p = normal_two_sided_p(r.z);
  return r;
}

}  // namespace crlm::survstats
