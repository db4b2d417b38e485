#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "crlm/error.hpp"
#include "crlm/survival.hpp"

namespace crlm::survstats {

struct ConcordanceCounts {
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t tied_risk = 0;

  std::int64_t permissible() const { return concordant + discordant + tied_risk; }
  double index() const {
    if (permissible() == 0) throw InvalidArgument("concordance: no permissible pairs");
    return static_cast<double>(2 * concordant + tied_risk) / static_cast<double>(2 * permissible());
  }
};

// Harrell's pairs: (i, j) is permissible when i had the event and either
// T_i < T_j, or T_i == T_j with j censored. Pairs of events at the same
// time are skipped. Concordant when risk_i > risk_j; equal risks count 1/2.
// O(n log n) with a Fenwick tree over risk ranks.
inline ConcordanceCounts concordance_counts(const std::vector<double>& times, const std::vector<bool>& events,
                                            const std::vector<double>& risks) {
  const std::size_t n = times.size();
  if (events.size() != n || risks.size() != n) throw InvalidArgument("concordance: length mismatch");
  std::vector<double> sorted_r(risks);
  std::sort(sorted_r.begin(), sorted_r.end());
  sorted_r.erase(std::unique(sorted_r.begin(), sorted_r.end()), sorted_r.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i)
    rank[i] = static_cast<std::size_t>(std::lower_bound(sorted_r.begin(), sorted_r.end(), risks[i]) - sorted_r.begin()) + 1;

  std::vector<std::int64_t> tree(sorted_r.size() + 1, 0);
  std::int64_t inserted = 0;
  auto add = [&](std::size_t r) {
    for (; r < tree.size(); r += r & (~r + 1)) ++tree[r];
    ++inserted;
  };
  auto prefix = [&](std::size_t r) {
    std::int64_t s = 0;
    for (; r > 0; r -= r & (~r + 1)) s += tree[r];
    return s;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] > times[b]; });
  ConcordanceCounts c;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && times[order[stop]] == times[order[start]]) ++stop;
    for (std::size_t k = start; k < stop; ++k)
      if (!events[order[k]]) add(rank[order[k]]);
    for (std::size_t k = start; k < stop; ++k) {
      const auto i = order[k];
      if (!events[i]) continue;
      const std::int64_t below = prefix(rank[i] - 1);
      const std::int64_t equal = prefix(rank[i]) - below;
      c.concordant += below;
      c.tied_risk += equal;
      c.discordant += inserted - below - equal;
    }
    for (std::size_t k = start; k < stop; ++k)
      if (events[order[k]]) add(rank[order[k]]);
    start = stop;
  }
  return c;
}

inline double concordance_index(const std::vector<double>& times, const std::vector<bool>& events,
                                const std::vector<double>& risks) {
  return concordance_counts(times, events, risks).index();
}

inline double concordance_index(const std::vector<SurvivalLabel>& labels, const std::vector<double>& risks) {
  std::vector<double> t(labels.size());
  std::vector<bool> e(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t[i] = labels[i].time;
    e[i] = labels[i].event;
  }
  return concordance_index(t, e, risks);
}

}  // namespace crlm::survstats
