#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/survstats/distributions.hpp"

namespace crlm::survstats {

// Product-limit curve on every distinct observed time. survival[k] is the
// value on [times[k], times[k+1]).
struct KMCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;
  std::vector<std::size_t> censored;

  double at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return it == times.begin() ? 1.0 : survival[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  // First time the curve drops to 0.5 or below; negative when never.
  double median() const {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (survival[k] <= 0.5) return times[k];
    return -1.0;
  }
};

inline KMCurve kaplan_meier(const std::vector<double>& times, const std::vector<bool>& events) {
  if (times.size() != events.size()) throw InvalidArgument("kaplan_meier: length mismatch");
  std::map<double, std::pair<std::size_t, std::size_t>> by_time;  // (events, censored)
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0) throw InvalidArgument("kaplan_meier: bad time");
    auto& e = by_time[times[i]];
    (events[i] ? e.first : e.second) += 1;
  }
  KMCurve c;
  std::size_t at_risk = times.size();
  double s = 1.0;
  for (const auto& [t, ec] : by_time) {
    if (ec.first > 0) s *= 1.0 - static_cast<double>(ec.first) / static_cast<double>(at_risk);
    c.times.push_back(t);
    c.survival.push_back(s);
    c.at_risk.push_back(at_risk);
    c.events.push_back(ec.first);
    c.censored.push_back(ec.second);
    at_risk -= ec.first + ec.second;
  }
  return c;
}

inline nlohmann::json to_json(const KMCurve& c) {
  return {{"times", c.times}, {"survival", c.survival}, {"at_risk", c.at_risk}, {"events", c.events},
          {"censored", c.censored}};
}

struct LogRankResult {
  double chi2 = 0.0;
  double p = 1.0;
  double observed_a = 0.0;  // events in the group with the lower label
  double expected_a = 0.0;
  double variance = 0.0;
};

// Two-group log-rank test. `group` must hold exactly two distinct values;
// "a" is the smaller one.
inline LogRankResult logrank_test(const std::vector<double>& times, const std::vector<bool>& events,
                                  const std::vector<int>& group) {
  const std::size_t n = times.size();
  if (events.size() != n || group.size() != n) throw InvalidArgument("logrank: length mismatch");
  std::vector<int> labels(group);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.size() != 2) throw InvalidArgument("logrank: need two non-empty groups");
  const int ga = labels[0];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
  double n_all = static_cast<double>(n);
  double n_a = static_cast<double>(std::count(group.begin(), group.end(), ga));
  LogRankResult r;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    double d = 0, d_a = 0, left = 0, left_a = 0;
    while (stop < n && times[order[stop]] == times[order[start]]) {
      const auto i = order[stop];
      const bool in_a = group[i] == ga;
      if (events[i]) {
        d += 1;
        d_a += in_a ? 1 : 0;
      }
      left += 1;
      left_a += in_a ? 1 : 0;
      ++stop;
    }
    if (d > 0) {
      const double frac = n_a / n_all;
      r.observed_a += d_a;
      r.expected_a += d * frac;
      if (n_all > 1) r.variance += d * frac * (1.0 - frac) * (n_all - d) / (n_all - 1.0);
    }
    n_all -= left;
    n_a -= left_a;
    start = stop;
  }
  const double diff = r.observed_a - r.expected_a;
  r.chi2 = r.variance > 0 ? diff * diff / r.variance : 0.0;
  r.p = chi2_1df_sf(r.chi2);
  return r;
}

// Median split of risk scores: 1 = high risk. Scores equal to the median
// go to the low-risk group.
inline std::vector<int> median_dichotomize(const std::vector<double>& risks) {
  const double med = quantile(risks, 0.5);
  std::vector<int> g(risks.size());
  for (std::size_t i = 0; i < risks.size(); ++i) g[i] = risks[i] > med ? 1 : 0;
  return g;
}

}  // namespace crlm::survstats
