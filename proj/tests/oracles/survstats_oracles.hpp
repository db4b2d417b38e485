#pragma once

// Definition-level survival statistics oracles shared by the unit and
// acceptance tests.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "crlm/survival.hpp"

namespace crlm::oracles {

// Every ordered pair, same tie rules as the production estimator.
inline double oracle_cindex(const std::vector<double>& t, const std::vector<bool>& e, const std::vector<double>& r) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (i == j || !e[i]) continue;
      const bool ok = t[i] < t[j] || (t[i] == t[j] && !e[j]);
      if (!ok) continue;
      den += 1;
      num += r[i] > r[j] ? 1.0 : (r[i] == r[j] ? 0.5 : 0.0);
    }
  return num / den;
}

// Efron log partial likelihood for one covariate, written from the definition.
inline double oracle_efron(const std::vector<double>& x, const std::vector<SurvivalLabel>& y, double beta) {
  std::vector<double> times;
  for (const auto& l : y)
    if (l.event) times.push_back(l.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  double ll = 0;
  for (double tt : times) {
    double risk = 0, dsum = 0;
    int d = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i].time >= tt) risk += std::exp(beta * x[i]);
      if (y[i].time == tt && y[i].event) {
        dsum += std::exp(beta * x[i]);
        ll += beta * x[i];
        ++d;
      }
    }
    for (int l = 0; l < d; ++l) ll -= std::log(risk - static_cast<double>(l) / d * dsum);
  }
  return ll;
}

// Rank-sum p by brute force over all 2^n labelings with |a| = n_a.
inline double oracle_ranksum_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  const std::size_t n = pool.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, eq = 0;
    for (std::size_t j = 0; j < n; ++j) {
      less += pool[j] < pool[i];
      eq += pool[j] == pool[i];
    }
    rank[i] = less + (eq + 1) / 2.0;
  }
  auto sum_for = [&](std::uint32_t mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) s += rank[i];
    return s;
  };
  const double mu = static_cast<double>(a.size()) * static_cast<double>(n + 1) / 2.0;
  const double obs = std::abs(sum_for((1u << a.size()) - 1) - mu);
  double hit = 0, total = 0;
  for (std::uint32_t m = 0; m < (1u << n); ++m) {
    if (static_cast<std::size_t>(std::popcount(m)) != a.size()) continue;
    total += 1;
    hit += std::abs(sum_for(m) - mu) >= obs - 1e-9;
  }
  return hit / total;
}

}  // namespace crlm::oracles
