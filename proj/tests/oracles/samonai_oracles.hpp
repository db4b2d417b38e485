#pragma once

// Direct re-statement of the prompt cost model, kept apart from the library
// code. Shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "crlm/samonai.hpp"

namespace crlm::oracles {

using samonai::PromptCostWeights;

struct Oracle {
  static double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return (v[n / 2 - 1] + v[n / 2]) / 2.0;
  }
  static double window_sd(const Image2D& img, Pixel p, int w) {
    std::vector<double> vals;
    for (std::int64_t r = p.row - w / 2; r <= p.row + w / 2; ++r)
      for (std::int64_t c = p.col - w / 2; c <= p.col + w / 2; ++c)
        if (img.contains({r, c})) vals.push_back(img(r, c));
    double m = 0;
    for (double x : vals) m += x;
    m /= static_cast<double>(vals.size());
    double v = 0;
    for (double x : vals) v += (x - m) * (x - m);
    return std::sqrt(v / static_cast<double>(vals.size()));
  }
  static std::vector<double> norm(std::vector<double> v) {
    const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
    for (double& x : v) x = hi > lo ? (x - lo) / (hi - lo) : 0.0;
    return v;
  }
  static std::vector<double> totals(const std::vector<Pixel>& P, const Image2D& img, PromptCostWeights w) {
    std::vector<double> in, lo, ho, vals;
    for (Pixel p : P) vals.push_back(img[p]);
    const double med = median(vals);
    double cr = 0, cc = 0;
    for (Pixel p : P) cr += static_cast<double>(p.row), cc += static_cast<double>(p.col);
    cr /= static_cast<double>(P.size());
    cc /= static_cast<double>(P.size());
    for (Pixel p : P) {
      in.push_back(std::abs(img[p] - med));
      lo.push_back(std::sqrt((p.row - cr) * (p.row - cr) + (p.col - cc) * (p.col - cc)));
      ho.push_back(window_sd(img, p, 11));
    }
    in = norm(in), lo = norm(lo), ho = norm(ho);
    std::vector<double> t;
    for (std::size_t i = 0; i < P.size(); ++i) t.push_back(w.alpha * in[i] + w.beta * lo[i] + w.gamma * ho[i]);
    return t;
  }
  static Pixel argmin(const std::vector<Pixel>& P, const Image2D& img, PromptCostWeights w) {
    const auto t = totals(P, img, w);
    Pixel best = P[0];
    double bt = t[0];
    for (std::size_t i = 1; i < P.size(); ++i)
      if (t[i] < bt || (t[i] == bt && (P[i].row < best.row || (P[i].row == best.row && P[i].col < best.col)))) {
        best = P[i];
        bt = t[i];
      }
    return best;
  }
};

inline std::vector<Pixel> random_candidates(std::mt19937_64& rng, std::int64_t rows, std::int64_t cols, std::size_t n) {
  std::set<std::pair<std::int64_t, std::int64_t>> s;
  std::uniform_int_distribution<std::int64_t> ur(0, rows - 1), uc(0, cols - 1);
  while (s.size() < n) s.insert({ur(rng), uc(rng)});
  std::vector<Pixel> out;
  for (auto [r, c] : s) out.push_back({r, c});
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

inline Image2D random_image(std::mt19937_64& rng, std::int64_t rows, std::int64_t cols, bool quantized) {
  Image2D img(rows, cols);
  std::uniform_real_distribution<double> u(0, 100);
  std::uniform_int_distribution<int> q(0, 3);
  for (double& v : img.buffer()) v = quantized ? q(rng) : u(rng);
  return img;
}

}  // namespace crlm::oracles
