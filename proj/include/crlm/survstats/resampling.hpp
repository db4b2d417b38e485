#pragma once

#include <atomic>
#include <exception>
#include <numeric>
#include <thread>
#include <vector>

#include "crlm/rng.hpp"
#include "crlm/survstats/cohort.hpp"
#include "crlm/survstats/distributions.hpp"

namespace crlm::survstats {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// plan[r][f]: repeat r, fold f. Each repeat reshuffles the patients with
// its own seeded stream; fold sizes differ by at most one.
using SplitPlan = std::vector<std::vector<Fold>>;

inline SplitPlan repeated_kfold(std::size_t n, int k = 3, int repeats = 15, std::uint64_t seed = 0) {
  if (k < 2) throw InvalidArgument("kfold: k must be >= 2");
  if (repeats < 1) throw InvalidArgument("kfold: repeats must be >= 1");
  if (n < static_cast<std::size_t>(k)) throw InvalidArgument("kfold: fewer patients than folds");
  SplitPlan plan;
  for (int r = 0; r < repeats; ++r) {
    Rng rng(Rng::mix(seed + 0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(r + 1)));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<Fold> folds(static_cast<std::size_t>(k));
    const std::size_t base = n / k, extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const std::size_t len = base + (f < extra ? 1 : 0);
      folds[f].test.assign(perm.begin() + static_cast<std::ptrdiff_t>(pos), perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
      std::sort(folds[f].test.begin(), folds[f].test.end());
      pos += len;
    }
    for (auto& f : folds) {
      std::vector<char> in_test(n, 0);
      for (auto i : f.test) in_test[i] = 1;
      for (std::size_t i = 0; i < n; ++i)
        if (!in_test[i]) f.train.push_back(i);
    }
    plan.push_back(std::move(folds));
  }
  return plan;
}

struct RandomizationResult {
  double observed = 0.0;
  std::vector<double> null;
  double p = 1.0;  // (1 + #{null >= observed}) / (1 + n)

  double null_mean() const { return mean_of(null); }
  double null_quantile(double q) const { return quantile(null, q); }
};

// Permutation of (time, event) pairs for shuffle s; independent of any other
// shuffle so the null is order- and thread-independent.
inline std::vector<SurvivalLabel> shuffled_labels(const std::vector<SurvivalLabel>& labels, std::uint64_t seed, int s) {
  Rng rng(Rng::mix(seed ^ (0xd1b54a32d192ed03ULL * static_cast<std::uint64_t>(s + 1))));
  std::vector<SurvivalLabel> out(labels);
  rng.shuffle(out);
  return out;
}

// `evaluate(labels, s)` runs the full train/evaluate loop on a label vector
// (s = -1 for the observed labels, otherwise the shuffle index) and returns
// a score where larger is better, typically a C-index.
template <typename F>
RandomizationResult randomization_test(const std::vector<SurvivalLabel>& labels, F&& evaluate, int n_shuffles,
                                       std::uint64_t seed, int threads = 1) {
  if (n_shuffles < 1) throw InvalidArgument("randomization: need at least one shuffle");
  RandomizationResult r;
  r.observed = evaluate(labels, -1);
  r.null.assign(static_cast<std::size_t>(n_shuffles), 0.0);
  std::vector<std::exception_ptr> errors(r.null.size());
  auto one = [&](std::size_t s) {
    try {
      r.null[s] = evaluate(shuffled_labels(labels, seed, static_cast<int>(s)), static_cast<int>(s));
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };
  if (threads <= 1) {
    for (std::size_t s = 0; s < r.null.size(); ++s) one(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < r.null.size(); s = next++) one(s);
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  const auto ge = std::count_if(r.null.begin(), r.null.end(), [&](double v) { return v >= r.observed; });
  r.p = (1.0 + static_cast<double>(ge)) / (1.0 + static_cast<double>(n_shuffles));
  return r;
}

}  // namespace crlm::survstats
