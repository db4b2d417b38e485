#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "crlm/survstats.hpp"
#include "crlm/synthgen.hpp"
#include "oracles/survstats_oracles.hpp"

namespace ss = crlm::survstats;
using crlm::Rng;
using crlm::SurvivalLabel;
using namespace crlm::oracles;

namespace {

struct RandomCohort {
  std::vector<double> t, r;
  std::vector<bool> e;
};

RandomCohort random_cohort(std::size_t n, Rng& rng, int time_levels = 6, int risk_levels = 5) {
  RandomCohort c;
  for (std::size_t i = 0; i < n; ++i) {
    c.t.push_back(1.0 + static_cast<double>(rng.below(static_cast<std::uint64_t>(time_levels))));
    c.e.push_back(rng.bernoulli(0.7));
    c.r.push_back(static_cast<double>(rng.below(static_cast<std::uint64_t>(risk_levels))));
  }
  c.e[0] = true;
  return c;
}

ss::CohortTable table_from(const std::vector<double>& x, const std::vector<SurvivalLabel>& y) {
  ss::CohortTable t;
  for (std::size_t i = 0; i < x.size(); ++i) t.ids.push_back("p" + std::to_string(i));
  t.labels = y;
  t.add_column("x", x);
  return t;
}

}  // namespace

TEST(Concordance, PerfectAndReversed) {
  const std::vector<double> t{1, 2, 3, 4, 5};
  const std::vector<bool> e(5, true);
  EXPECT_DOUBLE_EQ(ss::concordance_index(t, e, {5, 4, 3, 2, 1}), 1.0);
  EXPECT_DOUBLE_EQ(ss::concordance_index(t, e, {1, 2, 3, 4, 5}), 0.0);
  EXPECT_DOUBLE_EQ(ss::concordance_index(t, e, {1, 1, 1, 1, 1}), 0.5);
  EXPECT_THROW(ss::concordance_index({1, 2}, {false, false}, {1, 2}), crlm::InvalidArgument);
}

TEST(Concordance, SixPatientHandCount) {
  // censored: patients 2 and 5
  const std::vector<double> t{2, 4, 5, 7, 9, 9};
  const std::vector<bool> e{true, true, false, true, true, false};
  const std::vector<double> r{0.9, 0.3, 0.5, 0.6, 0.1, 0.2};
  // permissible pairs (i event): 0 vs 1..5 (5), 1 vs 2..5 (4), 3 vs 4,5 (2), 4 vs 5 (1, tied time, 5 censored)
  // concordant: 0 beats all 5; 1 beats 4,5 (2 of 4); 3 beats 4,5 (2); 4 vs 5: 0.1 < 0.2 no
  const auto c = ss::concordance_counts(t, e, r);
  EXPECT_EQ(c.permissible(), 12);
  EXPECT_EQ(c.concordant, 9);
  EXPECT_DOUBLE_EQ(c.index(), 9.0 / 12.0);
  EXPECT_DOUBLE_EQ(c.index(), oracle_cindex(t, e, r));
}

TEST(Concordance, MatchesPairwiseOracleOnSmallCohorts) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_cohort(2 + rng.below(29), rng);
    if (ss::concordance_counts(c.t, c.e, c.r).permissible() == 0) continue;
    EXPECT_EQ(ss::concordance_index(c.t, c.e, c.r), oracle_cindex(c.t, c.e, c.r));
  }
}

TEST(Concordance, ComplementWithoutRiskTies) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto c = random_cohort(25, rng);
    for (auto& r : c.r) r = rng.normal();
    std::vector<double> neg(c.r);
    for (auto& r : neg) r = -r;
    EXPECT_NEAR(ss::concordance_index(c.t, c.e, c.r), 1.0 - ss::concordance_index(c.t, c.e, neg), 1e-15);
  }
}

TEST(CoxFit, EfronLikelihoodMatchesDefinition) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x;
    std::vector<SurvivalLabel> y;
    for (int i = 0; i < 15; ++i) {
      x.push_back(rng.normal());
      y.push_back({1.0 + static_cast<double>(rng.below(4)), rng.bernoulli(0.7)});
    }
    y[0].event = true;
    const double beta = rng.normal();
    Eigen::MatrixXd xm(15, 1);
    for (int i = 0; i < 15; ++i) xm(i, 0) = x[static_cast<std::size_t>(i)];
    const auto ev = ss::efron_loglik(xm, y, Eigen::VectorXd::Constant(1, beta));
    EXPECT_NEAR(ev.loglik, oracle_efron(x, y, beta), 1e-10);
    const double h = 1e-5;
    const double g = (oracle_efron(x, y, beta + h) - oracle_efron(x, y, beta - h)) / (2 * h);
    const double hess = (oracle_efron(x, y, beta + h) - 2 * oracle_efron(x, y, beta) + oracle_efron(x, y, beta - h)) / (h * h);
    EXPECT_NEAR(ev.grad[0], g, 1e-6);
    EXPECT_NEAR(ev.info(0, 0), -hess, 1e-3);
  }
}

TEST(CoxFit, MaximumMatchesGridSearch) {
  // binary covariate, three patients, interior maximum
  const std::vector<double> x{0, 1, 0};
  const std::vector<SurvivalLabel> y{{1, true}, {2, true}, {3, false}};
  ss::CoxOptions opt;
  opt.standardize = false;
  const auto fit = ss::coxph_fit(table_from(x, y), {"x"}, opt);
  double best = 0, best_ll = -INFINITY;
  for (double b = -5; b <= 5; b += 1e-5) {
    const double ll = oracle_efron(x, y, b);
    if (ll > best_ll) {
      best_ll = ll;
      best = b;
    }
  }
  EXPECT_NEAR(fit.covariates[0].coef, best, 2e-5);
  EXPECT_NEAR(fit.log_likelihood, best_ll, 1e-9);
}

TEST(CoxFit, TwoPatientsOneEventHasNoFiniteMaximum) {
  // the partial likelihood e^b / (e^b + 1) increases without bound
  const auto t = table_from({1, 0}, {{1, true}, {2, false}});
  ss::CoxOptions opt;
  opt.standardize = false;
  for (double b : {0.0, 1.0, 5.0}) EXPECT_LT(oracle_efron({1, 0}, t.labels, b), oracle_efron({1, 0}, t.labels, b + 1));
  EXPECT_THROW(ss::coxph_fit(t, {"x"}, opt), crlm::Error);
}

TEST(CoxFit, RecoversTrueCoefficient) {
  const auto t = crlm::synthgen::generate_linear_cohort(2000, 0.8, 0.2, 42);
  const auto fit = ss::coxph_fit(t, {"x"});
  const auto& c = fit.covariates[0];
  EXPECT_GE(c.coef, 0.7);
  EXPECT_LE(c.coef, 0.9);
  EXPECT_LT(fit.gradient_norm, 1e-6);
  EXPECT_LE(c.ci_lo, c.hr);
  EXPECT_LE(c.hr, c.ci_hi);
  EXPECT_NEAR(c.hr, std::exp(c.coef), 1e-12);
  EXPECT_LT(c.p, 1e-10);
  EXPECT_GT(fit.c_index, 0.6);
}

TEST(CoxFit, NewtonTraceIsMonotone) {
  const auto t = crlm::synthgen::generate_linear_cohort(300, 1.5, 0.3, 5);
  const auto x = ss::design_matrix(t, {"x"}, true);
  const auto s = ss::cox_newton(x, t.labels);
  for (std::size_t k = 1; k < s.trace.size(); ++k) EXPECT_GE(s.trace[k], s.trace[k - 1] - 1e-9);
  EXPECT_LT(s.gradient_norm, 1e-6);
}

TEST(CoxFit, NullCovariateIsSmall) {
  auto t = crlm::synthgen::generate_linear_cohort(400, 0.0, 0.2, 9);
  Rng rng(10);
  std::vector<double> noise(t.size());
  for (auto& v : noise) v = rng.normal();
  t.add_column("noise", noise);
  const auto fit = ss::coxph_fit(t, {"x", "noise"});
  for (const auto& c : fit.covariates) {
    EXPECT_LT(std::abs(c.coef), 0.25);
    EXPECT_GE(c.p, 0.0);
    EXPECT_LE(c.p, 1.0);
  }
}

TEST(CoxFit, SingularAndInvalidInputs) {
  auto t = crlm::synthgen::generate_linear_cohort(50, 0.5, 0.2, 11);
  t.add_column("const", std::vector<double>(t.size(), 3.0));
  EXPECT_THROW(ss::coxph_fit(t, {"x", "const"}), crlm::SingularMatrix);
  auto dup = t.column("x");
  for (auto& v : dup) v *= 2;
  t.add_column("x2", dup);
  EXPECT_THROW(ss::coxph_fit(t, {"x", "x2"}), crlm::SingularMatrix);
  EXPECT_THROW(ss::coxph_fit(t, {"missing"}), crlm::InvalidArgument);
  auto none = t;
  for (auto& l : none.labels) l.event = false;
  EXPECT_THROW(ss::coxph_fit(none, {"x"}), crlm::InvalidArgument);
}

TEST(Bootstrap, DegenerateReproducibleAndCoversPoint) {
  const auto t = crlm::synthgen::generate_linear_cohort(150, 0.7, 0.2, 12);
  const auto one = ss::bootstrap_hr(t, {"x"}, 1, 5);
  EXPECT_DOUBLE_EQ(one.covariates[0].lo, one.covariates[0].hi);
  const auto a = ss::bootstrap_hr(t, {"x"}, 200, 7);
  const auto b = ss::bootstrap_hr(t, {"x"}, 200, 7, {}, 3);
  EXPECT_EQ(a.covariates[0].lo, b.covariates[0].lo);
  EXPECT_EQ(a.covariates[0].hi, b.covariates[0].hi);
  EXPECT_LE(a.covariates[0].lo, a.covariates[0].hr);
  EXPECT_LE(a.covariates[0].hr, a.covariates[0].hi);
  EXPECT_EQ(a.failed, 0);
  EXPECT_THROW(ss::bootstrap_hr(t, {"x"}, 0, 1), crlm::InvalidArgument);
}

TEST(KaplanMeier, NoEventsIsFlat) {
  const auto c = ss::kaplan_meier({3, 1, 2}, {false, false, false});
  for (double s : c.survival) EXPECT_EQ(s, 1.0);
  EXPECT_EQ(c.at(10), 1.0);
  EXPECT_LT(c.median(), 0);
}

TEST(KaplanMeier, HandExample) {
  // times 1,2,2,3,4 with event flags 1,1,0,1,0
  const auto c = ss::kaplan_meier({2, 1, 4, 2, 3}, {true, true, false, false, true});
  ASSERT_EQ(c.times, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_NEAR(c.survival[0], 4.0 / 5.0, 1e-15);
  EXPECT_NEAR(c.survival[1], 4.0 / 5.0 * 3.0 / 4.0, 1e-15);
  EXPECT_NEAR(c.survival[2], 0.6 * 1.0 / 2.0, 1e-15);
  EXPECT_NEAR(c.survival[3], 0.3, 1e-15);
  EXPECT_EQ(c.at_risk, (std::vector<std::size_t>{5, 4, 2, 1}));
  EXPECT_EQ(c.at(0.5), 1.0);
  EXPECT_DOUBLE_EQ(c.at(2.5), 0.6);
  EXPECT_EQ(c.median(), 3.0);
}

TEST(KaplanMeier, MonotoneAndOrderInvariantOnRandomCohorts) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rc = random_cohort(5 + rng.below(40), rng, 20);
    const auto c = ss::kaplan_meier(rc.t, rc.e);
    double prev = 1.0;
    for (double s : c.survival) {
      EXPECT_LE(s, prev);
      EXPECT_GE(s, 0.0);
      prev = s;
    }
    std::vector<std::size_t> perm(rc.t.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<double> t2;
    std::vector<bool> e2;
    for (auto i : perm) {
      t2.push_back(rc.t[i]);
      e2.push_back(rc.e[i]);
    }
    EXPECT_EQ(ss::kaplan_meier(t2, e2).survival, c.survival);
  }
}

TEST(LogRank, IdenticalGroups) {
  const std::vector<double> t{1, 3, 4, 6, 1, 3, 4, 6};
  const std::vector<bool> e{true, false, true, true, true, false, true, true};
  const auto r = ss::logrank_test(t, e, {0, 0, 0, 0, 1, 1, 1, 1});
  EXPECT_EQ(r.chi2, 0.0);
  EXPECT_EQ(r.p, 1.0);
}

TEST(LogRank, TenSubjectTable) {
  const std::vector<double> t{6, 7, 10, 15, 19, 25, 5, 8, 8, 12};
  const std::vector<bool> e{true, false, true, true, false, true, true, true, false, true};
  const std::vector<int> g{0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
  const auto r = ss::logrank_test(t, e, g);
  // hand table: event times 5,6,8,10,12,15,25
  // O_a = 4, E_a = 0.6+0.6667+0.5714+0.6+0.75+1+1 ... = 5.388095238095238
  EXPECT_DOUBLE_EQ(r.observed_a, 4.0);
  EXPECT_NEAR(r.expected_a, 5.388095238095238, 1e-12);
  EXPECT_NEAR(r.chi2, 1.8270164216410878, 1e-9);
  EXPECT_NEAR(r.p, 0.1764803577407471, 1e-9);
  std::vector<int> flipped(g);
  for (auto& v : flipped) v = 1 - v;
  EXPECT_NEAR(ss::logrank_test(t, e, flipped).chi2, r.chi2, 1e-12);
  EXPECT_THROW(ss::logrank_test(t, e, std::vector<int>(10, 0)), crlm::InvalidArgument);
}

TEST(LogRank, MedianSplitSendsTiesLow) {
  EXPECT_EQ(ss::median_dichotomize({1, 2, 3}), (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(ss::median_dichotomize({1, 2, 2, 5}), (std::vector<int>{0, 0, 0, 1}));
}

TEST(Wilcoxon, Examples) {
  const auto r = ss::wilcoxon_rank_sum({1, 2}, {3, 4});
  EXPECT_TRUE(r.exact);
  EXPECT_DOUBLE_EQ(r.statistic, 3.0);
  EXPECT_NEAR(r.p, 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(ss::wilcoxon_rank_sum({5, 5, 5}, {5, 5}).p, 1.0);
  EXPECT_THROW(ss::wilcoxon_rank_sum({}, {1}), crlm::InvalidArgument);
}

TEST(Wilcoxon, ExactMatchesEnumerationUpToTen) {
  Rng rng(14);
  for (std::size_t na = 1; na <= 9; ++na)
    for (std::size_t nb = 1; na + nb <= 10; ++nb)
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> a, b;
        const bool ties = trial % 2 == 1;
        for (std::size_t i = 0; i < na; ++i) a.push_back(ties ? static_cast<double>(rng.below(4)) : rng.normal());
        for (std::size_t i = 0; i < nb; ++i) b.push_back(ties ? static_cast<double>(rng.below(4)) : rng.normal(0.5, 1));
        const auto r = ss::wilcoxon_rank_sum(a, b);
        EXPECT_TRUE(r.exact);
        EXPECT_NEAR(r.p, oracle_ranksum_p(a, b), 1e-12) << na << "," << nb;
      }
}

TEST(Wilcoxon, NormalApproximation) {
  const auto r = ss::wilcoxon_rank_sum({1.1, 2.3, 2.3, 4.0, 5.5, 6.1, 7.7, 8.2}, {3.3, 4.0, 9.1, 10.2, 11.5, 12.0, 13.3, 2.3});
  EXPECT_FALSE(r.exact);
  EXPECT_NEAR(r.p, 0.09169028154942915, 1e-12);
  Rng rng(15);
  std::vector<double> a, b;
  for (int i = 0; i < 60; ++i) {
    a.push_back(rng.normal());
    b.push_back(rng.normal(1.0, 1.0));
  }
  EXPECT_LT(ss::wilcoxon_rank_sum(a, b).p, 0.01);
}

TEST(Resampling, KFoldPartition) {
  const auto plan = ss::repeated_kfold(9, 3, 15, 1);
  ASSERT_EQ(plan.size(), 15u);
  for (const auto& rep : plan) {
    std::vector<int> seen(9, 0);
    for (const auto& f : rep) {
      EXPECT_EQ(f.test.size(), 3u);
      EXPECT_EQ(f.train.size(), 6u);
      for (auto i : f.test) ++seen[i];
    }
    EXPECT_EQ(seen, std::vector<int>(9, 1));
  }
  EXPECT_NE(plan[0][0].test, plan[1][0].test);
  const auto uneven = ss::repeated_kfold(10, 3, 1, 2);
  EXPECT_EQ(uneven[0][0].test.size() + uneven[0][1].test.size() + uneven[0][2].test.size(), 10u);
  EXPECT_THROW(ss::repeated_kfold(2, 3, 1, 0), crlm::InvalidArgument);
  EXPECT_EQ(ss::repeated_kfold(30, 3, 2, 7)[1][2].test, ss::repeated_kfold(30, 3, 2, 7)[1][2].test);
}

TEST(Resampling, RandomizationTest) {
  const auto cohort = crlm::synthgen::generate_linear_cohort(200, 1.0, 0.2, 16);
  const auto& x = cohort.column("x");
  auto c_of = [&](const std::vector<SurvivalLabel>& y, int) { return ss::concordance_index(y, x); };
  const auto r = ss::randomization_test(cohort.labels, c_of, 200, 3);
  EXPECT_GT(r.observed, 0.6);
  EXPECT_NEAR(r.null_mean(), 0.5, 0.03);
  EXPECT_GT(r.observed, r.null_quantile(0.95));
  EXPECT_NEAR(r.p, 1.0 / 201.0, 1e-15);
  const auto again = ss::randomization_test(cohort.labels, c_of, 200, 3, 4);
  EXPECT_EQ(again.null, r.null);

  const std::vector<double> flat(cohort.size(), 1.0);
  const auto constant = ss::randomization_test(
      cohort.labels, [&](const std::vector<SurvivalLabel>& y, int) { return ss::concordance_index(y, flat); }, 20, 3);
  EXPECT_DOUBLE_EQ(constant.observed, 0.5);
  EXPECT_DOUBLE_EQ(constant.p, 1.0);
}

TEST(Cohort, CsvRoundTrip) {
  auto t = crlm::synthgen::generate_linear_cohort(20, 0.5, 0.3, 17);
  std::stringstream ss_;
  ss::write_cohort_csv(ss_, t);
  const auto back = ss::read_cohort_csv(ss_);
  EXPECT_EQ(back.ids, t.ids);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.column("x"), t.column("x"));
  std::stringstream bad("id,time\n");
  EXPECT_THROW(ss::read_cohort_csv(bad), crlm::IoError);
}
