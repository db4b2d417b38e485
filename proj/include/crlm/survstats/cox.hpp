#pragma once

#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "crlm/rng.hpp"
#include "crlm/survstats/cohort.hpp"
#include "crlm/survstats/concordance.hpp"
#include "crlm/survstats/distributions.hpp"

namespace crlm::survstats {

struct CoxOptions {
  bool standardize = true;
  int max_iter = 100;
  double tol = 1e-9;  // on max |delta beta|
};

struct CovariateFit {
  std::string name;
  double coef = 0.0;
  double se = 0.0;
  double hr = 1.0;
  double ci_lo = 1.0;
  double ci_hi = 1.0;
  double z = 0.0;
  double p = 1.0;
};

struct FitReport {
  std::vector<CovariateFit> covariates;
  double c_index = 0.5;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  std::size_t n = 0;
  std::size_t events = 0;
  bool standardized = true;
};

struct EfronEval {
  double loglik = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;  // observed information (negative Hessian)
};

// Efron partial log-likelihood with gradient and information. Rows of x are
// patients.
inline EfronEval efron_loglik(const Eigen::MatrixXd& x, const std::vector<SurvivalLabel>& labels,
                              const Eigen::VectorXd& beta) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = x.cols();
  EfronEval out{0.0, Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(p, p)};
  const Eigen::VectorXd eta = x * beta;
  const double shift = n ? eta.maxCoeff() : 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return labels[a].time > labels[b].time; });

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && labels[order[stop]].time == labels[order[start]].time) ++stop;
    double d0 = 0.0;
    Eigen::VectorXd d1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(p, p);
    int d = 0;
    for (std::size_t k = start; k < stop; ++k) {
      const auto i = order[k];
      const double w = std::exp(eta[i] - shift);
      const Eigen::VectorXd xi = x.row(i).transpose();
      s0 += w;
      s1 += w * xi;
      s2.noalias() += w * xi * xi.transpose();
      if (labels[i].event) {
        ++d;
        d0 += w;
        d1 += w * xi;
        d2.noalias() += w * xi * xi.transpose();
        out.loglik += eta[i] - shift;
        out.grad += xi;
      }
    }
    for (int l = 0; l < d; ++l) {
      const double phi = static_cast<double>(l) / d;
      const double a0 = s0 - phi * d0;
      const Eigen::VectorXd a1 = s1 - phi * d1;
      const Eigen::MatrixXd a2 = s2 - phi * d2;
      out.loglik -= std::log(a0);
      out.grad -= a1 / a0;
      out.info += a2 / a0 - (a1 * a1.transpose()) / (a0 * a0);
    }
    start = stop;
  }
  return out;
}

struct CoxSolution {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
  double loglik = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  std::vector<double> trace;  // log-likelihood after each accepted step, starting at beta = 0
};

// Newton-Raphson with step halving.
inline CoxSolution cox_newton(const Eigen::MatrixXd& x, const std::vector<SurvivalLabel>& labels,
                              const CoxOptions& opt = {}) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw InvalidArgument("cox: rows/labels mismatch");
  if (std::none_of(labels.begin(), labels.end(), [](const SurvivalLabel& l) { return l.event; }))
    throw InvalidArgument("cox: no events");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  EfronEval cur = efron_loglik(x, labels, beta);
  std::vector<double> trace{cur.loglik};
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, cur.info.norm()))
      throw SingularMatrix("cox: information matrix is singular");
    Eigen::VectorXd step = ldlt.solve(cur.grad);
    EfronEval next = efron_loglik(x, labels, beta + step);
    int halvings = 0;
    while (!(next.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) && halvings < 40) {
      step /= 2.0;
      next = efron_loglik(x, labels, beta + step);
      ++halvings;
    }
    if (!std::isfinite(next.loglik)) throw ConvergenceError("cox: non-finite likelihood");
    beta += step;
    cur = std::move(next);
    trace.push_back(cur.loglik);
    if (step.cwiseAbs().maxCoeff() < opt.tol) {
      Eigen::LDLT<Eigen::MatrixXd> fin(cur.info);
      if (fin.info() != Eigen::Success || !fin.isPositive()) throw SingularMatrix("cox: information matrix is singular");
      return {beta, fin.solve(Eigen::MatrixXd::Identity(x.cols(), x.cols())), cur.loglik, cur.grad.norm(), it, trace};
    }
  }
  throw ConvergenceError("cox: no convergence in " + std::to_string(opt.max_iter) + " iterations");
}

inline Eigen::MatrixXd design_matrix(const CohortTable& t, const std::vector<std::string>& covariates, bool standardize) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(covariates.size()));
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    const auto& col = t.column(covariates[k]);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(col[i])) throw InvalidArgument("cox: missing value in '" + covariates[k] + "'");
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = col[i];
    }
  }
  if (standardize) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      const double m = x.col(k).mean();
      const double sd = std::sqrt((x.col(k).array() - m).square().sum() / static_cast<double>(std::max<Eigen::Index>(1, x.rows() - 1)));
      if (!(sd > 0)) throw SingularMatrix("cox: covariate '" + covariates[k] + "' is constant");
      x.col(k) = (x.col(k).array() - m) / sd;
    }
  }
  return x;
}

inline FitReport coxph_fit(const CohortTable& t, const std::vector<std::string>& covariates, const CoxOptions& opt = {}) {
  t.validate();
  if (covariates.empty()) throw InvalidArgument("cox: no covariates selected");
  const Eigen::MatrixXd x = design_matrix(t, covariates, opt.standardize);
  const CoxSolution s = cox_newton(x, t.labels, opt);
  FitReport r;
  r.n = t.size();
  r.events = t.event_count();
  r.iterations = s.iterations;
  r.log_likelihood = s.loglik;
  r.gradient_norm = s.gradient_norm;
  r.standardized = opt.standardize;
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    CovariateFit c;
    c.name = covariates[k];
    c.coef = s.beta[kk];
    c.se = std::sqrt(s.covariance(kk, kk));
    c.hr = std::exp(c.coef);
    c.ci_lo = std::exp(c.coef - kZ975 * c.se);
    c.ci_hi = std::exp(c.coef + kZ975 * c.se);
    c.z = c.coef / c.se;
    c.p = normal_two_sided_p(c.z);
    r.covariates.push_back(c);
  }
  const Eigen::VectorXd lp = x * s.beta;
  r.c_index = concordance_index(t.times(), t.events(), std::vector<double>(lp.data(), lp.data() + lp.size()));
  return r;
}

struct BootstrapCI {
  std::string name;
  double hr = 1.0;  // full-sample estimate
  double lo = 1.0;
  double hi = 1.0;
};

struct BootstrapResult {
  std::vector<BootstrapCI> covariates;
  int resamples = 0;
  int failed = 0;
};

// Percentile CIs of HR over patient-level resamples. Resample b draws from
// its own stream, so results do not depend on the thread count.
inline BootstrapResult bootstrap_hr(const CohortTable& t, const std::vector<std::string>& covariates, int b,
                                    std::uint64_t seed, const CoxOptions& opt = {}, int threads = 1) {
  if (b < 1) throw InvalidArgument("bootstrap: B must be >= 1");
  const FitReport full = coxph_fit(t, covariates, opt);
  std::vector<std::vector<double>> hrs(static_cast<std::size_t>(b));
  std::vector<char> ok(static_cast<std::size_t>(b), 0);
  auto one = [&](std::size_t r) {
    Rng rng(Rng::mix(seed + 0x9e3779b97f4a7c15ULL * (r + 1)));
    std::vector<std::size_t> rows(t.size());
    for (auto& i : rows) i = rng.below(t.size());
    CohortTable s = t.subset(rows);
    for (std::size_t i = 0; i < s.ids.size(); ++i) s.ids[i] = std::to_string(i);
    try {
      const auto rep = coxph_fit(s, covariates, opt);
      for (const auto& c : rep.covariates) hrs[r].push_back(c.hr);
      ok[r] = 1;
    } catch (const Error&) {
    }
  };
  if (threads <= 1) {
    for (std::size_t r = 0; r < hrs.size(); ++r) one(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int k = 0; k < threads; ++k)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < hrs.size(); r = next++) one(r);
      });
  }
  BootstrapResult out;
  out.resamples = b;
  out.failed = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
  if (out.failed * 10 > b) throw ConvergenceError("bootstrap: " + std::to_string(out.failed) + " of " + std::to_string(b) + " resamples failed");
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    std::vector<double> v;
    for (std::size_t r = 0; r < hrs.size(); ++r)
      if (ok[r]) v.push_back(hrs[r][k]);
    out.covariates.push_back({covariates[k], full.covariates[k].hr, quantile(v, 0.025), quantile(v, 0.975)});
  }
  return out;
}

inline nlohmann::json to_json(const FitReport& r) {
  nlohmann::json cov = nlohmann::json::array();
  for (const auto& c : r.covariates)
    cov.push_back({{"name", c.name}, {"coef", c.coef}, {"se", c.se}, {"hr", c.hr}, {"ci_lo", c.ci_lo},
                   {"ci_hi", c.ci_hi}, {"z", c.z}, {"p", c.p}});
  return {{"covariates", cov},     {"c_index", r.c_index}, {"log_likelihood", r.log_likelihood},
          {"iterations", r.iterations}, {"n", r.n},        {"events", r.events},
          {"standardized", r.standardized}};
}

}  // namespace crlm::survstats
