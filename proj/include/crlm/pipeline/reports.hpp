#pragma once

#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/survstats.hpp"

namespace crlm::pipeline {

inline void write_cox_csv(std::ostream& os, const survstats::FitReport& r,
                          const std::optional<survstats::BootstrapResult>& boot = std::nullopt) {
  os << "covariate,coef,se,hr,ci_lo,ci_hi,z,p";
  if (boot) os << ",boot_lo,boot_hi";
  os << "\n" << std::setprecision(10);
  for (std::size_t k = 0; k < r.covariates.size(); ++k) {
    const auto& c = r.covariates[k];
    os << c.name << "," << c.coef << "," << c.se << "," << c.hr << "," << c.ci_lo << "," << c.ci_hi << "," << c.z
       << "," << c.p;
    if (boot) os << "," << boot->covariates[k].lo << "," << boot->covariates[k].hi;
    os << "\n";
  }
}

// KM step data for plotting: one row per (group, distinct time).
inline void write_km_csv(std::ostream& os, const std::map<std::string, survstats::KMCurve>& curves) {
  os << "group,time,survival,at_risk,events,censored\n" << std::setprecision(10);
  for (const auto& [g, c] : curves)
    for (std::size_t k = 0; k < c.times.size(); ++k)
      os << g << "," << c.times[k] << "," << c.survival[k] << "," << c.at_risk[k] << "," << c.events[k] << ","
         << c.censored[k] << "\n";
}

struct Stratification {
  std::map<std::string, survstats::KMCurve> curves;  // "low", "high"
  survstats::LogRankResult logrank;
};

// Median split of a risk score into low/high groups, KM per group and the
// log-rank comparison.
inline Stratification stratify(const std::vector<SurvivalLabel>& labels, const std::vector<double>& risk) {
  const auto groups = survstats::median_dichotomize(risk);
  Stratification s;
  std::vector<double> t;
  std::vector<bool> e;
  for (const auto& l : labels) {
    t.push_back(l.time);
    e.push_back(l.event);
  }
  for (int g : {0, 1}) {
    std::vector<double> tg;
    std::vector<bool> eg;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (groups[i] == g) {
        tg.push_back(t[i]);
        eg.push_back(e[i]);
      }
    if (!tg.empty()) s.curves[g == 0 ? "low" : "high"] = survstats::kaplan_meier(tg, eg);
  }
  if (s.curves.size() == 2) s.logrank = survstats::logrank_test(t, e, groups);
  return s;
}

inline nlohmann::json to_json(const Stratification& s) {
  nlohmann::json curves = nlohmann::json::object();
  for (const auto& [g, c] : s.curves) curves[g] = survstats::to_json(c);
  return {{"curves", curves},
          {"logrank", {{"chi2", s.logrank.chi2}, {"p", s.logrank.p}, {"observed_low", s.logrank.observed_a},
                       {"expected_low", s.logrank.expected_a}, {"variance", s.logrank.variance}}}};
}

}  // namespace crlm::pipeline
