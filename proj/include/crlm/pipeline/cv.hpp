#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "crlm/radiomics/normalize.hpp"
#include "crlm/radiomics/preprocess.hpp"
#include "crlm/survaminn.hpp"
#include "crlm/survstats/concordance.hpp"
#include "crlm/survstats/distributions.hpp"
#include "crlm/survstats/resampling.hpp"

namespace crlm::pipeline {

using radiomics::Phase;

// One patient's outcome and tumor bags per imaging phase.
struct PatientBags {
  std::string id;
  SurvivalLabel label;
  std::map<Phase, survaminn::TumorFeatureBag> bags;
};

inline std::vector<PatientBags> single_phase(const std::vector<survaminn::Sample>& samples) {
  std::vector<PatientBags> out;
  for (const auto& s : samples) out.push_back({s.bag.patient_id, s.label, {{s.bag.phase, s.bag}}});
  return out;
}

struct CvOptions {
  survaminn::TrainConfig train;
  bool normalize = false;  // fit two-step normalization on each training fold
  std::optional<double> exclude_small_pct;  // drop tumors at or below this percentile of training diameters
};

struct FoldOutcome {
  int repeat = 0;
  int fold = 0;
  double c_index = NAN;  // NaN when the test fold has no permissible pair
  std::size_t n_test = 0;
};

struct CvResult {
  std::vector<FoldOutcome> folds;
  // oof_risk[r][i]: held-out fused hazard of patient i in repeat r.
  std::vector<std::vector<double>> oof_risk;

  double mean_c_index() const {
    std::vector<double> v;
    for (const auto& f : folds)
      if (std::isfinite(f.c_index)) v.push_back(f.c_index);
    if (v.empty()) throw InvalidArgument("cv: no fold produced a C-index");
    return survstats::mean_of(v);
  }

  // Per-patient mean over repeats.
  std::vector<double> mean_oof_risk() const {
    std::vector<double> out(oof_risk.empty() ? 0 : oof_risk.front().size(), 0.0);
    for (const auto& r : oof_risk)
      for (std::size_t i = 0; i < r.size(); ++i) out[i] += r[i] / static_cast<double>(oof_risk.size());
    return out;
  }
};

namespace detail {

inline survaminn::TumorFeatureBag drop_rows(const survaminn::TumorFeatureBag& b, const std::vector<char>& keep) {
  survaminn::TumorFeatureBag out{b.patient_id, {}, {}, {}, b.phase};
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < b.x.rows(); ++r)
    if (keep[static_cast<std::size_t>(r)]) rows.push_back(r);
  out.x.resize(static_cast<Eigen::Index>(rows.size()), b.x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.x.row(static_cast<Eigen::Index>(k)) = b.x.row(rows[k]);
    out.volumes_mm3.push_back(b.volumes_mm3[static_cast<std::size_t>(rows[k])]);
    out.diameters_mm.push_back(b.diameters_mm[static_cast<std::size_t>(rows[k])]);
  }
  return out;
}

// Removes small tumors; a bag that would become empty keeps its largest one.
inline survaminn::TumorFeatureBag exclude_small(const survaminn::TumorFeatureBag& b, double threshold) {
  std::vector<char> keep(static_cast<std::size_t>(b.x.rows()));
  bool any = false;
  for (std::size_t r = 0; r < keep.size(); ++r) any |= (keep[r] = b.diameters_mm[r] > threshold) != 0;
  if (!any) {
    const auto big = std::max_element(b.diameters_mm.begin(), b.diameters_mm.end()) - b.diameters_mm.begin();
    keep[static_cast<std::size_t>(big)] = 1;
  }
  return drop_rows(b, keep);
}

inline survaminn::TumorFeatureBag normalized(const survaminn::TumorFeatureBag& b, const radiomics::NormalizationParams& p) {
  survaminn::TumorFeatureBag out = b;
  for (Eigen::Index r = 0; r < b.x.rows(); ++r) {
    std::vector<double> f(static_cast<std::size_t>(b.x.cols()));
    for (Eigen::Index k = 0; k < b.x.cols(); ++k) f[static_cast<std::size_t>(k)] = b.x(r, k);
    const auto z = radiomics::two_step_normalize(f, p);
    for (Eigen::Index k = 0; k < b.x.cols(); ++k) out.x(r, k) = z[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace detail

// A model per phase trained on the fold's training patients; test patients
// get the late-fused hazard of the phases they have.
struct FoldModel {
  std::map<Phase, survaminn::ModelParams> models;
  std::map<Phase, radiomics::NormalizationParams> norms;
  std::optional<double> small_threshold;
};

inline survaminn::TumorFeatureBag prepare_bag(const survaminn::TumorFeatureBag& b, const FoldModel& m) {
  survaminn::TumorFeatureBag out = m.small_threshold ? detail::exclude_small(b, *m.small_threshold) : b;
  if (auto n = m.norms.find(b.phase); n != m.norms.end()) out = detail::normalized(out, n->second);
  return out;
}

inline FoldModel fit_fold(const std::vector<PatientBags>& patients, const std::vector<std::size_t>& train_idx,
                          const CvOptions& opt, std::uint64_t seed, std::stop_token stop = {}) {
  FoldModel m;
  if (opt.exclude_small_pct) {
    std::vector<double> d;
    for (auto i : train_idx)
      for (const auto& [ph, b] : patients[i].bags) d.insert(d.end(), b.diameters_mm.begin(), b.diameters_mm.end());
    if (!d.empty()) m.small_threshold = radiomics::small_tumor_threshold(d, *opt.exclude_small_pct);
  }
  for (Phase ph : {Phase::pre, Phase::post}) {
    std::vector<survaminn::Sample> train;
    for (auto i : train_idx)
      if (auto it = patients[i].bags.find(ph); it != patients[i].bags.end() && it->second.x.rows() > 0)
        train.push_back({prepare_bag(it->second, m), patients[i].label});  // m has no norms yet
    if (train.size() < 2 || std::none_of(train.begin(), train.end(), [](const auto& s) { return s.label.event; })) continue;
    if (opt.normalize) {
      std::vector<std::vector<double>> rows;
      for (const auto& s : train)
        for (Eigen::Index r = 0; r < s.bag.x.rows(); ++r) {
          std::vector<double> f(static_cast<std::size_t>(s.bag.x.cols()));
          for (Eigen::Index k = 0; k < s.bag.x.cols(); ++k) f[static_cast<std::size_t>(k)] = s.bag.x(r, k);
          rows.push_back(std::move(f));
        }
      m.norms[ph] = radiomics::fit_normalization(rows);
      for (auto& s : train) s.bag = detail::normalized(s.bag, m.norms[ph]);
    }
    survaminn::TrainConfig tc = opt.train;
    tc.seed = Rng::mix(seed + static_cast<std::uint64_t>(ph));
    m.models[ph] = survaminn::train(train, tc, stop).params;
  }
  if (m.models.empty()) throw InvalidArgument("cv: no phase had enough training patients with events");
  return m;
}

inline std::optional<double> predict_patient(const PatientBags& p, const FoldModel& m, const survaminn::TrainConfig& tc) {
  std::optional<double> by_phase[2];
  for (const auto& [ph, model] : m.models)
    if (auto it = p.bags.find(ph); it != p.bags.end() && it->second.x.rows() > 0)
      by_phase[static_cast<int>(ph)] = survaminn::predict_hazard(model, prepare_bag(it->second, m), tc.pooling, tc.largest_by);
  if (!by_phase[0] && !by_phase[1]) return std::nullopt;
  return survaminn::late_fuse(by_phase[0], by_phase[1]);
}

inline CvResult cross_validate(const std::vector<PatientBags>& patients, const survstats::SplitPlan& plan,
                               const CvOptions& opt, std::stop_token stop = {}) {
  CvResult res;
  for (std::size_t r = 0; r < plan.size(); ++r) {
    std::vector<double> oof(patients.size(), NAN);
    for (std::size_t f = 0; f < plan[r].size(); ++f) {
      const auto& fold = plan[r][f];
      const std::uint64_t seed = Rng::mix(opt.train.seed + 0x9e3779b97f4a7c15ULL * (r * 1000 + f + 1));
      const FoldModel m = fit_fold(patients, fold.train, opt, seed, stop);
      std::vector<double> risk;
      std::vector<SurvivalLabel> labels;
      for (auto i : fold.test)
        if (auto h = predict_patient(patients[i], m, opt.train)) {
          oof[i] = *h;
          risk.push_back(*h);
          labels.push_back(patients[i].label);
        }
      FoldOutcome out{static_cast<int>(r), static_cast<int>(f), NAN, risk.size()};
      std::vector<double> t;
      std::vector<bool> e;
      for (const auto& l : labels) {
        t.push_back(l.time);
        e.push_back(l.event);
      }
      if (survstats::concordance_counts(t, e, risk).permissible() > 0) out.c_index = survstats::concordance_index(labels, risk);
      res.folds.push_back(out);
    }
    res.oof_risk.push_back(std::move(oof));
  }
  return res;
}

}  // namespace crlm::pipeline
