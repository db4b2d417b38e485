#pragma once

// End-to-end run: segment (or load) masks per phase, post-process, extract
// radiomics, cross-validate SurvAMINN, and write statistics. Every artifact
// is recorded in <out>/manifest.json with its SHA-256 digest.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <stop_token>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/evalkit.hpp"
#include "crlm/pipeline/config.hpp"
#include "crlm/pipeline/cv.hpp"
#include "crlm/pipeline/digest.hpp"
#include "crlm/pipeline/reports.hpp"
#include "crlm/radiomics.hpp"
#include "crlm/survaminn/io.hpp"
#include "crlm/survstats.hpp"
#include "crlm/volgrid.hpp"

namespace crlm::pipeline {

struct ArtifactRecord {
  std::string path;  // relative to the output root
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct StageRecord {
  std::string name;
  std::string status = "pending";  // done, skipped, failed
  std::vector<ArtifactRecord> artifacts;
  std::string note;
};

struct Manifest {
  std::string config_sha256;
  std::vector<StageRecord> stages;
  bool complete = false;

  const StageRecord* stage(const std::string& name) const {
    for (const auto& s : stages)
      if (s.name == name) return &s;
    return nullptr;
  }

  nlohmann::json to_json() const {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& s : stages) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& r : s.artifacts) a.push_back({{"path", r.path}, {"sha256", r.sha256}, {"bytes", r.bytes}});
      nlohmann::json sj = {{"name", s.name}, {"status", s.status}, {"artifacts", a}};
      if (!s.note.empty()) sj["note"] = s.note;
      st.push_back(sj);
    }
    return {{"format", "crlm-manifest"}, {"version", 1}, {"config_sha256", config_sha256}, {"complete", complete}, {"stages", st}};
  }
};

// A stage failed; the partial manifest has been written.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, Manifest partial)
      : Error(stage + ": " + what), stage_(std::move(stage)), manifest_(std::move(partial)) {}
  const std::string& stage() const { return stage_; }
  const Manifest& manifest() const { return manifest_; }

 private:
  std::string stage_;
  Manifest manifest_;
};

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> k{"segment", "evaluate", "features", "train", "stats"};
  return k;
}

// Digest of the configuration with the output location removed, so moving
// the output directory does not change it.
inline std::string config_digest(const RunConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  j.erase("out_root");
  j["data_root"] = fs::absolute(cfg.data_root).lexically_normal().string();
  return sha256_hex(j.dump());
}

namespace detail {

class RunContext {
 public:
  RunContext(const RunConfig& cfg, std::stop_token stop) : cfg_(cfg), stop_(stop) {
    manifest_.config_sha256 = config_digest(cfg);
  }

  const RunConfig& cfg() const { return cfg_; }
  fs::path out(const std::string& rel) const { return cfg_.out_root / rel; }
  void check_stop() const {
    if (stop_.stop_requested()) throw Canceled();
  }
  std::stop_token stop() const { return stop_; }

  void record(const std::string& rel) {
    const fs::path p = out(rel);
    current_->artifacts.push_back({rel, sha256_file(p), fs::file_size(p)});
  }
  void note(const std::string& s) { current_->note = s; }
  void skip(const std::string& why) {
    current_->status = "skipped";
    current_->note = why;
  }

  void write_text(const std::string& rel, const std::string& text) {
    fs::create_directories(out(rel).parent_path());
    std::ofstream os(out(rel), std::ios::binary);
    os << text;
    if (!os) throw IoError(IoErrorKind::write_failed, out(rel).string());
    os.close();
    record(rel);
  }

  void run_stage(const std::string& name, const std::function<void()>& fn) {
    manifest_.stages.push_back({name, "running", {}, ""});
    current_ = &manifest_.stages.back();
    try {
      fn();
      if (current_->status == "running") current_->status = "done";
    } catch (const std::exception& e) {
      current_->status = "failed";
      current_->note = e.what();
      write_manifest();
      throw StageError(name, e.what(), manifest_);
    }
  }

  void write_manifest() {
    std::ofstream os(out("manifest.json"));
    os << manifest_.to_json().dump(2) << "\n";
  }

  Manifest& manifest() { return manifest_; }

 private:
  const RunConfig& cfg_;
  std::stop_token stop_;
  Manifest manifest_;
  StageRecord* current_ = nullptr;
};

inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

struct CaseMasks {
  std::map<Phase, Volume3D> images;
  std::map<Phase, Mask3D> labels;
};

// Segments one phase: union of per-prompt SAMONAI tumor masks, post-processed
// against the SAMONAI liver mask (or against the whole volume when no liver
// prompt is given). Tumor voxels override liver.
inline Mask3D segment_phase(const Volume3D& image, const CaseInput& c, const Segmenter2D& seg, const RunConfig& cfg,
                            std::stop_token stop = {}) {
  Mask3D tumors(image.geometry());
  for (const auto& p : c.tumor_prompts) {
    const Mask3D m = run_samonai(image, p, seg, cfg.samonai, stop);
    for (std::size_t i = 0; i < m.size(); ++i) tumors[i] |= m[i];
  }
  Mask3D liver(image.geometry(), c.liver_prompt ? 0 : 1);
  if (c.liver_prompt) liver = run_samonai(image, *c.liver_prompt, seg, cfg.samonai, stop);
  // tumors are holes in the grown liver; test them against its filled envelope
  const Mask3D kept = evalkit::postprocess(tumors, fill_holes(liver), cfg.postprocess);
  Mask3D labels(image.geometry());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (c.liver_prompt && liver[i]) labels[i] = static_cast<std::uint8_t>(Label::liver);
    if (kept[i]) labels[i] = static_cast<std::uint8_t>(Label::tumor);
  }
  return labels;
}

// Groups feature rows into per-patient, per-phase bags.
inline std::map<std::string, std::map<Phase, survaminn::TumorFeatureBag>> bags_from_rows(
    const std::vector<radiomics::FeatureRow>& rows) {
  std::map<std::string, std::map<Phase, std::vector<const radiomics::FeatureRow*>>> grouped;
  for (const auto& r : rows) grouped[r.patient_id][r.phase].push_back(&r);
  std::map<std::string, std::map<Phase, survaminn::TumorFeatureBag>> out;
  for (const auto& [id, phases] : grouped)
    for (const auto& [ph, rs] : phases) {
      survaminn::TumorFeatureBag b{id, survaminn::Matrix(static_cast<Eigen::Index>(rs.size()), static_cast<Eigen::Index>(radiomics::kFeatureCount)), {}, {}, ph};
      for (std::size_t k = 0; k < rs.size(); ++k) {
        for (std::size_t f = 0; f < radiomics::kFeatureCount; ++f)
          b.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) = rs[k]->features[f];
        b.volumes_mm3.push_back(rs[k]->volume_mm3);
        b.diameters_mm.push_back(rs[k]->diameter_mm);
      }
      out[id][ph] = std::move(b);
    }
  return out;
}

// Runs the stages in order up to and including `last_stage`.
inline Manifest run_end_to_end(const RunConfig& cfg, std::stop_token stop = {}, const std::string& last_stage = "stats") {
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), last_stage) == names.end())
    throw InvalidArgument("unknown stage '" + last_stage + "'");
  cfg.validate();
  cfg.check_inputs_exist();
  const auto segmenter = make_segmenter(cfg.segmenter);
  const survstats::CohortTable clinical = survstats::load_cohort_csv(cfg.resolve(cfg.clinical));
  std::map<std::string, SurvivalLabel> outcome;
  for (std::size_t i = 0; i < clinical.size(); ++i) outcome[clinical.ids[i]] = clinical.labels[i];
  for (const auto& c : cfg.cases)
    if (!outcome.contains(c.id)) throw InvalidArgument("config: case '" + c.id + "' is missing from " + cfg.clinical);

  fs::create_directories(cfg.out_root);
  detail::RunContext ctx(cfg, stop);
  std::map<std::string, CaseMasks> masks;
  std::vector<radiomics::FeatureRow> rows;
  std::vector<PatientBags> patients;
  CvResult cv;
  auto finished = [&](const std::string& name) {
    if (name != last_stage) return false;
    ctx.manifest().complete = true;
    ctx.write_manifest();
    return true;
  };

  ctx.run_stage("segment", [&] {
    for (const auto& c : cfg.cases)
      for (const auto& [ph, path] : c.images) {
        ctx.check_stop();
        CaseMasks& cm = masks[c.id];
        cm.images[ph] = load_volume(cfg.resolve(path).string());
        Mask3D lab = c.labels.contains(ph) ? load_mask(cfg.resolve(c.labels.at(ph)).string())
                                           : segment_phase(cm.images[ph], c, *segmenter, cfg, stop);
        if (lab.geometry().dims != cm.images[ph].geometry().dims)
          throw InvalidArgument("case '" + c.id + "': mask and image geometry differ");
        const std::string rel = "masks/" + c.id + "_" + phase_name(ph) + ".nii";
        fs::create_directories(ctx.out("masks"));
        save_mask(lab, ctx.out(rel).string());
        ctx.record(rel);
        cm.labels[ph] = std::move(lab);
      }
  });
  if (finished("segment")) return ctx.manifest();

  ctx.run_stage("evaluate", [&] {
    std::vector<evalkit::CaseReport> reports;
    for (const auto& c : cfg.cases)
      for (const auto& [ph, path] : c.reference) {
        if (!masks[c.id].labels.contains(ph)) continue;
        const Mask3D ref = load_mask(cfg.resolve(path).string());
        reports.push_back(evalkit::evaluate_case(c.id + "_" + phase_name(ph), masks[c.id].labels.at(ph), ref));
      }
    if (reports.empty()) return ctx.skip("no reference masks configured");
    std::ostringstream csv;
    evalkit::write_report_csv(csv, reports);
    ctx.write_text("segmentation_report.csv", csv.str());
    ctx.write_text("segmentation_summary.json", detail::json_text(evalkit::summary_json(reports)));
  });
  if (finished("evaluate")) return ctx.manifest();

  ctx.run_stage("features", [&] {
    for (const auto& c : cfg.cases)
      for (const auto& [ph, lab] : masks[c.id].labels) {
        ctx.check_stop();
        const auto inst = radiomics::tumor_instances(c.id, ph, binary_view(lab, Label::tumor));
        const auto r = radiomics::extract_all(masks[c.id].images.at(ph), inst, cfg.radiomics, cfg.threads);
        rows.insert(rows.end(), r.begin(), r.end());
      }
    if (rows.empty()) throw Error("no tumors found in any case");
    std::ostringstream csv;
    radiomics::write_feature_csv(csv, rows);
    ctx.write_text("features.csv", csv.str());
  });
  if (finished("features")) return ctx.manifest();

  ctx.run_stage("train", [&] {
    const auto bags = bags_from_rows(rows);
    std::vector<std::string> dropped;
    for (const auto& c : cfg.cases) {
      auto it = bags.find(c.id);
      if (it == bags.end()) {
        dropped.push_back(c.id);
        continue;
      }
      patients.push_back({c.id, outcome.at(c.id), it->second});
    }
    if (!dropped.empty()) {
      std::string s = "no tumors, excluded:";
      for (const auto& d : dropped) s += " " + d;
      ctx.note(s);
    }
    CvOptions opt{cfg.train, true, cfg.exclude_small_pct};
    opt.train.seed = cfg.seed;
    const auto plan = survstats::repeated_kfold(patients.size(), cfg.cv_folds, cfg.cv_repeats, cfg.seed);
    cv = cross_validate(patients, plan, opt, stop);
    std::ostringstream folds;
    folds << "repeat,fold,n_test,c_index\n" << std::setprecision(10);
    for (const auto& f : cv.folds) folds << f.repeat << "," << f.fold << "," << f.n_test << "," << f.c_index << "\n";
    ctx.write_text("cv_folds.csv", folds.str());
    std::ostringstream oof;
    oof << "patient_id";
    for (std::size_t r = 0; r < cv.oof_risk.size(); ++r) oof << ",repeat_" << r;
    oof << ",mean\n" << std::setprecision(10);
    const auto mean = cv.mean_oof_risk();
    for (std::size_t i = 0; i < patients.size(); ++i) {
      oof << patients[i].id;
      for (const auto& r : cv.oof_risk) oof << "," << r[i];
      oof << "," << mean[i] << "\n";
    }
    ctx.write_text("oof_risk.csv", oof.str());

    std::vector<std::size_t> all(patients.size());
    std::iota(all.begin(), all.end(), 0);
    const FoldModel final_model = fit_fold(patients, all, opt, Rng::mix(cfg.seed), stop);
    for (const auto& [ph, params] : final_model.models) {
      const std::string base = std::string("models/survaminn_") + phase_name(ph);
      ctx.write_text(base + ".json", detail::json_text(survaminn::to_json({params, opt.train.pooling, opt.train.largest_by, ph})));
      ctx.write_text(base + "_normalization.json", detail::json_text(radiomics::to_json(final_model.norms.at(ph))));
    }
  });
  if (finished("train")) return ctx.manifest();

  ctx.run_stage("stats", [&] {
    survstats::CohortTable t;
    for (const auto& p : patients) {
      t.ids.push_back(p.id);
      t.labels.push_back(p.label);
    }
    const auto risk = cv.mean_oof_risk();
    t.add_column("survaminn_risk", risk);
    nlohmann::json summary = {{"patients", t.size()}, {"events", t.event_count()},
                              {"cv_mean_c_index", cv.mean_c_index()},
                              {"oof_c_index", survstats::concordance_index(t.labels, risk)}};
    const auto fit = survstats::coxph_fit(t, {"survaminn_risk"});
    std::optional<survstats::BootstrapResult> boot;
    summary["cox"] = survstats::to_json(fit);
    if (cfg.bootstrap > 0) {
      // small cohorts can make too many resamples degenerate; keep the rest of the report
      try {
        boot = survstats::bootstrap_hr(t, {"survaminn_risk"}, cfg.bootstrap, cfg.seed, {}, cfg.threads);
      } catch (const ConvergenceError& e) {
        summary["bootstrap"] = {{"error", e.what()}};
        ctx.note(e.what());
      }
    }
    if (boot) summary["bootstrap"] = {{"resamples", boot->resamples}, {"failed", boot->failed},
                                      {"hr_lo", boot->covariates[0].lo}, {"hr_hi", boot->covariates[0].hi}};
    std::ostringstream cox;
    write_cox_csv(cox, fit, boot);
    ctx.write_text("cox.csv", cox.str());
    const auto strat = stratify(t.labels, risk);
    summary["stratification"] = to_json(strat);
    std::ostringstream km;
    write_km_csv(km, strat.curves);
    ctx.write_text("km.csv", km.str());
    if (cfg.shuffles > 0) {
      CvOptions opt{cfg.train, true, cfg.exclude_small_pct};
      opt.train.seed = cfg.seed;
      const auto plan = survstats::repeated_kfold(patients.size(), cfg.cv_folds, 1, cfg.seed);
      auto eval = [&](const std::vector<SurvivalLabel>& labels, int) {
        auto ps = patients;
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i].label = labels[i];
        return cross_validate(ps, plan, opt, stop).mean_c_index();
      };
      const auto rt = survstats::randomization_test(t.labels, eval, cfg.shuffles, cfg.seed, 1);
      summary["randomization"] = {{"observed", rt.observed}, {"null_mean", rt.null_mean()},
                                  {"null_q95", rt.null_quantile(0.95)}, {"p", rt.p}, {"shuffles", cfg.shuffles}};
    }
    ctx.write_text("stats.json", detail::json_text(summary));
  });

  finished("stats");
  return ctx.manifest();
}

}  // namespace crlm::pipeline
