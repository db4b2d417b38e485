#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/evalkit.hpp"
#include "crlm/pipeline/prompts.hpp"
#include "crlm/radiomics/preprocess.hpp"
#include "crlm/samonai.hpp"
#include "crlm/survaminn/train.hpp"

namespace crlm::pipeline {

namespace fs = std::filesystem;
using radiomics::Phase;

struct CaseInput {
  std::string id;
  std::map<Phase, std::string> images;     // phase -> volume path
  std::map<Phase, std::string> labels;     // optional: load instead of segmenting
  std::map<Phase, std::string> reference;  // optional: ground truth for the evaluate stage
  std::vector<SeedPrompt> tumor_prompts;   // one per tumor, shared by co-registered phases
  std::optional<SeedPrompt> liver_prompt;
};

struct RunConfig {
  fs::path data_root = ".";
  fs::path out_root = "out";
  std::uint64_t seed = 0;
  std::string segmenter = "region-grow";
  samonai::PropagationConfig samonai;
  evalkit::PostprocessParams postprocess;
  radiomics::RadiomicsParams radiomics;
  std::optional<double> exclude_small_pct = 1.0;
  int threads = 1;
  survaminn::TrainConfig train;
  int cv_folds = 3;
  int cv_repeats = 5;
  int bootstrap = 200;
  int shuffles = 0;
  std::string clinical = "clinical.csv";  // patient_id,time,event
  std::vector<CaseInput> cases;

  fs::path resolve(const std::string& p) const {
    const fs::path q(p);
    return q.is_absolute() ? q : data_root / q;
  }

  // Shape checks only.
  void validate() const {
    samonai.validate();
    radiomics.validate();
    train.validate();
    if (cv_folds < 2) throw InvalidArgument("config: cv.folds must be >= 2");
    if (cv_repeats < 1) throw InvalidArgument("config: cv.repeats must be >= 1");
    if (bootstrap < 0 || shuffles < 0) throw InvalidArgument("config: bootstrap/shuffles must be >= 0");
    if (threads < 1) throw InvalidArgument("config: threads must be >= 1");
    if (cases.empty()) throw InvalidArgument("config: no cases");
    std::set<std::string> ids;
    for (const auto& c : cases) {
      if (c.id.empty() || !ids.insert(c.id).second) throw InvalidArgument("config: empty or duplicate case id '" + c.id + "'");
      if (c.images.empty()) throw InvalidArgument("config: case '" + c.id + "' has no images");
      for (const auto& [ph, p] : c.images)
        if (!c.labels.contains(ph) && c.tumor_prompts.empty())
          throw InvalidArgument("config: case '" + c.id + "' needs labels or tumor prompts for phase " + phase_name(ph));
    }
  }

  // Every referenced input file, resolved.
  std::vector<fs::path> input_paths() const {
    std::vector<fs::path> out{resolve(clinical)};
    for (const auto& c : cases)
      for (const auto* m : {&c.images, &c.labels, &c.reference})
        for (const auto& [ph, p] : *m) out.push_back(resolve(p));
    return out;
  }

  void check_inputs_exist() const {
    if (!fs::is_directory(data_root)) throw InvalidArgument("config: data root '" + data_root.string() + "' does not exist");
    for (const auto& p : input_paths())
      if (!fs::exists(p)) throw InvalidArgument("config: missing input '" + p.string() + "'");
  }
};

namespace detail {

inline std::map<Phase, std::string> phase_map(const nlohmann::json& j, const char* key) {
  std::map<Phase, std::string> out;
  if (j.contains(key))
    for (const auto& [k, v] : j.at(key).items()) out[radiomics::parse_phase(k)] = v.get<std::string>();
  return out;
}

inline nlohmann::json phase_json(const std::map<Phase, std::string>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [ph, p] : m) j[phase_name(ph)] = p;
  return j;
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j, const fs::path& base = ".") {
  try {
    RunConfig c;
    c.data_root = base / fs::path(j.value("data_root", std::string(".")));
    c.out_root = j.value("out_root", std::string("out"));
    c.seed = j.value("seed", std::uint64_t{0});
    c.segmenter = j.value("segmenter", c.segmenter);
    c.threads = j.value("threads", 1);
    if (j.contains("samonai")) {
      const auto& s = j.at("samonai");
      c.samonai.weights.alpha = s.value("alpha", c.samonai.weights.alpha);
      c.samonai.weights.beta = s.value("beta", c.samonai.weights.beta);
      c.samonai.weights.gamma = s.value("gamma", c.samonai.weights.gamma);
      c.samonai.neighborhood = s.value("neighborhood", c.samonai.neighborhood);
      c.samonai.negative_exclusion_fraction = s.value("negative_exclusion_fraction", c.samonai.negative_exclusion_fraction);
      c.samonai.slice_density = s.value("slice_density", c.samonai.slice_density);
      c.samonai.threshold_k = s.value("threshold_k", c.samonai.threshold_k);
    }
    if (j.contains("postprocess")) {
      c.postprocess.min_volume_mm3 = j["postprocess"].value("min_volume_mm3", c.postprocess.min_volume_mm3);
      c.postprocess.min_liver_fraction = j["postprocess"].value("min_liver_fraction", c.postprocess.min_liver_fraction);
    }
    if (j.contains("radiomics")) {
      const auto& r = j.at("radiomics");
      c.radiomics.target_spacing = r.value("target_spacing", c.radiomics.target_spacing);
      c.radiomics.bin_width = r.value("bin_width", c.radiomics.bin_width);
      c.radiomics.n_sigma = r.value("n_sigma", c.radiomics.n_sigma);
      c.radiomics.scale = r.value("scale", c.radiomics.scale);
      c.radiomics.crop_padding = r.value("crop_padding", c.radiomics.crop_padding);
      if (r.contains("exclude_small_pct"))
        c.exclude_small_pct = r["exclude_small_pct"].is_null() ? std::nullopt : std::optional<double>(r["exclude_small_pct"].get<double>());
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.lr = t.value("lr", c.train.lr);
      c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
      c.train.balanced = t.value("balanced", c.train.balanced);
      if (t.contains("pooling")) c.train.pooling = survaminn::parse_pooling(t["pooling"].get<std::string>());
      if (t.contains("largest_by")) c.train.largest_by = survaminn::parse_largest_by(t["largest_by"].get<std::string>());
      c.train.arch.hidden = t.value("hidden", c.train.arch.hidden);
      c.train.arch.code = t.value("code", c.train.arch.code);
      c.train.arch.regressor_hidden = t.value("regressor_hidden", c.train.arch.regressor_hidden);
      c.train.arch.dropout = t.value("dropout", c.train.arch.dropout);
    }
    if (j.contains("cv")) {
      c.cv_folds = j["cv"].value("folds", c.cv_folds);
      c.cv_repeats = j["cv"].value("repeats", c.cv_repeats);
    }
    if (j.contains("stats")) {
      c.bootstrap = j["stats"].value("bootstrap", c.bootstrap);
      c.shuffles = j["stats"].value("shuffles", c.shuffles);
    }
    c.clinical = j.value("clinical", c.clinical);
    for (const auto& cj : j.value("cases", nlohmann::json::array())) {
      CaseInput ci;
      ci.id = cj.at("id").get<std::string>();
      ci.images = detail::phase_map(cj, "images");
      ci.labels = detail::phase_map(cj, "labels");
      ci.reference = detail::phase_map(cj, "reference");
      for (const auto& p : cj.value("tumor_prompts", nlohmann::json::array())) ci.tumor_prompts.push_back(seed_prompt_from_json(p));
      if (cj.contains("liver_prompt")) ci.liver_prompt = seed_prompt_from_json(cj["liver_prompt"]);
      c.cases.push_back(std::move(ci));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& ci : c.cases) {
    nlohmann::json cj = {{"id", ci.id}, {"images", detail::phase_json(ci.images)}};
    if (!ci.labels.empty()) cj["labels"] = detail::phase_json(ci.labels);
    if (!ci.reference.empty()) cj["reference"] = detail::phase_json(ci.reference);
    nlohmann::json tp = nlohmann::json::array();
    for (const auto& p : ci.tumor_prompts) tp.push_back(to_json(p));
    if (!tp.empty()) cj["tumor_prompts"] = tp;
    if (ci.liver_prompt) cj["liver_prompt"] = to_json(*ci.liver_prompt);
    cases.push_back(cj);
  }
  return {{"data_root", c.data_root.string()},
          {"out_root", c.out_root.string()},
          {"seed", c.seed},
          {"segmenter", c.segmenter},
          {"threads", c.threads},
          {"samonai",
           {{"alpha", c.samonai.weights.alpha},
            {"beta", c.samonai.weights.beta},
            {"gamma", c.samonai.weights.gamma},
            {"neighborhood", c.samonai.neighborhood},
            {"negative_exclusion_fraction", c.samonai.negative_exclusion_fraction},
            {"slice_density", c.samonai.slice_density},
            {"threshold_k", c.samonai.threshold_k}}},
          {"postprocess", {{"min_volume_mm3", c.postprocess.min_volume_mm3}, {"min_liver_fraction", c.postprocess.min_liver_fraction}}},
          {"radiomics",
           {{"target_spacing", c.radiomics.target_spacing},
            {"bin_width", c.radiomics.bin_width},
            {"n_sigma", c.radiomics.n_sigma},
            {"scale", c.radiomics.scale},
            {"crop_padding", c.radiomics.crop_padding},
            {"exclude_small_pct", c.exclude_small_pct ? nlohmann::json(*c.exclude_small_pct) : nlohmann::json(nullptr)}}},
          {"train",
           {{"epochs", c.train.epochs},
            {"lr", c.train.lr},
            {"weight_decay", c.train.weight_decay},
            {"balanced", c.train.balanced},
            {"pooling", survaminn::pooling_name(c.train.pooling)},
            {"largest_by", survaminn::largest_by_name(c.train.largest_by)},
            {"hidden", c.train.arch.hidden},
            {"code", c.train.arch.code},
            {"regressor_hidden", c.train.arch.regressor_hidden},
            {"dropout", c.train.arch.dropout}}},
          {"cv", {{"folds", c.cv_folds}, {"repeats", c.cv_repeats}}},
          {"stats", {{"bootstrap", c.bootstrap}, {"shuffles", c.shuffles}}},
          {"clinical", c.clinical},
          {"cases", cases}};
}

// Relative data_root entries resolve against the config file's directory.
inline RunConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoErrorKind::not_found, path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace crlm::pipeline
