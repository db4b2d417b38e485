#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/error.hpp"

namespace crlm::radiomics {

// Two-step normalisation: f' = ln(f - train_min + 1), then z-score of f'
// with training statistics. Values below the training minimum are clamped.
struct NormalizationParams {
  std::vector<double> min;
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t size() const { return min.size(); }
};

inline NormalizationParams fit_normalization(const std::vector<std::vector<double>>& train) {
  if (train.empty()) throw InvalidArgument("fit_normalization: no training rows");
  const std::size_t d = train.front().size();
  for (const auto& r : train)
    if (r.size() != d) throw InvalidArgument("fit_normalization: ragged rows");
  NormalizationParams p{std::vector<double>(d, INFINITY), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& r : train)
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(r[k])) throw InvalidArgument("fit_normalization: non-finite feature");
      p.min[k] = std::min(p.min[k], r[k]);
    }
  const auto n = static_cast<double>(train.size());
  for (const auto& r : train)
    for (std::size_t k = 0; k < d; ++k) p.mean[k] += std::log(r[k] - p.min[k] + 1.0) / n;
  for (const auto& r : train)
    for (std::size_t k = 0; k < d; ++k) {
      const double t = std::log(r[k] - p.min[k] + 1.0) - p.mean[k];
      p.stddev[k] += t * t / n;
    }
  for (double& s : p.stddev) s = std::sqrt(s);
  return p;
}

inline std::vector<double> two_step_normalize(const std::vector<double>& f, const NormalizationParams& p) {
  if (f.size() != p.size()) throw InvalidArgument("two_step_normalize: feature count mismatch");
  std::vector<double> out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double t = std::log(std::max(f[k], p.min[k]) - p.min[k] + 1.0);
    out[k] = p.stddev[k] > 0 ? (t - p.mean[k]) / p.stddev[k] : 0.0;
  }
  return out;
}

inline nlohmann::json to_json(const NormalizationParams& p) {
  return {{"kind", "two-step"}, {"min", p.min}, {"mean", p.mean}, {"std", p.stddev}};
}

inline NormalizationParams normalization_from_json(const nlohmann::json& j) {
  NormalizationParams p;
  try {
    p.min = j.at("min").get<std::vector<double>>();
    p.mean = j.at("mean").get<std::vector<double>>();
    p.stddev = j.at("std").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("normalization params: ") + e.what());
  }
  if (p.mean.size() != p.min.size() || p.stddev.size() != p.min.size())
    throw InvalidArgument("normalization params: length mismatch");
  for (double s : p.stddev)
    if (s < 0) throw InvalidArgument("normalization params: negative std");
  return p;
}

inline void save_normalization(const std::filesystem::path& path, const NormalizationParams& p) {
  std::ofstream os(path);
  if (!os) throw IoError(IoErrorKind::write_failed, "cannot write " + path.string());
  os << to_json(p).dump(2) << "\n";
}

inline NormalizationParams load_normalization(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoErrorKind::not_found, "cannot open " + path.string());
  try {
    return normalization_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(IoErrorKind::bad_header, path.string() + ": " + e.what());
  }
}

}  // namespace crlm::radiomics
