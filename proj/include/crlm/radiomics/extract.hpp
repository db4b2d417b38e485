#pragma once

#include <array>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "crlm/radiomics/first_order.hpp"
#include "crlm/radiomics/preprocess.hpp"
#include "crlm/radiomics/shape.hpp"
#include "crlm/radiomics/texture.hpp"

namespace crlm::radiomics {

inline constexpr std::size_t kFeatureCount = 100;

// Order: first-order 18, shape 14, GLCM 22, GLRLM 16, GLSZM 16, GLDM 14.
using FeatureVector = std::array<double, kFeatureCount>;

inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    auto add = [&](std::string_view cls, const auto& list) {
      for (auto n : list) out.push_back(std::string(cls) + "_" + std::string(n));
    };
    add("firstorder", kFirstOrderNames);
    add("shape", kShapeNames);
    add("glcm", kGlcmNames);
    add("glrlm", kGlrlmNames);
    add("glszm", kGlszmNames);
    add("gldm", kGldmNames);
    return out;
  }();
  return names;
}

inline FeatureVector features_of(const DiscretizedVolume& dv) {
  FeatureVector out{};
  std::size_t k = 0;
  auto put = [&](const auto& arr) {
    for (double v : arr) out[k++] = v;
  };
  put(first_order(dv));
  put(shape_features(dv.roi));
  put(glcm_features(dv));
  put(glrlm_features(dv));
  put(glszm_features(dv));
  put(gldm_features(dv));
  for (double v : out)
    if (!std::isfinite(v)) throw Error("radiomics: non-finite feature value");
  return out;
}

struct FeatureRow {
  std::string patient_id;
  Phase phase = Phase::post;
  std::int32_t instance_id = 0;
  double diameter_mm = 0.0;
  double volume_mm3 = 0.0;
  FeatureVector features{};
};

inline FeatureRow extract_instance(const Volume3D& volume, const TumorInstance& t, const RadiomicsParams& p = {}) {
  return {t.patient_id, t.phase, t.instance_id, t.diameter_mm, t.volume_mm3,
          features_of(preprocess_for_radiomics(volume, t.mask, p))};
}

// Rows come back sorted by (patient, phase, instance id) whatever the
// thread count.
inline std::vector<FeatureRow> extract_all(const Volume3D& volume, const std::vector<TumorInstance>& instances,
                                           const RadiomicsParams& p = {}, int threads = 1) {
  std::vector<FeatureRow> rows(instances.size());
  std::vector<std::exception_ptr> errors(instances.size());
  auto work = [&](std::size_t i) {
    try {
      rows[i] = extract_instance(volume, instances[i], p);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1) {
    for (std::size_t i = 0; i < instances.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < instances.size(); i = next++) work(i);
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::stable_sort(rows.begin(), rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
    return std::tie(a.patient_id, a.phase, a.instance_id) < std::tie(b.patient_id, b.phase, b.instance_id);
  });
  return rows;
}

inline void write_feature_csv(std::ostream& os, const std::vector<FeatureRow>& rows) {
  os << "patient_id,phase,instance_id,diameter_mm,volume_mm3";
  for (const auto& n : feature_names()) os << "," << n;
  os << "\n" << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.patient_id << "," << phase_name(r.phase) << "," << r.instance_id << "," << r.diameter_mm << ","
       << r.volume_mm3;
    for (double v : r.features) os << "," << v;
    os << "\n";
  }
}

inline void save_feature_csv(const std::filesystem::path& path, const std::vector<FeatureRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError(IoErrorKind::write_failed, "cannot write " + path.string());
  write_feature_csv(os, rows);
}

inline std::vector<FeatureRow> read_feature_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError(IoErrorKind::bad_header, "feature csv: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() != 5 + kFeatureCount || !std::equal(feature_names().begin(), feature_names().end(), header.begin() + 5))
    throw IoError(IoErrorKind::bad_header, "feature csv: unexpected columns");
  std::vector<FeatureRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size())
      throw IoError(IoErrorKind::truncated_payload, "feature csv: line " + std::to_string(lineno) + " has wrong width");
    try {
      FeatureRow r;
      r.patient_id = cells[0];
      r.phase = parse_phase(cells[1]);
      r.instance_id = std::stoi(cells[2]);
      r.diameter_mm = std::stod(cells[3]);
      r.volume_mm3 = std::stod(cells[4]);
      for (std::size_t k = 0; k < kFeatureCount; ++k) r.features[k] = std::stod(cells[5 + k]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw IoError(IoErrorKind::bad_header, "feature csv: bad value on line " + std::to_string(lineno));
    }
  }
  return rows;
}

inline std::vector<FeatureRow> load_feature_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoErrorKind::not_found, "cannot open " + path.string());
  return read_feature_csv(is);
}

}  // namespace crlm::radiomics
