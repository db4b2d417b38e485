#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "crlm/survaminn/train.hpp"

namespace crlm::survaminn {

// Checkpoint layout: weights as flat row-major arrays of IEEE-754 doubles
// (serialized with round-trip precision), shapes alongside.
struct Checkpoint {
  ModelParams params;
  PoolingKind pooling = PoolingKind::lse;
  LargestBy largest_by = LargestBy::volume;
  Phase phase = Phase::post;
};

inline nlohmann::json to_json(const Checkpoint& c) {
  const auto& a = c.params.arch;
  nlohmann::json layers = nlohmann::json::array();
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& L = c.params.layers[l];
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(L.w.size()));
    for (Eigen::Index i = 0; i < L.w.rows(); ++i)
      for (Eigen::Index j = 0; j < L.w.cols(); ++j) w.push_back(L.w(i, j));
    layers.push_back({{"name", kLayerNames[l]},
                      {"rows", L.w.rows()},
                      {"cols", L.w.cols()},
                      {"weight", w},
                      {"bias", std::vector<double>(L.b.data(), L.b.data() + L.b.size())}});
  }
  return {{"format", "crlm-survaminn"},
          {"version", 1},
          {"dtype", "float64"},
          {"architecture",
           {{"input", a.input},
            {"hidden", a.hidden},
            {"code", a.code},
            {"regressor_hidden", a.regressor_hidden},
            {"dropout", a.dropout}}},
          {"pooling", pooling_name(c.pooling)},
          {"largest_by", largest_by_name(c.largest_by)},
          {"phase", radiomics::phase_name(c.phase)},
          {"layers", layers}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "crlm-survaminn") throw IoError(IoErrorKind::bad_magic, "not a survaminn checkpoint");
    if (j.at("version") != 1) throw IoError(IoErrorKind::bad_header, "unsupported checkpoint version");
    const auto& ja = j.at("architecture");
    Architecture a{ja.at("input").get<int>(), ja.at("hidden").get<int>(), ja.at("code").get<int>(),
                   ja.at("regressor_hidden").get<int>(), ja.at("dropout").get<double>()};
    Checkpoint c{ModelParams::zeros(a), parse_pooling(j.at("pooling").get<std::string>()),
                 parse_largest_by(j.value("largest_by", std::string("volume"))),
                 radiomics::parse_phase(j.value("phase", std::string("post")))};
    const auto& jl = j.at("layers");
    if (jl.size() != kLayerCount) throw IoError(IoErrorKind::bad_header, "checkpoint: expected 6 layers");
    for (int l = 0; l < kLayerCount; ++l) {
      auto& L = c.params.layers[l];
      const auto w = jl[l].at("weight").get<std::vector<double>>();
      const auto b = jl[l].at("bias").get<std::vector<double>>();
      if (jl[l].at("rows").get<Eigen::Index>() != L.w.rows() || jl[l].at("cols").get<Eigen::Index>() != L.w.cols() ||
          static_cast<Eigen::Index>(w.size()) != L.w.size() || static_cast<Eigen::Index>(b.size()) != L.b.size())
        throw IoError(IoErrorKind::bad_header, std::string("checkpoint: shape mismatch in ") + kLayerNames[l]);
      for (Eigen::Index i = 0, k = 0; i < L.w.rows(); ++i)
        for (Eigen::Index jj = 0; jj < L.w.cols(); ++jj) L.w(i, jj) = w[static_cast<std::size_t>(k++)];
      for (Eigen::Index i = 0; i < L.b.size(); ++i) L.b[i] = b[static_cast<std::size_t>(i)];
    }
    if (!c.params.all_finite()) throw IoError(IoErrorKind::bad_header, "checkpoint: non-finite parameters");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(IoErrorKind::bad_header, std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream os(path);
  if (!os) throw IoError(IoErrorKind::write_failed, "cannot write " + path.string());
  os << to_json(c).dump() << "\n";
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoErrorKind::not_found, "cannot open " + path.string());
  try {
    return checkpoint_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(IoErrorKind::bad_header, path.string() + ": " + e.what());
  }
}

inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& h) {
  os << "epoch,alpha,mse,cox,total,sampled,no_events\n" << std::setprecision(17);
  for (const auto& r : h)
    os << r.epoch << "," << r.alpha << "," << r.mse << "," << r.cox << "," << r.total << "," << r.sampled << ","
       << (r.no_events ? 1 : 0) << "\n";
}

inline void save_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& h) {
  std::ofstream os(path);
  if (!os) throw IoError(IoErrorKind::write_failed, "cannot write " + path.string());
  write_history_csv(os, h);
}

}  // namespace crlm::survaminn
