#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/promptseg.hpp"
#include "crlm/samonai.hpp"

namespace crlm::pipeline {

// Point prompts on one slice: the input SAMONAI starts from.
struct SeedPrompt {
  SliceAddress address;
  std::vector<PromptPoint> points;
  friend bool operator==(const SeedPrompt&, const SeedPrompt&) = default;
};

inline Polarity parse_polarity(const nlohmann::json& j) {
  if (j.is_boolean()) return j.get<bool>() ? Polarity::positive : Polarity::negative;
  if (j.is_number_integer()) {
    const auto v = j.get<int>();
    if (v == 0 || v == 1) return v ? Polarity::positive : Polarity::negative;
  }
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "positive" || s == "pos" || s == "+") return Polarity::positive;
    if (s == "negative" || s == "neg" || s == "-") return Polarity::negative;
  }
  throw InvalidArgument("polarity must be positive/negative, 1/0 or true/false");
}

// {"view", "index", "points": [{"row", "col", "polarity"}]}, or the single
// positive point shorthand {"view", "index", "row", "col"}.
inline SeedPrompt seed_prompt_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("prompt must be an object");
  try {
    SeedPrompt p;
    p.address.view = parse_view(j.at("view").get<std::string>());
    p.address.index = j.at("index").get<std::int64_t>();
    if (j.contains("points")) {
      for (const auto& q : j.at("points"))
        p.points.push_back({{q.at("row").get<std::int64_t>(), q.at("col").get<std::int64_t>()},
                            q.contains("polarity") ? parse_polarity(q.at("polarity")) : Polarity::positive});
    } else {
      p.points.push_back({{j.at("row").get<std::int64_t>(), j.at("col").get<std::int64_t>()}, Polarity::positive});
    }
    if (p.points.empty()) throw InvalidArgument("prompt has no points");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed prompt: ") + e.what());
  }
}

inline nlohmann::json to_json(const SeedPrompt& p) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& q : p.points)
    pts.push_back({{"row", q.position.row},
                   {"col", q.position.col},
                   {"polarity", q.polarity == Polarity::positive ? "positive" : "negative"}});
  return {{"view", view_name(p.address.view)}, {"index", p.address.index}, {"points", pts}};
}

// Prompt for a voxel given in (x, y, z) index space.
inline SeedPrompt prompt_at_voxel(View view, const Index3& voxel) {
  const auto [addr, px] = voxel_to_slice(view, voxel);
  return {addr, {{px, Polarity::positive}}};
}

inline Mask3D run_samonai(const Volume3D& volume, const SeedPrompt& prompt, const Segmenter2D& segmenter,
                          const samonai::PropagationConfig& cfg = {}, std::stop_token stop = {}) {
  return samonai::samonai_segment(volume, prompt.address, prompt.points, segmenter, cfg, stop).mask;
}

}  // namespace crlm::pipeline
