#pragma once

// Synthetic study on disk: per-case pre/post phantoms, reference label masks,
// a clinical table, and a run configuration whose seed prompts sit on the
// known tumor centres.

#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "crlm/pipeline/config.hpp"
#include "crlm/survstats/cohort.hpp"
#include "crlm/synthgen.hpp"
#include "crlm/volgrid/io.hpp"

namespace crlm::pipeline {

struct StudySpec {
  std::size_t n_cases = 12;
  int min_tumors = 1;
  int max_tumors = 3;
  double r_min = 4.0;  // mm
  double r_max = 9.0;
  double noise_sd = 5.0;
  double risk_per_mm = 0.4;  // log-hazard per mm of the largest tumor radius
  double baseline_hazard = 1.0 / 36.0;
  double censoring_fraction = 0.2;
  std::uint64_t seed = 0;
};

inline Index3 nearest_voxel(const Geometry& g, const Vec3& p) {
  Index3 v;
  for (int a = 0; a < 3; ++a)
    v[a] = std::clamp<std::int64_t>(std::llround((p[a] - g.origin[a]) / g.spacing[a]), 0, g.dims[a] - 1);
  return v;
}

// A liver voxel whose 5x5x5 neighbourhood is all liver, nearest the liver
// centre.
inline Index3 liver_seed_voxel(const Mask3D& labels, const Vec3& centre) {
  const auto& g = labels.geometry();
  const Index3 c = nearest_voxel(g, centre);
  Index3 best = c;
  std::int64_t best_d = -1;
  for (std::int64_t z = 2; z < g.dims[2] - 2; ++z)
    for (std::int64_t y = 2; y < g.dims[1] - 2; ++y)
      for (std::int64_t x = 2; x < g.dims[0] - 2; ++x) {
        const std::int64_t d = (x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]) + (z - c[2]) * (z - c[2]);
        if (best_d >= 0 && d >= best_d) continue;
        bool ok = true;
        for (std::int64_t dz = -2; dz <= 2 && ok; ++dz)
          for (std::int64_t dy = -2; dy <= 2 && ok; ++dy)
            for (std::int64_t dx = -2; dx <= 2 && ok; ++dx)
              ok = labels(x + dx, y + dy, z + dz) == static_cast<std::uint8_t>(Label::liver);
        if (ok) {
          best = {x, y, z};
          best_d = d;
        }
      }
  if (best_d < 0) throw InvalidArgument("simulate: liver has no interior voxel");
  return best;
}

// Writes the study under `dir` and returns its run configuration (also saved
// as dir/config.json).
inline RunConfig simulate_study(const fs::path& dir, const StudySpec& spec) {
  if (spec.n_cases < 2) throw InvalidArgument("simulate: need at least 2 cases");
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "reference");
  Rng rng(spec.seed);
  RunConfig cfg;
  cfg.data_root = dir;
  cfg.seed = spec.seed;
  std::vector<double> event_time, u;
  survstats::CohortTable clinical;
  for (std::size_t i = 0; i < spec.n_cases; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "C%03zu", i + 1);
    synthgen::PhantomSpec ps;
    ps.noise_sd = spec.noise_sd;
    ps.seed = rng.next();
    const int count = spec.min_tumors + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_tumors - spec.min_tumors + 1)));
    ps.tumors = synthgen::place_tumors(ps, count, spec.r_min, spec.r_max, rng);
    const auto ph = synthgen::generate_phantom(ps);
    CaseInput c;
    c.id = id;
    // phases are co-registered, so one reference mask serves both
    const std::string ref = std::string("reference/") + id + ".nii";
    save_mask(ph.labels, (dir / ref).string());
    for (auto [phase, vol] : {std::pair{Phase::pre, &ph.pre}, std::pair{Phase::post, &ph.post}}) {
      const std::string img = std::string("images/") + id + "_" + phase_name(phase) + ".nii";
      crlm::detail::write_file_bytes((dir / img).string(), encode_nifti(*vol, 16));  // float32 keeps files small
      c.images[phase] = img;
      c.reference[phase] = ref;
    }
    for (const auto& t : ps.tumors) c.tumor_prompts.push_back(prompt_at_voxel(View::axial, nearest_voxel(ps.geometry, t.center)));
    c.liver_prompt = prompt_at_voxel(View::axial, liver_seed_voxel(ph.labels, ps.liver.center));
    cfg.cases.push_back(std::move(c));

    double r_max = 0;
    for (const auto& t : ps.tumors) r_max = std::max(r_max, t.radius);
    const double risk = spec.risk_per_mm * (r_max - 0.5 * (spec.r_min + spec.r_max));
    event_time.push_back(rng.exponential(spec.baseline_hazard * std::exp(risk)));
    u.push_back(rng.uniform());
    clinical.ids.push_back(id);
  }
  clinical.labels = synthgen::censor(event_time, u, spec.censoring_fraction);
  survstats::save_cohort_csv(dir / "clinical.csv", clinical);
  std::ofstream os(dir / "config.json");
  nlohmann::json j = to_json(cfg);
  j["data_root"] = ".";
  os << j.dump(2) << "\n";
  return cfg;
}

}  // namespace crlm::pipeline
