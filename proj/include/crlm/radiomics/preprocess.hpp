#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "crlm/volgrid/components.hpp"
#include "crlm/volgrid/intensity.hpp"
#include "crlm/volgrid/resample.hpp"

namespace crlm::radiomics {

struct RadiomicsParams {
  double target_spacing = 2.0;  // mm, isotropic
  double bin_width = 5.0;
  double n_sigma = 3.0;
  double scale = 100.0;
  int crop_padding = 3;  // voxels kept around the roi before resampling

  void validate() const {
    if (!(target_spacing > 0)) throw InvalidArgument("radiomics: target spacing must be > 0");
    if (!(bin_width > 0)) throw InvalidArgument("radiomics: bin width must be > 0");
    if (!(n_sigma > 0)) throw InvalidArgument("radiomics: n_sigma must be > 0");
    if (crop_padding < 0) throw InvalidArgument("radiomics: crop padding must be >= 0");
  }
};

using LevelGrid = Grid<std::int32_t>;

// Gray levels are >= 1 inside the roi and 0 elsewhere.
struct DiscretizedVolume {
  LevelGrid levels;
  Volume3D intensities;  // normalised (clipped, z-scored, scaled) values
  Mask3D roi;
  std::int32_t ng = 0;  // highest level present
  double bin_width = 5.0;

  std::size_t voxel_count() const { return count_nonzero(roi); }

  std::vector<std::int32_t> present_levels() const {
    std::set<std::int32_t> s;
    for (std::size_t i = 0; i < roi.size(); ++i)
      if (roi[i]) s.insert(levels[i]);
    return {s.begin(), s.end()};
  }

  std::vector<double> roi_intensities() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < roi.size(); ++i)
      if (roi[i]) out.push_back(intensities[i]);
    return out;
  }
};

inline std::int32_t bin_level(double x, double roi_min, double bin_width) {
  return static_cast<std::int32_t>(std::floor((x - roi_min) / bin_width)) + 1;
}

// Fixed bin width discretisation relative to the roi minimum.
inline DiscretizedVolume discretize(const Volume3D& values, const Mask3D& roi, double bin_width = 5.0) {
  if (!same_lattice(values, roi)) throw InvalidArgument("discretize: roi geometry mismatch");
  if (!(bin_width > 0)) throw InvalidArgument("discretize: bin width must be > 0");
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < roi.size(); ++i)
    if (roi[i]) mn = std::min(mn, values[i]);
  if (!std::isfinite(mn)) throw InvalidArgument("discretize: roi is empty");
  DiscretizedVolume dv{LevelGrid(values.geometry(), 0), values, Mask3D(roi.geometry()), 0, bin_width};
  for (std::size_t i = 0; i < roi.size(); ++i) {
    if (!roi[i]) continue;
    dv.roi[i] = 1;
    dv.levels[i] = bin_level(values[i], mn, bin_width);
    dv.ng = std::max(dv.ng, dv.levels[i]);
  }
  return dv;
}

// Sub-volume of `v` over `box` grown by `pad` voxels; samples outside `v`
// repeat the nearest edge voxel.
template <typename T>
Grid<T> crop_padded(const Grid<T>& v, const BoundingBox& box, int pad) {
  Geometry g = v.geometry();
  Index3 lo{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = box.lo[a] - pad;
    g.dims[a] = box.hi[a] - box.lo[a] + 1 + 2 * pad;
    g.origin[a] = v.geometry().origin[a] + static_cast<double>(lo[a]) * g.spacing[a];
  }
  Grid<T> out(g);
  const Index3& d = v.dims();
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y)
      for (std::int64_t x = 0; x < g.dims[0]; ++x)
        out(x, y, z) = v(std::clamp<std::int64_t>(lo[0] + x, 0, d[0] - 1), std::clamp<std::int64_t>(lo[1] + y, 0, d[1] - 1),
                         std::clamp<std::int64_t>(lo[2] + z, 0, d[2] - 1));
  return out;
}

// Crop around the roi, resample (B-spline image, nearest mask) to isotropic
// spacing, clip/z-score/scale within the roi, then discretise.
inline DiscretizedVolume preprocess_for_radiomics(const Volume3D& volume, const Mask3D& roi,
                                                  const RadiomicsParams& p = {}) {
  p.validate();
  if (!same_lattice(volume, roi)) throw InvalidArgument("preprocess: roi geometry mismatch");
  const BoundingBox box = foreground_bbox(roi);
  if (box.empty()) throw InvalidArgument("preprocess: roi is empty");
  const Volume3D img = crop_padded(volume, box, p.crop_padding);
  Mask3D m = crop_padded(roi, box, p.crop_padding);
  for (auto& v : m.buffer()) v = v ? 1 : 0;
  const Vec3 s{p.target_spacing, p.target_spacing, p.target_spacing};
  const Volume3D rimg = resample(img, s, Interpolation::cubic_bspline);
  const Mask3D rm = resample(m, s, Interpolation::nearest);
  if (count_nonzero(rm) == 0) throw InvalidArgument("preprocess: roi vanishes after resampling");
  Volume3D norm = clip_sigma_zscore(rimg, rm, p.n_sigma, p.scale);
  for (std::size_t i = 0; i < norm.size(); ++i)
    if (!rm[i]) norm[i] = 0.0;
  return discretize(norm, rm, p.bin_width);
}

enum class Phase : std::uint8_t { pre = 0, post = 1 };

inline const char* phase_name(Phase p) { return p == Phase::pre ? "pre" : "post"; }
inline Phase parse_phase(const std::string& s) {
  if (s == "pre") return Phase::pre;
  if (s == "post") return Phase::post;
  throw InvalidArgument("unknown phase '" + s + "'");
}

struct TumorInstance {
  std::string patient_id;
  Phase phase = Phase::post;
  std::int32_t instance_id = 0;
  Mask3D mask;
  double diameter_mm = 0.0;
  double volume_mm3 = 0.0;
};

// One instance per connected component of the tumor mask.
inline std::vector<TumorInstance> tumor_instances(const std::string& patient_id, Phase phase, const Mask3D& tumor) {
  const InstanceLabeling lab = connected_components(tumor);
  std::vector<TumorInstance> out;
  for (const auto& info : lab.instances)
    out.push_back({patient_id, phase, info.id, lab.instance_mask(info.id), info.longest_axial_diameter_mm,
                   info.volume_mm3});
  return out;
}

inline double small_tumor_threshold(std::vector<double> train_diameters, double pct = 1.0) {
  if (train_diameters.empty()) throw InvalidArgument("exclude_small: training diameters are empty");
  return percentile(std::move(train_diameters), pct);
}

// Drops instances whose longest diameter is at or below the 1st percentile of
// the training diameters.
inline std::vector<TumorInstance> exclude_small(std::vector<TumorInstance> instances,
                                                const std::vector<double>& train_diameters, double pct = 1.0) {
  const double thr = small_tumor_threshold(train_diameters, pct);
  std::erase_if(instances, [&](const TumorInstance& t) { return t.diameter_mm <= thr; });
  return instances;
}

}  // namespace crlm::radiomics
