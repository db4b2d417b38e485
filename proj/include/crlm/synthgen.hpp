#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "crlm/rng.hpp"
#include "crlm/survaminn/train.hpp"
#include "crlm/survstats/cohort.hpp"
#include "crlm/survival.hpp"
#include "crlm/volgrid/grid.hpp"

namespace crlm::synthgen {

struct Ellipsoid {
  Vec3 center{0, 0, 0};      // mm, physical
  Vec3 semi_axes{1, 1, 1};   // mm
  double intensity_pre = 0.0;
  double intensity_post = 0.0;

  bool contains(const Vec3& p) const {
    double s = 0;
    for (int a = 0; a < 3; ++a) {
      const double d = (p[a] - center[a]) / semi_axes[a];
      s += d * d;
    }
    return s <= 1.0;
  }
};

struct Sphere {
  Vec3 center{0, 0, 0};
  double radius = 1.0;
  double intensity_pre = 0.0;
  double intensity_post = 0.0;

  Ellipsoid as_ellipsoid() const { return {center, {radius, radius, radius}, intensity_pre, intensity_post}; }
};

// Liver brightens in the post phase; tumors stay dark, so contrast grows.
struct PhantomSpec {
  Geometry geometry{{64, 64, 64}, {1.5, 1.5, 1.5}, {0, 0, 0}};
  double background_pre = 0.0;
  double background_post = 0.0;
  Ellipsoid liver{{42, 50, 48}, {30, 26, 24}, 100.0, 200.0};
  Ellipsoid spleen{{82, 26, 48}, {8, 9, 14}, 110.0, 130.0};
  bool with_spleen = true;
  std::vector<Sphere> tumors;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

struct Phantom {
  Volume3D pre;
  Volume3D post;
  Mask3D labels;  // Label values; tumor voxels take precedence over liver
};

namespace detail {

inline void require_inside(const Ellipsoid& e, const Geometry& g, const std::string& what) {
  for (int a = 0; a < 3; ++a) {
    if (!(e.semi_axes[a] > 0)) throw InvalidArgument(what + ": radii must be > 0");
    const double lo = g.origin[a], hi = g.origin[a] + g.spacing[a] * static_cast<double>(g.dims[a] - 1);
    if (e.center[a] - e.semi_axes[a] < lo || e.center[a] + e.semi_axes[a] > hi)
      throw InvalidArgument(what + " extends outside the volume");
  }
}

}  // namespace detail

inline void validate(const PhantomSpec& s) {
  s.geometry.validate();
  detail::require_inside(s.liver, s.geometry, "liver");
  if (s.with_spleen) detail::require_inside(s.spleen, s.geometry, "spleen");
  for (const auto& t : s.tumors) detail::require_inside(t.as_ellipsoid(), s.geometry, "tumor");
  if (!(s.noise_sd >= 0)) throw InvalidArgument("noise sd must be >= 0");
}

// Labels are the analytic indicator functions sampled at voxel centres.
// Overlaps between spleen and liver, spleen and a tumor, or two tumors are
// rejected.
inline Phantom generate_phantom(const PhantomSpec& s) {
  validate(s);
  const Geometry& g = s.geometry;
  Phantom ph{Volume3D(g), Volume3D(g), Mask3D(g)};
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y)
      for (std::int64_t x = 0; x < g.dims[0]; ++x) {
        const Vec3 p = g.physical({x, y, z});
        const std::size_t off = g.offset(x, y, z);
        double pre = s.background_pre, post = s.background_post;
        std::uint8_t label = static_cast<std::uint8_t>(Label::background);
        const bool in_liver = s.liver.contains(p);
        const bool in_spleen = s.with_spleen && s.spleen.contains(p);
        if (in_liver && in_spleen) throw InvalidArgument("phantom: liver and spleen overlap");
        if (in_liver) {
          pre = s.liver.intensity_pre;
          post = s.liver.intensity_post;
          label = static_cast<std::uint8_t>(Label::liver);
        }
        if (in_spleen) {
          pre = s.spleen.intensity_pre;
          post = s.spleen.intensity_post;
          label = static_cast<std::uint8_t>(Label::spleen);
        }
        int hits = 0;
        for (const auto& t : s.tumors)
          if (t.as_ellipsoid().contains(p)) {
            ++hits;
            pre = t.intensity_pre;
            post = t.intensity_post;
          }
        if (hits > 1) throw InvalidArgument("phantom: tumors overlap");
        if (hits == 1) {
          if (in_spleen) throw InvalidArgument("phantom: tumor overlaps the spleen");
          label = static_cast<std::uint8_t>(Label::tumor);
        }
        ph.pre[off] = pre;
        ph.post[off] = post;
        ph.labels[off] = label;
      }
  if (s.noise_sd > 0) {
    Rng rng(s.seed);
    for (std::size_t i = 0; i < ph.pre.size(); ++i) ph.pre[i] += rng.normal(0.0, s.noise_sd);
    for (std::size_t i = 0; i < ph.post.size(); ++i) ph.post[i] += rng.normal(0.0, s.noise_sd);
  }
  return ph;
}

// Places `count` non-overlapping tumors inside the liver, well clear of its
// surface, with radii uniform in [r_min, r_max] mm. Deterministic per rng.
inline std::vector<Sphere> place_tumors(const PhantomSpec& s, int count, double r_min, double r_max, Rng& rng,
                                        double intensity_pre = 40.0, double intensity_post = 60.0) {
  std::vector<Sphere> out;
  for (int attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
    if (attempt > 10000) throw InvalidArgument("place_tumors: could not fit the requested tumors");
    const double r = rng.uniform(r_min, r_max);
    Vec3 c;
    for (int a = 0; a < 3; ++a) c[a] = s.liver.center[a] + rng.uniform(-1, 1) * s.liver.semi_axes[a];
    // keep the whole sphere plus a margin inside the liver
    double q = 0;
    for (int a = 0; a < 3; ++a) {
      const double d = (std::abs(c[a] - s.liver.center[a]) + r + 2.0) / s.liver.semi_axes[a];
      q += d * d;
    }
    if (q > 1.0) continue;
    bool clash = false;
    for (const auto& o : out) {
      double d2 = 0;
      for (int a = 0; a < 3; ++a) d2 += (c[a] - o.center[a]) * (c[a] - o.center[a]);
      if (std::sqrt(d2) < r + o.radius + 3.0) clash = true;
    }
    if (!clash) out.push_back({c, r, intensity_pre, intensity_post});
  }
  return out;
}

struct CohortSpec {
  std::size_t n = 150;
  int min_tumors = 1;
  int max_tumors = 6;           // tumors per patient uniform on [min, max]
  int feature_dim = 16;
  std::vector<double> risk_weights{1.5};  // applied to the leading features of each tumor
  double baseline_hazard = 1.0 / 36.0;    // per month
  double censoring_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 2) throw InvalidArgument("cohort: n must be >= 2");
    if (min_tumors < 1 || max_tumors < min_tumors) throw InvalidArgument("cohort: bad tumor count range");
    if (feature_dim < 1) throw InvalidArgument("cohort: feature_dim must be >= 1");
    if (risk_weights.size() > static_cast<std::size_t>(feature_dim))
      throw InvalidArgument("cohort: more risk weights than features");
    if (!(baseline_hazard > 0)) throw InvalidArgument("cohort: baseline hazard must be > 0");
    if (!(censoring_fraction >= 0 && censoring_fraction < 1))
      throw InvalidArgument("cohort: censoring fraction must be in [0, 1)");
  }
};

struct Cohort {
  std::vector<survaminn::TumorFeatureBag> bags;
  std::vector<SurvivalLabel> labels;
  std::vector<double> true_risk;

  std::vector<survaminn::Sample> samples() const {
    std::vector<survaminn::Sample> out;
    for (std::size_t i = 0; i < bags.size(); ++i) out.push_back({bags[i], labels[i]});
    return out;
  }
};

inline double tumor_score(const Eigen::VectorXd& x, const std::vector<double>& w) {
  double s = 0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[static_cast<Eigen::Index>(k)];
  return s;
}

// Independent uniform censoring C_i = c U_i with the scale c calibrated by
// bisection so the censored fraction is as close to `fraction` as n allows.
inline std::vector<SurvivalLabel> censor(const std::vector<double>& event_time, const std::vector<double>& u,
                                         double fraction) {
  const std::size_t n = event_time.size();
  double scale = INFINITY;
  if (fraction > 0) {
    auto censored_at = [&](double sc) {
      std::size_t k = 0;
      for (std::size_t i = 0; i < n; ++i) k += sc * u[i] < event_time[i] ? 1 : 0;
      return static_cast<double>(k) / static_cast<double>(n);
    };
    double lo = 0.0, hi = *std::max_element(event_time.begin(), event_time.end()) * 1e6;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (censored_at(mid) > fraction ? lo : hi) = mid;
    }
    scale = std::abs(censored_at(lo) - fraction) < std::abs(censored_at(hi) - fraction) ? lo : hi;
  }
  std::vector<SurvivalLabel> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double cens = scale * u[i];
    if (std::isfinite(cens) && cens < event_time[i])
      out.push_back({std::max(cens, 1e-6), false});
    else
      out.push_back({event_time[i], true});
  }
  return out;
}

// Tumor features are i.i.d. N(0, 1); patient risk is the max tumor score;
// T ~ Exp(h0 exp(risk)); censoring C = c U with c chosen by bisection so the
// censored fraction matches the target.
inline Cohort generate_cohort(const CohortSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Cohort c;
  std::vector<double> event_time(spec.n), u(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    survaminn::TumorFeatureBag bag;
    char id[32];
    std::snprintf(id, sizeof id, "P%03zu", i + 1);
    bag.patient_id = id;
    const auto t = static_cast<Eigen::Index>(spec.min_tumors + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_tumors - spec.min_tumors + 1))));
    bag.x.resize(t, spec.feature_dim);
    double risk = -INFINITY;
    for (Eigen::Index r = 0; r < t; ++r) {
      for (Eigen::Index k = 0; k < spec.feature_dim; ++k) bag.x(r, k) = rng.normal();
      risk = std::max(risk, tumor_score(bag.x.row(r).transpose(), spec.risk_weights));
      const double vol = std::exp(rng.normal(std::log(2000.0), 1.0));
      bag.volumes_mm3.push_back(vol);
      bag.diameters_mm.push_back(std::cbrt(6.0 * vol / std::numbers::pi));
    }
    event_time[i] = rng.exponential(spec.baseline_hazard * std::exp(risk));
    u[i] = rng.uniform();
    c.bags.push_back(std::move(bag));
    c.true_risk.push_back(risk);
  }
  const auto labels = censor(event_time, u, spec.censoring_fraction);
  c.labels = labels;
  return c;
}

// Single-covariate exponential cohort, x ~ N(0, 1), hazard h0 exp(beta x).
inline survstats::CohortTable generate_linear_cohort(std::size_t n, double beta, double censoring_fraction,
                                                     std::uint64_t seed, double baseline_hazard = 1.0 / 36.0) {
  if (n < 2) throw InvalidArgument("cohort: n must be >= 2");
  if (!(censoring_fraction >= 0 && censoring_fraction < 1))
    throw InvalidArgument("cohort: censoring fraction must be in [0, 1)");
  Rng rng(seed);
  std::vector<double> x(n), t(n), u(n);
  survstats::CohortTable tab;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    t[i] = rng.exponential(baseline_hazard * std::exp(beta * x[i]));
    u[i] = rng.uniform();
    tab.ids.push_back("S" + std::to_string(i));
  }
  tab.labels = censor(t, u, censoring_fraction);
  tab.add_column("x", x);
  return tab;
}

}  // namespace crlm::synthgen
