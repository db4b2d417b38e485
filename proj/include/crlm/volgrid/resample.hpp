#pragma once

#include <cmath>
#include <vector>

#include "crlm/volgrid/grid.hpp"

namespace crlm {

enum class Interpolation { nearest, cubic_bspline };

namespace detail {

inline std::int64_t mirror_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * n - 2;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// In-place conversion of samples to cubic B-spline coefficients along one
// line (recursive filter, whole-sample mirror boundary).
inline void bspline_prefilter(std::vector<double>& c) {
  const auto n = static_cast<std::int64_t>(c.size());
  if (n < 2) return;
  const double z = std::sqrt(3.0) - 2.0;
  const double gain = (1.0 - z) * (1.0 - 1.0 / z);
  for (double& v : c) v *= gain;

  // causal initialisation
  const double tol = 1e-16;
  const auto horizon = static_cast<std::int64_t>(std::ceil(std::log(tol) / std::log(std::abs(z))));
  double sum = 0.0;
  if (horizon < n) {
    double zk = 1.0;
    for (std::int64_t k = 0; k < horizon; ++k) {
      sum += zk * c[static_cast<std::size_t>(k)];
      zk *= z;
    }
  } else {
    double zk = z;
    const double iz = 1.0 / z;
    double z2n = std::pow(z, static_cast<double>(n - 1));
    sum = c[0] + z2n * c[static_cast<std::size_t>(n - 1)];
    z2n *= z2n * iz;
    for (std::int64_t k = 1; k <= n - 2; ++k) {
      sum += (zk + z2n) * c[static_cast<std::size_t>(k)];
      zk *= z;
      z2n *= iz;
    }
    sum /= (1.0 - zk * zk);
  }
  c[0] = sum;
  for (std::int64_t k = 1; k < n; ++k) c[k] += z * c[k - 1];
  c[n - 1] = (z / (z * z - 1.0)) * (c[n - 1] + z * c[n - 2]);
  for (std::int64_t k = n - 2; k >= 0; --k) c[k] = z * (c[k + 1] - c[k]);
}

inline double bspline3(double x) {
  x = std::abs(x);
  if (x < 1.0) return 2.0 / 3.0 - x * x + 0.5 * x * x * x;
  if (x < 2.0) {
    const double t = 2.0 - x;
    return t * t * t / 6.0;
  }
  return 0.0;
}

// Applies `fn(line)` to every line of `g` along `axis`.
template <typename Fn>
void for_each_line(Volume3D& g, int axis, Fn&& fn) {
  const auto d = g.dims();
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  std::vector<double> line(static_cast<std::size_t>(d[axis]));
  for (std::int64_t u = 0; u < d[a1]; ++u)
    for (std::int64_t v = 0; v < d[a2]; ++v) {
      Index3 idx{};
      idx[a1] = u;
      idx[a2] = v;
      for (std::int64_t k = 0; k < d[axis]; ++k) {
        idx[axis] = k;
        line[static_cast<std::size_t>(k)] = g(idx[0], idx[1], idx[2]);
      }
      fn(line);
      for (std::int64_t k = 0; k < d[axis]; ++k) {
        idx[axis] = k;
        g(idx[0], idx[1], idx[2]) = line[static_cast<std::size_t>(k)];
      }
    }
}

// Continuous source index of output sample i when voxel corners are aligned.
inline double source_coordinate(std::int64_t i, double in_spacing, double out_spacing) {
  return (static_cast<double>(i) + 0.5) * out_spacing / in_spacing - 0.5;
}

// Evaluates the spline along one axis at every output position.
inline Volume3D resample_axis(const Volume3D& coeffs, int axis, std::int64_t out_n, double in_s, double out_s) {
  Geometry geo = coeffs.geometry();
  const std::int64_t in_n = geo.dims[axis];
  geo.dims[axis] = out_n;
  Volume3D out(geo);
  std::vector<std::array<std::int64_t, 4>> taps(static_cast<std::size_t>(out_n));
  std::vector<std::array<double, 4>> weights(static_cast<std::size_t>(out_n));
  for (std::int64_t i = 0; i < out_n; ++i) {
    const double t = source_coordinate(i, in_s, out_s);
    const auto base = static_cast<std::int64_t>(std::floor(t)) - 1;
    for (int k = 0; k < 4; ++k) {
      taps[static_cast<std::size_t>(i)][k] = mirror_index(base + k, in_n);
      weights[static_cast<std::size_t>(i)][k] = bspline3(t - static_cast<double>(base + k));
    }
  }
  const auto d = geo.dims;
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        Index3 o{x, y, z};
        const auto i = static_cast<std::size_t>(o[axis]);
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          Index3 s = o;
          s[axis] = taps[i][k];
          acc += weights[i][k] * coeffs(s[0], s[1], s[2]);
        }
        out(x, y, z) = acc;
      }
  return out;
}

}  // namespace detail

inline Geometry resampled_geometry(const Geometry& in, const Vec3& target_spacing) {
  Geometry out = in;
  for (int a = 0; a < 3; ++a) {
    if (!(target_spacing[a] > 0.0)) throw InvalidArgument("resample: target spacing must be > 0");
    const double extent = static_cast<double>(in.dims[a]) * in.spacing[a];
    out.dims[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent / target_spacing[a] - 1e-9)));
    out.spacing[a] = target_spacing[a];
    out.origin[a] = in.origin[a] - 0.5 * in.spacing[a] + 0.5 * target_spacing[a];
  }
  return out;
}

// Resamples onto a grid covering the same physical extent (voxel corners
// aligned). Use nearest for label masks and cubic B-spline for images.
template <typename T>
Grid<T> resample(const Grid<T>& v, const Vec3& target_spacing, Interpolation order) {
  const Geometry out_geo = resampled_geometry(v.geometry(), target_spacing);
  if (v.spacing() == target_spacing) return v;
  const Geometry& in_geo = v.geometry();

  if (order == Interpolation::nearest) {
    Grid<T> out(out_geo);
    std::array<std::vector<std::int64_t>, 3> src;
    for (int a = 0; a < 3; ++a) {
      src[a].resize(static_cast<std::size_t>(out_geo.dims[a]));
      for (std::int64_t i = 0; i < out_geo.dims[a]; ++i) {
        const double t = detail::source_coordinate(i, in_geo.spacing[a], target_spacing[a]);
        src[a][static_cast<std::size_t>(i)] =
            std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(t + 0.5)), 0, in_geo.dims[a] - 1);
      }
    }
    for (std::int64_t z = 0; z < out_geo.dims[2]; ++z)
      for (std::int64_t y = 0; y < out_geo.dims[1]; ++y)
        for (std::int64_t x = 0; x < out_geo.dims[0]; ++x)
          out(x, y, z) = v(src[0][static_cast<std::size_t>(x)], src[1][static_cast<std::size_t>(y)],
                           src[2][static_cast<std::size_t>(z)]);
    return out;
  }

  Volume3D coeffs(in_geo);
  for (std::size_t i = 0; i < v.size(); ++i) coeffs[i] = static_cast<double>(v[i]);
  for (int a = 0; a < 3; ++a) detail::for_each_line(coeffs, a, [](std::vector<double>& l) { detail::bspline_prefilter(l); });
  Volume3D cur = std::move(coeffs);
  for (int a = 0; a < 3; ++a) cur = detail::resample_axis(cur, a, out_geo.dims[a], in_geo.spacing[a], target_spacing[a]);

  Grid<T> out(out_geo);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(cur[i]);
  return out;
}

}  // namespace crlm
