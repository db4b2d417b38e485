#pragma once

// Texture matrices and their features. Matrix rows are indexed by gray level
// minus one; feature formulas use the gray level values themselves, and Ng is
// the number of distinct levels present in the roi.

#include <array>
#include <cmath>
#include <deque>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "crlm/radiomics/first_order.hpp"
#include "crlm/radiomics/preprocess.hpp"

namespace crlm::radiomics {

using Matrix = Eigen::MatrixXd;

// The 13 unique distance-1 directions of the 26-neighbourhood.
inline constexpr std::array<Index3, 13> kDirections{{{1, 0, 0},
                                                     {0, 1, 0},
                                                     {0, 0, 1},
                                                     {1, 1, 0},
                                                     {1, -1, 0},
                                                     {1, 0, 1},
                                                     {1, 0, -1},
                                                     {0, 1, 1},
                                                     {0, 1, -1},
                                                     {1, 1, 1},
                                                     {1, 1, -1},
                                                     {1, -1, 1},
                                                     {1, -1, -1}}};

inline constexpr std::array<std::string_view, 22> kGlcmNames{
    "Autocorrelation", "JointAverage",     "ClusterProminence", "ClusterShade",    "ClusterTendency",
    "Contrast",        "Correlation",      "DifferenceAverage", "DifferenceEntropy", "DifferenceVariance",
    "JointEnergy",     "JointEntropy",     "Imc1",              "Imc2",            "Idm",
    "Idmn",            "Id",               "Idn",               "InverseVariance", "MaximumProbability",
    "SumEntropy",      "SumSquares"};

inline constexpr std::array<std::string_view, 16> kGlrlmNames{
    "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity", "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity", "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance",
    "RunVariance", "RunEntropy", "LowGrayLevelRunEmphasis", "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis", "ShortRunHighGrayLevelEmphasis", "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis"};

inline constexpr std::array<std::string_view, 16> kGlszmNames{
    "SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity", "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity", "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance",
    "ZoneVariance", "ZoneEntropy", "LowGrayLevelZoneEmphasis", "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis", "SmallAreaHighGrayLevelEmphasis", "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis"};

inline constexpr std::array<std::string_view, 14> kGldmNames{
    "SmallDependenceEmphasis", "LargeDependenceEmphasis", "GrayLevelNonUniformity", "DependenceNonUniformity",
    "DependenceNonUniformityNormalized", "GrayLevelVariance", "DependenceVariance", "DependenceEntropy",
    "LowGrayLevelEmphasis", "HighGrayLevelEmphasis", "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis", "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis"};

namespace detail {

inline void require_texture_roi(const DiscretizedVolume& dv) {
  if (dv.voxel_count() < 2) throw InvalidArgument("texture features need at least 2 roi voxels");
}

inline bool in_roi(const DiscretizedVolume& dv, std::int64_t x, std::int64_t y, std::int64_t z) {
  return dv.roi.geometry().contains(x, y, z) && dv.roi(x, y, z);
}

}  // namespace detail

// Ordered co-occurrence counts P(l(v), l(v + offset)) over roi voxel pairs.
inline Matrix glcm_matrix(const DiscretizedVolume& dv, const Index3& offset) {
  Matrix P = Matrix::Zero(dv.ng, dv.ng);
  const Index3& d = dv.levels.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!dv.roi(x, y, z)) continue;
        const std::int64_t a = x + offset[0], b = y + offset[1], c = z + offset[2];
        if (!detail::in_roi(dv, a, b, c)) continue;
        P(dv.levels(x, y, z) - 1, dv.levels(a, b, c) - 1) += 1.0;
      }
  return P;
}

// Features of one symmetric co-occurrence matrix (counts; normalised here).
inline std::array<double, 22> glcm_features_from(const Matrix& counts, int ng_present) {
  const double total = counts.sum();
  if (!(total > 0)) throw InvalidArgument("glcm: empty matrix");
  const Matrix p = counts / total;
  const auto n = p.rows();
  const double ng = static_cast<double>(ng_present);

  Eigen::VectorXd px = p.rowwise().sum(), py = p.colwise().sum().transpose();
  double mux = 0, muy = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    mux += static_cast<double>(i + 1) * px[i];
    muy += static_cast<double>(i + 1) * py[i];
  }
  double varx = 0, vary = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    varx += (static_cast<double>(i + 1) - mux) * (static_cast<double>(i + 1) - mux) * px[i];
    vary += (static_cast<double>(i + 1) - muy) * (static_cast<double>(i + 1) - muy) * py[i];
  }

  std::vector<double> psum(static_cast<std::size_t>(2 * n + 1), 0.0), pdiff(static_cast<std::size_t>(n), 0.0);
  double autocorr = 0, prom = 0, shade = 0, tend = 0, contrast = 0, energy = 0, hxy = 0, hxy1 = 0, hxy2 = 0;
  double idm = 0, idmn = 0, id = 0, idn = 0, maxp = 0, sumsq = 0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      const double i = static_cast<double>(a + 1), j = static_cast<double>(b + 1), v = p(a, b);
      const double pxy = px[a] * py[b];
      if (pxy > 0) hxy2 -= pxy * std::log2(pxy);
      if (v == 0) continue;
      const double s = i + j - mux - muy;
      autocorr += v * i * j;
      prom += v * s * s * s * s;
      shade += v * s * s * s;
      tend += v * s * s;
      contrast += v * (i - j) * (i - j);
      energy += v * v;
      hxy -= v * std::log2(v);
      hxy1 -= v * std::log2(pxy);
      idm += v / (1 + (i - j) * (i - j));
      idmn += v / (1 + (i - j) * (i - j) / (ng * ng));
      id += v / (1 + std::abs(i - j));
      idn += v / (1 + std::abs(i - j) / ng);
      maxp = std::max(maxp, v);
      sumsq += v * (i - mux) * (i - mux);
      psum[static_cast<std::size_t>(a + b + 2)] += v;
      pdiff[static_cast<std::size_t>(std::abs(a - b))] += v;
    }
  double corr = 1.0;
  if (varx * vary > 0) corr = (autocorr - mux * muy) / std::sqrt(varx * vary);

  double davg = 0, dent = 0, invvar = 0;
  for (std::size_t k = 0; k < pdiff.size(); ++k) {
    davg += static_cast<double>(k) * pdiff[k];
    if (pdiff[k] > 0) dent -= pdiff[k] * std::log2(pdiff[k]);
    if (k > 0) invvar += pdiff[k] / static_cast<double>(k * k);
  }
  double dvar = 0;
  for (std::size_t k = 0; k < pdiff.size(); ++k)
    dvar += (static_cast<double>(k) - davg) * (static_cast<double>(k) - davg) * pdiff[k];
  double sent = 0;
  for (double v : psum)
    if (v > 0) sent -= v * std::log2(v);

  const double hx = detail::entropy_of({px.data(), px.data() + px.size()});
  const double hy = detail::entropy_of({py.data(), py.data() + py.size()});
  const double hmax = std::max(hx, hy);
  const double imc1 = hmax > 0 ? (hxy - hxy1) / hmax : 0.0;
  const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - hxy))));

  return {autocorr, mux,    prom, shade, tend, contrast, corr, davg, dent,   dvar, energy,
          hxy,      imc1,   imc2, idm,   idmn, id,       idn,  invvar, maxp, sent, sumsq};
}

// Symmetric GLCM per direction, features averaged over directions that have
// at least one voxel pair. No pair in any direction gives all zeros.
inline std::array<double, 22> glcm_features(const DiscretizedVolume& dv) {
  detail::require_texture_roi(dv);
  const int ng = static_cast<int>(dv.present_levels().size());
  std::array<double, 22> acc{};
  int used = 0;
  for (const auto& o : kDirections) {
    const Matrix P = glcm_matrix(dv, o);
    if (P.sum() == 0) continue;
    const auto f = glcm_features_from(P + P.transpose(), ng);
    for (std::size_t k = 0; k < f.size(); ++k) acc[k] += f[k];
    ++used;
  }
  if (used > 0)
    for (double& v : acc) v /= used;
  return acc;
}

// P(level, run length) for maximal runs of equal level inside the roi.
inline Matrix glrlm_matrix(const DiscretizedVolume& dv, const Index3& dir) {
  const Index3& d = dv.levels.dims();
  const std::int64_t max_len = std::max({d[0], d[1], d[2]});
  Matrix P = Matrix::Zero(dv.ng, max_len);
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!dv.roi(x, y, z)) continue;
        const std::int32_t l = dv.levels(x, y, z);
        const std::int64_t px = x - dir[0], py = y - dir[1], pz = z - dir[2];
        if (detail::in_roi(dv, px, py, pz) && dv.levels(px, py, pz) == l) continue;  // not a run start
        std::int64_t len = 1;
        std::int64_t cx = x + dir[0], cy = y + dir[1], cz = z + dir[2];
        while (detail::in_roi(dv, cx, cy, cz) && dv.levels(cx, cy, cz) == l) {
          ++len;
          cx += dir[0], cy += dir[1], cz += dir[2];
        }
        P(l - 1, len - 1) += 1.0;
      }
  return P;
}

// P(level, zone size) over 26-connected zones of equal level.
inline Matrix glszm_matrix(const DiscretizedVolume& dv) {
  const std::size_t np = dv.voxel_count();
  Matrix P = Matrix::Zero(dv.ng, static_cast<Eigen::Index>(std::max<std::size_t>(np, 1)));
  Mask3D seen(dv.roi.geometry());
  const auto offs = neighbor_offsets(Connectivity::twentysix);
  const Geometry& g = dv.roi.geometry();
  std::deque<Index3> q;
  for (std::size_t i = 0; i < dv.roi.size(); ++i) {
    if (!dv.roi[i] || seen[i]) continue;
    const std::int32_t l = dv.levels[i];
    std::size_t size = 0;
    seen[i] = 1;
    q.push_back(g.coords(i));
    while (!q.empty()) {
      const Index3 v = q.front();
      q.pop_front();
      ++size;
      for (const auto& o : offs) {
        const std::int64_t a = v[0] + o[0], b = v[1] + o[1], c = v[2] + o[2];
        if (!detail::in_roi(dv, a, b, c) || seen(a, b, c) || dv.levels(a, b, c) != l) continue;
        seen(a, b, c) = 1;
        q.push_back({a, b, c});
      }
    }
    P(l - 1, static_cast<Eigen::Index>(size) - 1) += 1.0;
  }
  return P;
}

// P(level, dependence) where dependence = 1 + number of 26-neighbours in the
// roi with exactly the same level (cutoff alpha = 0).
inline Matrix gldm_matrix(const DiscretizedVolume& dv) {
  Matrix P = Matrix::Zero(dv.ng, 27);
  const auto offs = neighbor_offsets(Connectivity::twentysix);
  const Index3& d = dv.levels.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!dv.roi(x, y, z)) continue;
        const std::int32_t l = dv.levels(x, y, z);
        int dep = 1;
        for (const auto& o : offs) {
          const std::int64_t a = x + o[0], b = y + o[1], c = z + o[2];
          if (detail::in_roi(dv, a, b, c) && dv.levels(a, b, c) == l) ++dep;
        }
        P(l - 1, dep - 1) += 1.0;
      }
  return P;
}

namespace detail {

// Statistics shared by the run-length, size-zone and dependence families.
// j is the run length / zone size / dependence (column + 1).
struct RunStats {
  double small = 0, large = 0, gln = 0, glnn = 0, jn = 0, jnn = 0, percentage = 0, glv = 0, jv = 0, entropy = 0;
  double low = 0, high = 0, small_low = 0, small_high = 0, large_low = 0, large_high = 0;
};

inline RunStats run_stats(const Matrix& P, double np) {
  const double nr = P.sum();
  if (!(nr > 0)) throw InvalidArgument("texture: empty matrix");
  RunStats s;
  const Eigen::VectorXd by_level = P.rowwise().sum();
  const Eigen::VectorXd by_j = P.colwise().sum().transpose();
  for (Eigen::Index a = 0; a < by_level.size(); ++a) s.gln += by_level[a] * by_level[a];
  for (Eigen::Index b = 0; b < by_j.size(); ++b) s.jn += by_j[b] * by_j[b];
  double mu_i = 0, mu_j = 0;
  for (Eigen::Index a = 0; a < P.rows(); ++a)
    for (Eigen::Index b = 0; b < P.cols(); ++b) {
      const double v = P(a, b);
      if (v == 0) continue;
      const double i = static_cast<double>(a + 1), j = static_cast<double>(b + 1), p = v / nr;
      mu_i += p * i;
      mu_j += p * j;
      s.small += v / (j * j);
      s.large += v * j * j;
      s.low += v / (i * i);
      s.high += v * i * i;
      s.small_low += v / (i * i * j * j);
      s.small_high += v * i * i / (j * j);
      s.large_low += v * j * j / (i * i);
      s.large_high += v * i * i * j * j;
      s.entropy -= p * std::log2(p);
    }
  for (Eigen::Index a = 0; a < P.rows(); ++a)
    for (Eigen::Index b = 0; b < P.cols(); ++b) {
      const double v = P(a, b);
      if (v == 0) continue;
      const double i = static_cast<double>(a + 1), j = static_cast<double>(b + 1), p = v / nr;
      s.glv += p * (i - mu_i) * (i - mu_i);
      s.jv += p * (j - mu_j) * (j - mu_j);
    }
  for (double* x : {&s.small, &s.large, &s.low, &s.high, &s.small_low, &s.small_high, &s.large_low, &s.large_high})
    *x /= nr;
  s.glnn = s.gln / (nr * nr);
  s.gln /= nr;
  s.jnn = s.jn / (nr * nr);
  s.jn /= nr;
  s.percentage = nr / np;
  return s;
}

inline std::array<double, 16> run_family(const RunStats& s) {
  return {s.small, s.large, s.gln,  s.glnn,    s.jn,       s.jnn,       s.percentage, s.glv,
          s.jv,    s.entropy, s.low, s.high,   s.small_low, s.small_high, s.large_low,  s.large_high};
}

}  // namespace detail

inline std::array<double, 16> glrlm_features_from(const Matrix& P, double np) {
  return detail::run_family(detail::run_stats(P, np));
}

inline std::array<double, 16> glrlm_features(const DiscretizedVolume& dv) {
  detail::require_texture_roi(dv);
  const auto np = static_cast<double>(dv.voxel_count());
  std::array<double, 16> acc{};
  for (const auto& dir : kDirections) {
    const auto f = glrlm_features_from(glrlm_matrix(dv, dir), np);
    for (std::size_t k = 0; k < f.size(); ++k) acc[k] += f[k];
  }
  for (double& v : acc) v /= static_cast<double>(kDirections.size());
  return acc;
}

inline std::array<double, 16> glszm_features_from(const Matrix& P, double np) {
  return detail::run_family(detail::run_stats(P, np));
}

inline std::array<double, 16> glszm_features(const DiscretizedVolume& dv) {
  detail::require_texture_roi(dv);
  return glszm_features_from(glszm_matrix(dv), static_cast<double>(dv.voxel_count()));
}

inline std::array<double, 14> gldm_features_from(const Matrix& P) {
  const auto s = detail::run_stats(P, P.sum());
  return {s.small, s.large, s.gln, s.jn,  s.jnn,       s.glv,        s.jv,
          s.entropy, s.low, s.high, s.small_low, s.small_high, s.large_low, s.large_high};
}

inline std::array<double, 14> gldm_features(const DiscretizedVolume& dv) {
  detail::require_texture_roi(dv);
  return gldm_features_from(gldm_matrix(dv));
}

}  // namespace crlm::radiomics
