#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "crlm/volgrid/components.hpp"

namespace crlm::radiomics {

inline constexpr std::array<std::string_view, 14> kShapeNames{
    "MeshVolume",          "VoxelVolume",       "SurfaceArea",          "SurfaceVolumeRatio",
    "Sphericity",          "Maximum3DDiameter", "Maximum2DDiameterSlice", "Maximum2DDiameterColumn",
    "Maximum2DDiameterRow", "MajorAxisLength",  "MinorAxisLength",      "LeastAxisLength",
    "Elongation",          "Flatness"};

struct SurfaceMesh {
  double area = 0.0;
  double volume = 0.0;
  std::size_t triangles = 0;
};

namespace detail {

using P3 = Eigen::Vector3d;

// Marching tetrahedra over a scalar lattice; a cube is split into six
// tetrahedra sharing its main diagonal. Triangles are oriented away from the
// inside so the divergence-theorem volume is positive.
class TetMesher {
 public:
  TetMesher(const std::vector<double>& field, Index3 n, Vec3 step, double iso)
      : f_(field), n_(n), step_(step), iso_(iso) {}

  SurfaceMesh run() {
    static constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0},
                                          {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
    static constexpr int kTets[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                                        {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};
    for (std::int64_t z = 0; z + 1 < n_[2]; ++z)
      for (std::int64_t y = 0; y + 1 < n_[1]; ++y)
        for (std::int64_t x = 0; x + 1 < n_[0]; ++x) {
          std::array<P3, 8> p;
          std::array<double, 8> v;
          bool any_in = false, any_out = false;
          for (int k = 0; k < 8; ++k) {
            const std::int64_t cx = x + kCorner[k][0], cy = y + kCorner[k][1], cz = z + kCorner[k][2];
            v[k] = f_[static_cast<std::size_t>((cz * n_[1] + cy) * n_[0] + cx)];
            p[k] = P3(static_cast<double>(cx) * step_[0], static_cast<double>(cy) * step_[1],
                      static_cast<double>(cz) * step_[2]);
            (v[k] > iso_ ? any_in : any_out) = true;
          }
          if (!(any_in && any_out)) continue;
          for (const auto& t : kTets) tet(p, v, t);
        }
    return mesh_;
  }

 private:
  P3 cut(const P3& a, double va, const P3& b, double vb) const { return a + (iso_ - va) / (vb - va) * (b - a); }

  void emit(P3 a, P3 b, P3 c, const P3& inside) {
    P3 nrm = (b - a).cross(c - a);
    if (nrm.dot(inside - (a + b + c) / 3.0) > 0) {
      std::swap(b, c);
      nrm = -nrm;
    }
    mesh_.area += 0.5 * nrm.norm();
    mesh_.volume += a.dot(b.cross(c)) / 6.0;
    ++mesh_.triangles;
  }

  void tet(const std::array<P3, 8>& p, const std::array<double, 8>& v, const int (&t)[4]) {
    int in[4], out[4], ni = 0, no = 0;
    for (int k : t) (v[k] > iso_ ? in[ni++] : out[no++]) = k;
    if (ni == 0 || no == 0) return;
    P3 ic = P3::Zero();
    for (int i = 0; i < ni; ++i) ic += p[in[i]];
    ic /= ni;
    auto c = [&](int a, int b) { return cut(p[a], v[a], p[b], v[b]); };
    if (ni == 1) {
      emit(c(in[0], out[0]), c(in[0], out[1]), c(in[0], out[2]), ic);
    } else if (ni == 3) {
      emit(c(out[0], in[0]), c(out[0], in[1]), c(out[0], in[2]), ic);
    } else {
      const P3 a = c(in[0], out[0]), b = c(in[0], out[1]), d = c(in[1], out[1]), e = c(in[1], out[0]);
      emit(a, b, d, ic);
      emit(a, d, e, ic);
    }
  }

  const std::vector<double>& f_;
  Index3 n_;
  Vec3 step_;
  double iso_;
  SurfaceMesh mesh_;
};

}  // namespace detail

// Iso-surface at 0.5 of the partial-volume field sampled at voxel corners
// (mean of the 8 voxels sharing the corner). Objects too thin to reach 0.5 at
// any corner fall back to the binary field at voxel centres.
inline SurfaceMesh surface_mesh(const Mask3D& mask) {
  const BoundingBox box = foreground_bbox(mask);
  if (box.empty()) throw InvalidArgument("shape: mask is empty");
  Index3 ext{};
  for (int a = 0; a < 3; ++a) ext[a] = box.hi[a] - box.lo[a] + 1;
  auto in = [&](std::int64_t x, std::int64_t y, std::int64_t z) -> double {
    if (x < 0 || y < 0 || z < 0 || x >= ext[0] || y >= ext[1] || z >= ext[2]) return 0.0;
    return mask(box.lo[0] + x, box.lo[1] + y, box.lo[2] + z) ? 1.0 : 0.0;
  };

  const Index3 nc{ext[0] + 1, ext[1] + 1, ext[2] + 1};
  std::vector<double> corner(static_cast<std::size_t>(nc[0] * nc[1] * nc[2]));
  for (std::int64_t z = 0; z < nc[2]; ++z)
    for (std::int64_t y = 0; y < nc[1]; ++y)
      for (std::int64_t x = 0; x < nc[0]; ++x) {
        double s = 0;
        for (int dz = -1; dz <= 0; ++dz)
          for (int dy = -1; dy <= 0; ++dy)
            for (int dx = -1; dx <= 0; ++dx) s += in(x + dx, y + dy, z + dz);
        corner[static_cast<std::size_t>((z * nc[1] + y) * nc[0] + x)] = s / 8.0;
      }
  SurfaceMesh m = detail::TetMesher(corner, nc, mask.spacing(), 0.5).run();
  if (m.triangles > 0) return m;

  const Index3 nb{ext[0] + 2, ext[1] + 2, ext[2] + 2};
  std::vector<double> binary(static_cast<std::size_t>(nb[0] * nb[1] * nb[2]));
  for (std::int64_t z = 0; z < nb[2]; ++z)
    for (std::int64_t y = 0; y < nb[1]; ++y)
      for (std::int64_t x = 0; x < nb[0]; ++x)
        binary[static_cast<std::size_t>((z * nb[1] + y) * nb[0] + x)] = in(x - 1, y - 1, z - 1);
  return detail::TetMesher(binary, nb, mask.spacing(), 0.5).run();
}

namespace detail {

// Roi voxels with a 6-neighbour outside the roi (or outside the grid).
inline std::vector<Index3> boundary_voxels(const Mask3D& m) {
  std::vector<Index3> out;
  const Index3& d = m.dims();
  static constexpr int kN[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!m(x, y, z)) continue;
        for (const auto& o : kN) {
          const std::int64_t a = x + o[0], b = y + o[1], c = z + o[2];
          if (!m.geometry().contains(a, b, c) || !m(a, b, c)) {
            out.push_back({x, y, z});
            break;
          }
        }
      }
  return out;
}

}  // namespace detail

// Feature order follows kShapeNames. Diameters are between boundary voxel
// centres; axis lengths are 4 sqrt(lambda) of the sample covariance of the
// physical voxel-centre coordinates.
inline std::array<double, 14> shape_features(const Mask3D& mask) {
  const SurfaceMesh mesh = surface_mesh(mask);
  const Vec3& s = mask.spacing();
  const double voxel_volume = static_cast<double>(count_nonzero(mask)) * mask.geometry().voxel_volume();

  const auto bnd = detail::boundary_voxels(mask);
  double d3 = 0, d_slice = 0, d_col = 0, d_row = 0;
  for (std::size_t i = 0; i < bnd.size(); ++i)
    for (std::size_t j = i + 1; j < bnd.size(); ++j) {
      const double dx = static_cast<double>(bnd[i][0] - bnd[j][0]) * s[0];
      const double dy = static_cast<double>(bnd[i][1] - bnd[j][1]) * s[1];
      const double dz = static_cast<double>(bnd[i][2] - bnd[j][2]) * s[2];
      const double d2 = dx * dx + dy * dy + dz * dz;
      d3 = std::max(d3, d2);
      if (bnd[i][2] == bnd[j][2]) d_slice = std::max(d_slice, d2);
      if (bnd[i][1] == bnd[j][1]) d_col = std::max(d_col, d2);
      if (bnd[i][0] == bnd[j][0]) d_row = std::max(d_row, d2);
    }

  std::vector<Eigen::Vector3d> pts;
  const Index3& d = mask.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (mask(x, y, z))
          pts.emplace_back(static_cast<double>(x) * s[0], static_cast<double>(y) * s[1], static_cast<double>(z) * s[2]);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  if (pts.size() > 1) cov /= static_cast<double>(pts.size() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov, Eigen::EigenvaluesOnly);
  Eigen::Vector3d lam = eig.eigenvalues().cwiseMax(0.0);  // ascending
  const double major = 4 * std::sqrt(lam[2]), minor = 4 * std::sqrt(lam[1]), least = 4 * std::sqrt(lam[0]);

  const double area = mesh.area, vol = mesh.volume;
  const double sphericity = area > 0 ? std::cbrt(36.0 * std::numbers::pi * vol * vol) / area : 0.0;
  return {vol,
          voxel_volume,
          area,
          vol > 0 ? area / vol : 0.0,
          sphericity,
          std::sqrt(d3),
          std::sqrt(d_slice),
          std::sqrt(d_col),
          std::sqrt(d_row),
          major,
          minor,
          least,
          lam[2] > 0 ? std::sqrt(lam[1] / lam[2]) : 0.0,  // degenerate single voxel -> 0
          lam[2] > 0 ? std::sqrt(lam[0] / lam[2]) : 0.0};
}

}  // namespace crlm::radiomics
