#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "crlm/volgrid/grid.hpp"

namespace crlm {

enum class Connectivity { six = 6, eighteen = 18, twentysix = 26 };

inline std::vector<Index3> neighbor_offsets(Connectivity c) {
  std::vector<Index3> out;
  for (std::int64_t dz = -1; dz <= 1; ++dz)
    for (std::int64_t dy = -1; dy <= 1; ++dy)
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto nz = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (nz == 0) continue;
        if (c == Connectivity::six && nz > 1) continue;
        if (c == Connectivity::eighteen && nz > 2) continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

struct BoundingBox {
  Index3 lo{0, 0, 0};
  Index3 hi{-1, -1, -1};  // inclusive
  bool empty() const { return hi[0] < lo[0] || hi[1] < lo[1] || hi[2] < lo[2]; }
  void include(const Index3& p) {
    if (empty()) {
      lo = hi = p;
      return;
    }
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  bool contains(const Index3& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < lo[a] || p[a] > hi[a]) return false;
    return true;
  }
};

struct InstanceInfo {
  std::int32_t id = 0;
  std::size_t voxel_count = 0;
  double volume_mm3 = 0.0;
  double longest_axial_diameter_mm = 0.0;
  Vec3 centroid{0, 0, 0};  // voxel-index coordinates
  BoundingBox bbox;
};

struct InstanceLabeling {
  Grid<std::int32_t> ids;  // 0 = background, instances numbered from 1
  std::vector<InstanceInfo> instances;

  std::size_t count() const { return instances.size(); }
  const InstanceInfo& info(std::int32_t id) const { return instances.at(static_cast<std::size_t>(id - 1)); }
  Mask3D instance_mask(std::int32_t id) const {
    Mask3D m(ids.geometry());
    for (std::size_t i = 0; i < ids.size(); ++i) m[i] = ids[i] == id ? 1 : 0;
    return m;
  }
};

// Max over axial slices of the largest pairwise in-plane distance between
// boundary pixels of the instance. A pixel is on the boundary when one of its
// 4 in-plane neighbours is outside the instance or outside the image.
template <typename T, typename Pred>
double longest_axial_diameter_if(const Grid<T>& grid, Pred in_instance, const BoundingBox& box) {
  if (box.empty()) throw InvalidArgument("longest_axial_diameter: empty instance");
  const auto& geo = grid.geometry();
  const double sx = geo.spacing[0];
  const double sy = geo.spacing[1];
  auto inside = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
    return geo.contains(x, y, z) && in_instance(grid(x, y, z));
  };
  double best = 0.0;
  std::vector<std::pair<std::int64_t, std::int64_t>> boundary;
  for (std::int64_t z = box.lo[2]; z <= box.hi[2]; ++z) {
    boundary.clear();
    for (std::int64_t y = box.lo[1]; y <= box.hi[1]; ++y)
      for (std::int64_t x = box.lo[0]; x <= box.hi[0]; ++x) {
        if (!inside(x, y, z)) continue;
        if (!inside(x - 1, y, z) || !inside(x + 1, y, z) || !inside(x, y - 1, z) || !inside(x, y + 1, z))
          boundary.emplace_back(x, y);
      }
    for (std::size_t i = 0; i < boundary.size(); ++i)
      for (std::size_t j = i + 1; j < boundary.size(); ++j) {
        const double dx = static_cast<double>(boundary[i].first - boundary[j].first) * sx;
        const double dy = static_cast<double>(boundary[i].second - boundary[j].second) * sy;
        best = std::max(best, dx * dx + dy * dy);
      }
  }
  return std::sqrt(best);
}

inline double longest_axial_diameter(const InstanceLabeling& lab, std::int32_t id) {
  return longest_axial_diameter_if(lab.ids, [id](std::int32_t v) { return v == id; }, lab.info(id).bbox);
}

inline BoundingBox foreground_bbox(const Mask3D& m) {
  BoundingBox b;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) b.include(m.geometry().coords(i));
  return b;
}

inline double longest_axial_diameter(const Mask3D& binary) {
  return longest_axial_diameter_if(binary, [](std::uint8_t v) { return v != 0; }, foreground_bbox(binary));
}

// Labels the nonzero voxels of `m`. Ids follow raster order (x fastest) of each
// instance's first voxel.
inline InstanceLabeling connected_components(const Mask3D& m, Connectivity conn = Connectivity::twentysix) {
  const auto& geo = m.geometry();
  InstanceLabeling out{Grid<std::int32_t>(geo, 0), {}};
  const auto offsets = neighbor_offsets(conn);
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < m.size(); ++start) {
    if (!m[start] || out.ids[start] != 0) continue;
    const auto id = static_cast<std::int32_t>(out.instances.size() + 1);
    InstanceInfo info;
    info.id = id;
    Vec3 sum{0, 0, 0};
    out.ids[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const Index3 p = geo.coords(cur);
      ++info.voxel_count;
      for (int a = 0; a < 3; ++a) sum[a] += static_cast<double>(p[a]);
      info.bbox.include(p);
      for (const auto& d : offsets) {
        const std::int64_t x = p[0] + d[0], y = p[1] + d[1], z = p[2] + d[2];
        if (!geo.contains(x, y, z)) continue;
        const std::size_t n = geo.offset(x, y, z);
        if (m[n] && out.ids[n] == 0) {
          out.ids[n] = id;
          queue.push_back(n);
        }
      }
    }
    for (int a = 0; a < 3; ++a) info.centroid[a] = sum[a] / static_cast<double>(info.voxel_count);
    info.volume_mm3 = static_cast<double>(info.voxel_count) * geo.voxel_volume();
    out.instances.push_back(info);
  }
  for (auto& info : out.instances) info.longest_axial_diameter_mm = longest_axial_diameter(out, info.id);
  return out;
}

// Background voxels not 6-connected to the volume border become foreground.
inline Mask3D fill_holes(const Mask3D& m) {
  const auto& geo = m.geometry();
  const auto& d = geo.dims;
  Mask3D outside(geo);
  std::deque<Index3> queue;
  auto visit = [&](const Index3& p) {
    const std::size_t o = geo.offset(p[0], p[1], p[2]);
    if (m[o] || outside[o]) return;
    outside[o] = 1;
    queue.push_back(p);
  };
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (x == 0 || y == 0 || z == 0 || x == d[0] - 1 || y == d[1] - 1 || z == d[2] - 1) visit({x, y, z});
  const auto offsets = neighbor_offsets(Connectivity::six);
  while (!queue.empty()) {
    const Index3 p = queue.front();
    queue.pop_front();
    for (const auto& o : offsets) {
      const Index3 q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
      if (q[0] < 0 || q[1] < 0 || q[2] < 0 || q[0] >= d[0] || q[1] >= d[1] || q[2] >= d[2]) continue;
      visit(q);
    }
  }
  Mask3D out(geo);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = outside[i] ? 0 : 1;
  return out;
}

}  // namespace crlm
