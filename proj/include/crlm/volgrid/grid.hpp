#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crlm/error.hpp"

namespace crlm {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

// Voxel lattice description. x is the fastest-varying axis in every buffer.
struct Geometry {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  }
  double voxel_volume() const { return spacing[0] * spacing[1] * spacing[2]; }

  std::size_t offset(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + dims[0] * (y + dims[1] * z));
  }
  Index3 coords(std::size_t off) const {
    const auto o = static_cast<std::int64_t>(off);
    return {o % dims[0], (o / dims[0]) % dims[1], o / (dims[0] * dims[1])};
  }
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }
  Vec3 physical(const Index3& i) const {
    return {origin[0] + spacing[0] * static_cast<double>(i[0]),
            origin[1] + spacing[1] * static_cast<double>(i[1]),
            origin[2] + spacing[2] * static_cast<double>(i[2])};
  }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (dims[a] < 1) throw InvalidArgument("geometry: dims must be >= 1");
      if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
        throw InvalidArgument("geometry: spacing must be > 0");
      if (!std::isfinite(origin[a])) throw InvalidArgument("geometry: origin must be finite");
    }
  }

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

// Dense 3D buffer over a Geometry. Immutable in spirit: operations return new grids.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Geometry geo, T fill = T{}) : geo_(geo) {
    geo_.validate();
    data_.assign(geo_.voxel_count(), fill);
  }
  Grid(Geometry geo, std::vector<T> data) : geo_(geo), data_(std::move(data)) {
    geo_.validate();
    if (data_.size() != geo_.voxel_count())
      throw InvalidArgument("grid: buffer length does not match dims");
  }

  const Geometry& geometry() const { return geo_; }
  const Index3& dims() const { return geo_.dims; }
  const Vec3& spacing() const { return geo_.spacing; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) { return data_[geo_.offset(x, y, z)]; }
  const T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[geo_.offset(x, y, z)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& buffer() { return data_; }
  const std::vector<T>& buffer() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Geometry geo_;
  std::vector<T> data_;
};

// Intensity volume. Intensities must be finite; use make_volume to check.
using Volume3D = Grid<double>;

enum class Label : std::uint8_t { background = 0, liver = 1, tumor = 2, spleen = 3 };

inline bool is_valid_label(std::uint8_t v) { return v <= 3; }

inline const char* label_name(Label l) {
  switch (l) {
    case Label::background: return "background";
    case Label::liver: return "liver";
    case Label::tumor: return "tumor";
    case Label::spleen: return "spleen";
  }
  return "?";
}

// Label mask; a "binary" mask is any Mask3D where nonzero means foreground.
using Mask3D = Grid<std::uint8_t>;

inline Volume3D make_volume(Geometry geo, std::vector<double> data) {
  for (double v : data)
    if (!std::isfinite(v)) throw InvalidArgument("volume: non-finite intensity");
  return Volume3D(geo, std::move(data));
}

inline Mask3D binary_view(const Mask3D& m, Label l) {
  Mask3D out(m.geometry());
  const auto want = static_cast<std::uint8_t>(l);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] == want ? 1 : 0;
  return out;
}

inline std::size_t count_nonzero(const Mask3D& m) {
  return static_cast<std::size_t>(std::count_if(m.buffer().begin(), m.buffer().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

template <typename A, typename B>
bool same_lattice(const Grid<A>& a, const Grid<B>& b) {
  return a.dims() == b.dims();
}

// ---------------------------------------------------------------------------
// 2D slices
// ---------------------------------------------------------------------------

struct Pixel {
  std::int64_t row = 0;
  std::int64_t col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

template <typename T>
class Image2DOf {
 public:
  Image2DOf() = default;
  Image2DOf(std::int64_t rows, std::int64_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {
    if (rows < 1 || cols < 1) throw InvalidArgument("image: rows and cols must be >= 1");
  }
  Image2DOf(std::int64_t rows, std::int64_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 1 || cols < 1) throw InvalidArgument("image: rows and cols must be >= 1");
    if (data_.size() != static_cast<std::size_t>(rows * cols))
      throw InvalidArgument("image: buffer length does not match shape");
  }

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  bool contains(Pixel p) const { return p.row >= 0 && p.col >= 0 && p.row < rows_ && p.col < cols_; }

  T& operator()(std::int64_t r, std::int64_t c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
  const T& operator()(std::int64_t r, std::int64_t c) const {
    return data_[static_cast<std::size_t>(r * cols_ + c)];
  }
  T& operator[](Pixel p) { return (*this)(p.row, p.col); }
  const T& operator[](Pixel p) const { return (*this)(p.row, p.col); }

  const std::vector<T>& buffer() const { return data_; }
  std::vector<T>& buffer() { return data_; }

  friend bool operator==(const Image2DOf&, const Image2DOf&) = default;

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<T> data_;
};

using Image2D = Image2DOf<double>;
using Mask2D = Image2DOf<std::uint8_t>;

// Slice orientation, named by the axis held fixed:
//   axial    fixes z, pixel (row, col) = (y, x)
//   coronal  fixes y, pixel (row, col) = (z, x)
//   sagittal fixes x, pixel (row, col) = (z, y)
enum class View : std::uint8_t { axial = 0, coronal = 1, sagittal = 2 };

inline constexpr std::array<View, 3> kAllViews{View::axial, View::coronal, View::sagittal};

inline const char* view_name(View v) {
  switch (v) {
    case View::axial: return "axial";
    case View::coronal: return "coronal";
    case View::sagittal: return "sagittal";
  }
  return "?";
}

inline View parse_view(const std::string& s) {
  if (s == "axial") return View::axial;
  if (s == "coronal") return View::coronal;
  if (s == "sagittal") return View::sagittal;
  throw InvalidArgument("unknown view '" + s + "'");
}

// Volume axis held fixed by the view.
inline int normal_axis(View v) {
  switch (v) {
    case View::axial: return 2;
    case View::coronal: return 1;
    case View::sagittal: return 0;
  }
  return 2;
}
// Volume axes mapped to (row, col).
inline std::pair<int, int> inplane_axes(View v) {
  switch (v) {
    case View::axial: return {1, 0};
    case View::coronal: return {2, 0};
    case View::sagittal: return {2, 1};
  }
  return {1, 0};
}

struct SliceAddress {
  View view = View::axial;
  std::int64_t index = 0;
  friend bool operator==(const SliceAddress&, const SliceAddress&) = default;
};

inline std::int64_t slice_count(const Geometry& g, View v) { return g.dims[normal_axis(v)]; }

inline std::pair<std::int64_t, std::int64_t> slice_shape(const Geometry& g, View v) {
  const auto [r, c] = inplane_axes(v);
  return {g.dims[r], g.dims[c]};
}

inline void check_address(const Geometry& g, SliceAddress a) {
  if (a.index < 0 || a.index >= slice_count(g, a.view))
    throw InvalidArgument(std::string("slice index out of range for ") + view_name(a.view));
}

inline Index3 slice_to_voxel(SliceAddress a, Pixel p) {
  Index3 v{};
  const auto [r, c] = inplane_axes(a.view);
  v[normal_axis(a.view)] = a.index;
  v[r] = p.row;
  v[c] = p.col;
  return v;
}

inline std::pair<SliceAddress, Pixel> voxel_to_slice(View view, const Index3& v) {
  const auto [r, c] = inplane_axes(view);
  return {SliceAddress{view, v[normal_axis(view)]}, Pixel{v[r], v[c]}};
}

// In-plane pixel spacing (row, col) in mm.
inline std::pair<double, double> slice_spacing(const Geometry& g, View v) {
  const auto [r, c] = inplane_axes(v);
  return {g.spacing[r], g.spacing[c]};
}

template <typename T>
Image2DOf<T> extract_slice(const Grid<T>& vol, SliceAddress a) {
  check_address(vol.geometry(), a);
  const auto [rows, cols] = slice_shape(vol.geometry(), a.view);
  Image2DOf<T> img(rows, cols);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) {
      const Index3 v = slice_to_voxel(a, {r, c});
      img(r, c) = vol(v[0], v[1], v[2]);
    }
  return img;
}

template <typename T>
void insert_slice(Grid<T>& vol, SliceAddress a, const Image2DOf<T>& img) {
  check_address(vol.geometry(), a);
  const auto [rows, cols] = slice_shape(vol.geometry(), a.view);
  if (img.rows() != rows || img.cols() != cols) throw InvalidArgument("insert_slice: shape mismatch");
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) {
      const Index3 v = slice_to_voxel(a, {r, c});
      vol(v[0], v[1], v[2]) = img(r, c);
    }
}

}  // namespace crlm
