#pragma once

// Volume and mask persistence.
//
// Two formats are supported:
//
//  * NIfTI-1 single file (.nii, or gzip-compressed .nii.gz). Reading accepts
//    either byte order and the common scalar datatypes; all are widened to
//    double. Orientation matrices are not interpreted; the origin is taken
//    from qoffset (qform_code > 0) or the sform translation column.
//
//  * Raw fixture: a JSON header `<stem>.json` plus a payload `<stem>.raw`.
//
//      {"format": "crlm-raw", "version": 1,
//       "dims": [nx, ny, nz], "spacing": [sx, sy, sz], "origin": [ox, oy, oz],
//       "dtype": "uint8" | "int16" | "int32" | "float32" | "float64",
//       "payload": "<stem>.raw"}
//
//    The payload is nx*ny*nz little-endian values, x fastest, no padding.

#include <zlib.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/volgrid/grid.hpp"

namespace crlm {

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Reads a scalar stored in the given file byte order.
template <typename T>
T load_le(const unsigned char* p, bool file_big_endian) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if (file_big_endian != (std::endian::native == std::endian::big)) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void store_le(std::string& out, std::size_t pos, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(out.data() + pos, b, sizeof(T));
}

// Reads a whole file; gzip streams are inflated transparently.
inline std::string read_file_bytes(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError(IoErrorKind::not_found, path);
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError(IoErrorKind::not_found, path);
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw IoError(IoErrorKind::truncated_payload, path + " (corrupt gzip stream)");
  return out;
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb6");
    if (!f) throw IoError(IoErrorKind::write_failed, path);
    const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (n != static_cast<int>(bytes.size())) throw IoError(IoErrorKind::write_failed, path);
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(IoErrorKind::write_failed, path);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError(IoErrorKind::write_failed, path);
}

struct DtypeInfo {
  int nifti_code;
  int bytes;
  const char* name;
};

inline constexpr DtypeInfo kDtypes[] = {
    {2, 1, "uint8"},    {4, 2, "int16"},  {8, 4, "int32"},    {16, 4, "float32"},
    {64, 8, "float64"}, {256, 1, "int8"}, {512, 2, "uint16"}, {768, 4, "uint32"},
};

inline const DtypeInfo* find_dtype(int code) {
  for (const auto& d : kDtypes)
    if (d.nifti_code == code) return &d;
  return nullptr;
}
inline const DtypeInfo* find_dtype(const std::string& name) {
  for (const auto& d : kDtypes)
    if (name == d.name) return &d;
  return nullptr;
}

inline double decode_scalar(const unsigned char* p, int code, bool swap) {
  switch (code) {
    case 2: return static_cast<double>(*p);
    case 256: return static_cast<double>(static_cast<std::int8_t>(*p));
    case 4: return load_le<std::int16_t>(p, swap);
    case 512: return load_le<std::uint16_t>(p, swap);
    case 8: return load_le<std::int32_t>(p, swap);
    case 768: return load_le<std::uint32_t>(p, swap);
    case 16: return load_le<float>(p, swap);
    case 64: return load_le<double>(p, swap);
  }
  throw IoError(IoErrorKind::unsupported_datatype, std::to_string(code));
}

inline std::vector<double> decode_payload(const std::string& bytes, std::size_t offset, std::size_t count,
                                          const DtypeInfo& dt, bool swap, const std::string& what) {
  const std::size_t need = offset + count * static_cast<std::size_t>(dt.bytes);
  if (bytes.size() < need)
    throw IoError(IoErrorKind::truncated_payload, what + ": expected " + std::to_string(need) +
                                                      " bytes, found " + std::to_string(bytes.size()));
  std::vector<double> out(count);
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
  for (std::size_t i = 0; i < count; ++i)
    out[i] = decode_scalar(base + i * static_cast<std::size_t>(dt.bytes), dt.nifti_code, swap);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// NIfTI-1
// ---------------------------------------------------------------------------

struct NiftiHeaderInfo {
  Geometry geometry;
  int datatype = 0;
  double scl_slope = 0.0;
  double scl_inter = 0.0;
  std::size_t vox_offset = 352;
  bool swapped = false;
};

inline NiftiHeaderInfo parse_nifti_header(const std::string& bytes, const std::string& what) {
  using detail::load_le;
  if (bytes.size() < 348) throw IoError(IoErrorKind::truncated_payload, what + ": header shorter than 348 bytes");
  const auto* h = reinterpret_cast<const unsigned char*>(bytes.data());
  NiftiHeaderInfo info;
  const bool host_le = std::endian::native == std::endian::little;
  bool file_be = !host_le;
  if (load_le<std::int32_t>(h, file_be) != 348) {
    file_be = !file_be;
    if (load_le<std::int32_t>(h, file_be) != 348)
      throw IoError(IoErrorKind::bad_magic, what + ": sizeof_hdr is not 348");
  }
  info.swapped = file_be;
  if (!(std::memcmp(h + 344, "n+1\0", 4) == 0))
    throw IoError(IoErrorKind::bad_magic, what + ": expected single-file NIfTI-1 magic 'n+1'");

  std::int16_t dim[8];
  for (int i = 0; i < 8; ++i) dim[i] = load_le<std::int16_t>(h + 40 + 2 * i, file_be);
  if (dim[0] < 1 || dim[0] > 7) throw IoError(IoErrorKind::bad_header, what + ": dim[0] out of range");
  float pixdim[8];
  for (int i = 0; i < 8; ++i) pixdim[i] = load_le<float>(h + 76 + 4 * i, file_be);

  for (int a = 0; a < 3; ++a) {
    const std::int64_t d = (a + 1 <= dim[0]) ? dim[a + 1] : 1;
    if (d <= 0) throw IoError(IoErrorKind::nonpositive_dims, what + ": dim[" + std::to_string(a + 1) + "] = " +
                                                                 std::to_string(d));
    info.geometry.dims[a] = d;
    const double s = (a + 1 <= dim[0]) ? std::abs(static_cast<double>(pixdim[a + 1])) : 1.0;
    info.geometry.spacing[a] = (s > 0.0 && std::isfinite(s)) ? s : 1.0;
  }
  info.datatype = load_le<std::int16_t>(h + 70, file_be);
  if (!detail::find_dtype(info.datatype))
    throw IoError(IoErrorKind::unsupported_datatype, what + ": datatype " + std::to_string(info.datatype));
  const float vox_offset = load_le<float>(h + 108, file_be);
  info.vox_offset = vox_offset >= 348.0f ? static_cast<std::size_t>(vox_offset) : 352;
  info.scl_slope = load_le<float>(h + 112, file_be);
  info.scl_inter = load_le<float>(h + 116, file_be);
  const std::int16_t qform = load_le<std::int16_t>(h + 252, file_be);
  const std::int16_t sform = load_le<std::int16_t>(h + 254, file_be);
  for (int a = 0; a < 3; ++a) {
    if (qform > 0)
      info.geometry.origin[a] = load_le<float>(h + 268 + 4 * a, file_be);
    else if (sform > 0)
      info.geometry.origin[a] = load_le<float>(h + 280 + 16 * a + 12, file_be);
  }
  return info;
}

inline Volume3D decode_nifti(const std::string& bytes, const std::string& what = "nifti") {
  const NiftiHeaderInfo info = parse_nifti_header(bytes, what);
  const auto* dt = detail::find_dtype(info.datatype);
  auto data = detail::decode_payload(bytes, info.vox_offset, info.geometry.voxel_count(), *dt, info.swapped, what);
  if (info.scl_slope != 0.0 && std::isfinite(info.scl_slope) && !(info.scl_slope == 1.0 && info.scl_inter == 0.0))
    for (double& v : data) v = v * info.scl_slope + info.scl_inter;
  return make_volume(info.geometry, std::move(data));
}

// Serializes to an uncompressed single-file NIfTI-1 byte string.
// `datatype` is a NIfTI code: 2 (uint8), 16 (float32) or 64 (float64).
template <typename T>
std::string encode_nifti(const Grid<T>& g, int datatype) {
  using detail::store_le;
  const auto* dt = detail::find_dtype(datatype);
  if (!dt || (datatype != 2 && datatype != 16 && datatype != 64 && datatype != 4))
    throw IoError(IoErrorKind::unsupported_datatype, "encode_nifti: datatype " + std::to_string(datatype));
  const std::size_t header = 352;
  std::string out(header + g.size() * static_cast<std::size_t>(dt->bytes), '\0');
  store_le<std::int32_t>(out, 0, 348);
  const auto& geo = g.geometry();
  const std::int16_t dims[8] = {3, static_cast<std::int16_t>(geo.dims[0]), static_cast<std::int16_t>(geo.dims[1]),
                                static_cast<std::int16_t>(geo.dims[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) store_le<std::int16_t>(out, 40 + 2 * i, dims[i]);
  store_le<std::int16_t>(out, 70, static_cast<std::int16_t>(datatype));
  store_le<std::int16_t>(out, 72, static_cast<std::int16_t>(dt->bytes * 8));
  const float pixdim[8] = {1.0f, static_cast<float>(geo.spacing[0]), static_cast<float>(geo.spacing[1]),
                           static_cast<float>(geo.spacing[2]), 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) store_le<float>(out, 76 + 4 * i, pixdim[i]);
  store_le<float>(out, 108, static_cast<float>(header));
  store_le<float>(out, 112, 1.0f);
  out[123] = 2;  // xyzt_units: mm
  store_le<std::int16_t>(out, 252, 1);
  for (int a = 0; a < 3; ++a) store_le<float>(out, 268 + 4 * a, static_cast<float>(geo.origin[a]));
  std::memcpy(out.data() + 344, "n+1\0", 4);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t pos = header + i * static_cast<std::size_t>(dt->bytes);
    const double v = static_cast<double>(g[i]);
    switch (datatype) {
      case 2: out[pos] = static_cast<char>(static_cast<std::uint8_t>(v)); break;
      case 4: store_le<std::int16_t>(out, pos, static_cast<std::int16_t>(v)); break;
      case 16: store_le<float>(out, pos, static_cast<float>(v)); break;
      default: store_le<double>(out, pos, v); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Raw + JSON sidecar
// ---------------------------------------------------------------------------

inline std::string raw_stem(const std::string& path) {
  if (detail::ends_with(path, ".json") || detail::ends_with(path, ".raw")) {
    return path.substr(0, path.rfind('.'));
  }
  return path;
}

inline Volume3D load_raw(const std::string& path) {
  const std::string stem = raw_stem(path);
  const std::string header_path = stem + ".json";
  if (!std::filesystem::exists(header_path)) throw IoError(IoErrorKind::not_found, header_path);
  nlohmann::json h;
  try {
    std::ifstream is(header_path);
    h = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(IoErrorKind::bad_header, header_path + ": " + e.what());
  }
  if (!h.is_object() || h.value("format", "") != "crlm-raw")
    throw IoError(IoErrorKind::bad_magic, header_path + ": format is not 'crlm-raw'");
  Geometry geo;
  try {
    for (int a = 0; a < 3; ++a) {
      geo.dims[a] = h.at("dims").at(a).get<std::int64_t>();
      geo.spacing[a] = h.at("spacing").at(a).get<double>();
      geo.origin[a] = h.contains("origin") ? h["origin"].at(a).get<double>() : 0.0;
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(IoErrorKind::bad_header, header_path + ": " + e.what());
  }
  for (int a = 0; a < 3; ++a)
    if (geo.dims[a] <= 0) throw IoError(IoErrorKind::nonpositive_dims, header_path);
  for (int a = 0; a < 3; ++a)
    if (!(geo.spacing[a] > 0.0)) throw IoError(IoErrorKind::bad_header, header_path + ": spacing must be > 0");
  const auto* dt = detail::find_dtype(h.value("dtype", std::string("float64")));
  if (!dt) throw IoError(IoErrorKind::unsupported_datatype, header_path);
  std::filesystem::path payload = h.value("payload", std::filesystem::path(stem + ".raw").filename().string());
  if (payload.is_relative()) payload = std::filesystem::path(header_path).parent_path() / payload;
  const std::string bytes = detail::read_file_bytes(payload.string());
  auto data = detail::decode_payload(bytes, 0, geo.voxel_count(), *dt, false, payload.string());
  return make_volume(geo, std::move(data));
}

template <typename T>
void save_raw(const Grid<T>& g, const std::string& path, const std::string& dtype = "float64") {
  const std::string stem = raw_stem(path);
  const auto* dt = detail::find_dtype(dtype);
  if (!dt) throw IoError(IoErrorKind::unsupported_datatype, dtype);
  const auto& geo = g.geometry();
  nlohmann::json h = {{"format", "crlm-raw"},
                      {"version", 1},
                      {"dims", geo.dims},
                      {"spacing", geo.spacing},
                      {"origin", geo.origin},
                      {"dtype", dt->name},
                      {"payload", std::filesystem::path(stem + ".raw").filename().string()}};
  detail::write_file_bytes(stem + ".json", h.dump(2) + "\n");
  std::string bytes(g.size() * static_cast<std::size_t>(dt->bytes), '\0');
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t pos = i * static_cast<std::size_t>(dt->bytes);
    const double v = static_cast<double>(g[i]);
    switch (dt->nifti_code) {
      case 2: bytes[pos] = static_cast<char>(static_cast<std::uint8_t>(v)); break;
      case 256: bytes[pos] = static_cast<char>(static_cast<std::int8_t>(v)); break;
      case 4: detail::store_le<std::int16_t>(bytes, pos, static_cast<std::int16_t>(v)); break;
      case 512: detail::store_le<std::uint16_t>(bytes, pos, static_cast<std::uint16_t>(v)); break;
      case 8: detail::store_le<std::int32_t>(bytes, pos, static_cast<std::int32_t>(v)); break;
      case 768: detail::store_le<std::uint32_t>(bytes, pos, static_cast<std::uint32_t>(v)); break;
      case 16: detail::store_le<float>(bytes, pos, static_cast<float>(v)); break;
      default: detail::store_le<double>(bytes, pos, v); break;
    }
  }
  detail::write_file_bytes(stem + ".raw", bytes);
}

// ---------------------------------------------------------------------------
// Format dispatch
// ---------------------------------------------------------------------------

inline bool is_raw_path(const std::string& path) {
  return detail::ends_with(path, ".json") || detail::ends_with(path, ".raw");
}

inline Volume3D load_volume(const std::string& path) {
  if (is_raw_path(path)) return load_raw(path);
  return decode_nifti(detail::read_file_bytes(path), path);
}

inline Mask3D to_mask(const Volume3D& v, const std::string& what = "mask") {
  Mask3D m(v.geometry());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i];
    if (x != std::floor(x) || x < 0 || x > 255 || !is_valid_label(static_cast<std::uint8_t>(x)))
      throw IoError(IoErrorKind::bad_header, what + ": label value " + std::to_string(x) + " not in {0,1,2,3}");
    m[i] = static_cast<std::uint8_t>(x);
  }
  return m;
}

inline Mask3D load_mask(const std::string& path) { return to_mask(load_volume(path), path); }

inline void save_volume(const Volume3D& v, const std::string& path) {
  if (is_raw_path(path)) return save_raw(v, path, "float64");
  detail::write_file_bytes(path, encode_nifti(v, 64));
}

inline void save_mask(const Mask3D& m, const std::string& path) {
  if (is_raw_path(path)) return save_raw(m, path, "uint8");
  detail::write_file_bytes(path, encode_nifti(m, 2));
}

}  // namespace crlm
