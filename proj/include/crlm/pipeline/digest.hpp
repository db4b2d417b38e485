#pragma once

#include <openssl/evp.h>

#include <filesystem>
#include <string>

#include "crlm/error.hpp"
#include "crlm/volgrid/io.hpp"

namespace crlm::pipeline {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// Digest of the bytes on disk (no gzip inflation).
inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoErrorKind::not_found, path.string());
  return sha256_hex(std::string(std::istreambuf_iterator<char>(is), {}));
}

}  // namespace crlm::pipeline
