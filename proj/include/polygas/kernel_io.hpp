#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polygas/core.hpp"

namespace polygas {

static_assert(std::endian::native == std::endian::little, "kernel files are written in native little-endian order");

/**
 * @brief 64-byte header of a kernel array file.
 *
 * Layout: magic "PGKN", u32 version, u32 lattice dimension, u32 rank,
 * u32 shape[8], u32 dtype (1 = f64 little-endian), u32 level, u64 reserved.
 */
struct KernelHeader {
  std::uint32_t version = 1;
  std::uint32_t d = 0;
  std::uint32_t rank = 0;
  std::array<std::uint32_t, 8> shape{};
  std::uint32_t dtype = 1;
  std::uint32_t level = 0;

  std::size_t count() const {
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) n *= shape[k];
    return n;
  }
};

inline constexpr std::uint32_t kKernelFormatVersion = 1;

/// Writes content to path via a temporary file and rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string encode_kernel(const KernelHeader& hd, const std::vector<double>& data) {
  if (hd.rank < 1 || hd.rank > 8) throw DomainError("kernel file: rank must lie in [1, 8]");
  if (hd.count() != data.size()) throw DomainError("kernel file: shape does not match data size");
  std::string out(64, '\0');
  char* p = out.data();
  std::memcpy(p, "PGKN", 4);
  std::memcpy(p + 4, &hd.version, 4);
  std::memcpy(p + 8, &hd.d, 4);
  std::memcpy(p + 12, &hd.rank, 4);
  std::memcpy(p + 16, hd.shape.data(), 32);
  std::memcpy(p + 48, &hd.dtype, 4);
  std::memcpy(p + 52, &hd.level, 4);
  out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
  return out;
}

inline void write_kernel(const std::filesystem::path& path, const KernelHeader& hd, const std::vector<double>& data) {
  atomic_write(path, encode_kernel(hd, data));
}

inline std::vector<double> read_kernel(const std::filesystem::path& path, KernelHeader* out_header = nullptr) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string buf = ss.str();
  if (buf.size() < 64 || std::memcmp(buf.data(), "PGKN", 4) != 0) throw Error("not a kernel file: " + path.string());
  KernelHeader hd;
  const char* p = buf.data();
  std::memcpy(&hd.version, p + 4, 4);
  std::memcpy(&hd.d, p + 8, 4);
  std::memcpy(&hd.rank, p + 12, 4);
  std::memcpy(hd.shape.data(), p + 16, 32);
  std::memcpy(&hd.dtype, p + 48, 4);
  std::memcpy(&hd.level, p + 52, 4);
  if (hd.version != kKernelFormatVersion) throw Error("kernel file: unsupported version");
  if (hd.dtype != 1) throw Error("kernel file: unsupported dtype");
  if (hd.rank < 1 || hd.rank > 8) throw Error("kernel file: bad rank");
  const std::size_t n = hd.count();
  if (buf.size() != 64 + n * sizeof(double)) throw Error("kernel file: size does not match header");
  std::vector<double> data(n);
  std::memcpy(data.data(), p + 64, n * sizeof(double));
  if (out_header) *out_header = hd;
  return data;
}

}  // namespace polygas
