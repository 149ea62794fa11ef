#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "nngp/gram.hpp"

namespace nngp {

/// Binary Gram cache, little-endian:
///   magic "NNGPGRAM" | u32 N | u32 noise_mode | u32 depth | u32 reserved
///   | f64 sigma_w2 | f64 sigma_b2 | f64 mu2 | f64 upper triangle (row-major, i <= j)
inline void save_gram(const GramMatrix& gram, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write("NNGPGRAM", 8);
  const std::uint32_t n = static_cast<std::uint32_t>(gram.n());
  const std::uint32_t mode = static_cast<std::uint32_t>(gram.params.noise.mode);
  const std::uint32_t depth = static_cast<std::uint32_t>(gram.params.depth);
  const std::uint32_t reserved = 0;
  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  put_u32(n);
  put_u32(mode);
  put_u32(depth);
  put_u32(reserved);
  put_f64(gram.params.sigma_w2);
  put_f64(gram.params.sigma_b2);
  put_f64(gram.params.noise.mu2);
  for (Eigen::Index i = 0; i < gram.n(); ++i)
    for (Eigen::Index j = i; j < gram.n(); ++j) put_f64(gram.values(i, j));
  if (!out) throw std::runtime_error("write failure on " + path);
}

inline GramMatrix load_gram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "NNGPGRAM", 8) != 0)
    throw std::runtime_error(path + ": bad magic, not a Gram cache");
  auto get_u32 = [&] {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_f64 = [&] {
    double v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  const std::uint32_t n = get_u32();
  const std::uint32_t mode = get_u32();
  const std::uint32_t depth = get_u32();
  get_u32();  // reserved
  GramMatrix gram;
  gram.params.sigma_w2 = get_f64();
  gram.params.sigma_b2 = get_f64();
  gram.params.noise.mu2 = get_f64();
  if (mode > 2) throw std::runtime_error(path + ": unknown noise mode");
  gram.params.noise.mode = static_cast<NoiseMode>(mode);
  gram.params.depth = static_cast<int>(depth);
  gram.values.resize(n, n);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i; j < n; ++j) {
      const double v = get_f64();
      gram.values(i, j) = v;
      gram.values(j, i) = v;
    }
  if (!in) throw std::runtime_error(path + ": truncated Gram cache");
  return gram;
}

}  // namespace nngp
