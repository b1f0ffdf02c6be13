// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace deco::detail {

inline std::uint32_t swap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
}

inline std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return swap32(v);
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  const std::uint32_t le = to_le(v);
  os.write(reinterpret_cast<const char*>(&le), sizeof le);
}

inline std::uint32_t read_u32(const unsigned char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, sizeof v);
  return to_le(v);
}

inline void write_f32(std::ostream& os, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float f : values) write_u32(os, std::bit_cast<std::uint32_t>(f));
  }
}

inline void read_f32(std::istream& is, std::span<float> out) {
  is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()));
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : out) f = std::bit_cast<float>(swap32(std::bit_cast<std::uint32_t>(f)));
  }
}

}  // namespace deco::detail
