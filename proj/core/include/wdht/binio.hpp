#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "wdht/errors.hpp"

namespace wdht::binio {

// All on-disk integers and floats are little-endian regardless of host; bytes
// are composed and decomposed explicitly instead of memcpy'ing host memory.

inline void write_u32(std::ostream& out, uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

inline void write_u64(std::ostream& out, uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline void write_f32(std::ostream& out, float v) {
  write_u32(out, std::bit_cast<uint32_t>(v));
}

inline void read_exact(std::istream& in, unsigned char* buf, size_t n,
                       const std::string& what) {
  const auto offset = in.tellg();
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw DataError("truncated file while reading " + what + " at byte offset " +
                    std::to_string(static_cast<long long>(offset)));
  }
}

inline uint32_t read_u32(std::istream& in, const std::string& what) {
  unsigned char bytes[4];
  read_exact(in, bytes, 4, what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[i]) << (8 * i);
  return v;
}

inline uint64_t read_u64(std::istream& in, const std::string& what) {
  unsigned char bytes[8];
  read_exact(in, bytes, 8, what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

inline float read_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(read_u32(in, what));
}

inline void write_magic(std::ostream& out, const char* magic4) {
  out.write(magic4, 4);
}

inline void expect_magic(std::istream& in, const char* magic4,
                         const std::string& what) {
  unsigned char bytes[4];
  read_exact(in, bytes, 4, what + " magic");
  for (int i = 0; i < 4; ++i) {
    if (static_cast<char>(bytes[i]) != magic4[i]) {
      throw DataError("bad magic in " + what + ": expected '" +
                      std::string(magic4, 4) + "'");
    }
  }
}

}  // namespace wdht::binio
