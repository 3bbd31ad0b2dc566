#pragma once

// Little-endian primitives shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "hexmem/errors.hpp"

namespace hexmem::detail {

inline void put_uint(std::ostream& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u32(std::ostream& out, std::uint32_t v) { put_uint(out, v, 4); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_uint(out, v, 8); }
inline void put_f64(std::ostream& out, double v) {
  put_uint(out, std::bit_cast<std::uint64_t>(v), 8);
}

inline std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("unexpected end of file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
inline std::uint32_t get_u32(std::istream& in) {
  return static_cast<std::uint32_t>(get_uint(in, 4));
}
inline std::uint64_t get_u64(std::istream& in) { return get_uint(in, 8); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_uint(in, 8)); }

}  // namespace hexmem::detail
