#pragma once

// Little-endian primitive encoding shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "patchselect/errors.hpp"

namespace patchselect::detail {

template <typename U>
void put_le(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes, sizeof(U));
}

template <typename U>
U get_le(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw FormatError(std::string("truncated input at ") + what);
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

inline void put_f64(std::ostream& out, double v) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in, const char* what) { return std::bit_cast<double>(get_le<std::uint64_t>(in, what)); }

}  // namespace patchselect::detail
