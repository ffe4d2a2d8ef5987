#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <type_traits>

namespace gliomaseg::io {

namespace detail {
template <std::size_t N>
struct UintOfSize;
template <> struct UintOfSize<1> { using type = std::uint8_t; };
template <> struct UintOfSize<2> { using type = std::uint16_t; };
template <> struct UintOfSize<4> { using type = std::uint32_t; };
template <> struct UintOfSize<8> { using type = std::uint64_t; };
}  // namespace detail

/// Reads a little-endian scalar from an unaligned byte pointer.
template <typename T>
T load_le(const std::uint8_t* p) {
  static_assert(std::is_trivially_copyable_v<T>);
  using U = typename detail::UintOfSize<sizeof(T)>::type;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return std::bit_cast<T>(u);
}

template <typename T>
void store_le(std::uint8_t* p, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  using U = typename detail::UintOfSize<sizeof(T)>::type;
  const U u = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>((u >> (8 * i)) & 0xFFu);
}

}  // namespace gliomaseg::io
