#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>

namespace umr::io {

/// Appends the little-endian bytes of an integer or IEEE float.
template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

/// Reads a little-endian value at `p`; the caller guarantees sizeof(T) bytes.
template <typename T>
T get_le(const char* p) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

/// Whole file as bytes. Throws kMissingFile when absent, kIo otherwise.
std::string read_file(const std::filesystem::path& path);

/// Writes bytes, creating parent directories. Throws kIo.
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// True when `text` is well-formed UTF-8 (no overlongs or surrogates).
bool valid_utf8(std::string_view text) noexcept;

}  // namespace umr::io
