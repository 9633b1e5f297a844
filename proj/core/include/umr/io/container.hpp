#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "umr/embedding.hpp"

namespace umr::io {

// Layout (all little-endian):
//   0  magic "UMRE"        4 bytes
//   4  version             u16 (= 1)
//   6  flags               u16 (bit0 normalized, bit1 string-id trailer)
//   8  dim                 u32
//  12  count               u64
//  20  dtype               u8 (0 = float32)
//  21  reserved            7 zero bytes
//  28  body                count * dim float32, row-major
//      trailer (bit1)      per row: u16 byte length + UTF-8 id

inline constexpr char kContainerMagic[4] = {'U', 'M', 'R', 'E'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderSize = 28;
inline constexpr std::uint16_t kFlagNormalized = 1u << 0;
inline constexpr std::uint16_t kFlagStringIds = 1u << 1;

/// Normalized-flag rows are spot checked every this many rows.
inline constexpr std::size_t kNormSampleStride = 100;
inline constexpr double kNormSampleTolerance = 1e-3;

struct ContainerHeader {
  std::uint16_t version = kContainerVersion;
  std::uint16_t flags = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  std::uint8_t dtype = 0;
};

/// Parses and checks the fixed header. Throws kTruncatedFile, kBadMagic,
/// kVersionUnsupported, kMalformedContainer.
ContainerHeader parse_container_header(std::string_view bytes);

std::string encode_container(const EmbeddingMatrix& m);

/// Inverse of encode_container. Besides the header errors it throws
/// kTruncatedFile for a short body or trailer and kMalformedContainer for
/// trailing bytes, bad ids, non-finite values or rows that fail the
/// normalized spot check.
EmbeddingMatrix decode_container(std::string_view bytes);

void write_container(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_container(const std::filesystem::path& path);

}  // namespace umr::io
