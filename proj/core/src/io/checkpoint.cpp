#include "umr/io/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "umr/error.hpp"
#include "umr/io/binary.hpp"

namespace umr::io {

namespace {

constexpr char kMagic[4] = {'U', 'M', 'R', 'C'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 2 + 1 + 1 + 4 + 4 + 8 + 8;

}  // namespace

std::string encode_checkpoint(const toy::ToyEncoderParams& p) {
  p.validate();
  if (p.feature_dim > std::numeric_limits<std::uint32_t>::max() ||
      p.embed_dim > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::kInvalidConfig, "encoder dims do not fit the checkpoint header");
  }
  std::string out;
  out.reserve(kHeaderSize + p.projection.size() * sizeof(double));
  out.append(kMagic, sizeof kMagic);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.pooling));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.instruction_mode));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.feature_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.embed_dim));
  put_le<std::uint64_t>(out, p.hash_seed);
  put_le<double>(out, p.context_decay);
  for (double w : p.projection) put_le<double>(out, w);
  return out;
}

toy::ToyEncoderParams decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic) throw Error(Errc::kTruncatedFile, "checkpoint shorter than its magic");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(Errc::kBadMagic, "checkpoint does not start with UMRC");
  }
  if (bytes.size() < kHeaderSize) throw Error(Errc::kTruncatedFile, "checkpoint header is cut short");
  const char* p = bytes.data() + 4;
  if (get_le<std::uint16_t>(p) != kVersion) {
    throw Error(Errc::kVersionUnsupported, "checkpoint version " + std::to_string(get_le<std::uint16_t>(p)));
  }
  toy::ToyEncoderParams out;
  const auto pooling = get_le<std::uint8_t>(p + 2);
  const auto mode = get_le<std::uint8_t>(p + 3);
  if (pooling > 1 || mode > 1) throw Error(Errc::kMalformedContainer, "checkpoint has an unknown enum value");
  out.pooling = static_cast<toy::Pooling>(pooling);
  out.instruction_mode = static_cast<toy::InstructionMode>(mode);
  out.feature_dim = get_le<std::uint32_t>(p + 4);
  out.embed_dim = get_le<std::uint32_t>(p + 8);
  out.hash_seed = get_le<std::uint64_t>(p + 12);
  out.context_decay = get_le<double>(p + 20);
  if (out.feature_dim == 0 || out.embed_dim == 0) throw Error(Errc::kMalformedContainer, "checkpoint dims are zero");
  const std::size_t n = out.feature_dim * out.embed_dim;
  const std::size_t body = bytes.size() - kHeaderSize;
  if (body / sizeof(double) < n) throw Error(Errc::kTruncatedFile, "checkpoint body is cut short");
  if (body != n * sizeof(double)) throw Error(Errc::kMalformedContainer, "checkpoint has trailing bytes");
  out.projection.resize(n);
  const char* w = bytes.data() + kHeaderSize;
  for (std::size_t i = 0; i < n; ++i, w += sizeof(double)) out.projection[i] = get_le<double>(w);
  try {
    out.validate();
  } catch (const Error& e) {
    throw Error(Errc::kMalformedContainer, e.detail());
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const toy::ToyEncoderParams& p) {
  write_file(path, encode_checkpoint(p));
}

toy::ToyEncoderParams read_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace umr::io
