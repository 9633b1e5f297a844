#include "umr/io/container.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "umr/error.hpp"
#include "umr/io/binary.hpp"

namespace umr::io {

ContainerHeader parse_container_header(std::string_view bytes) {
  if (bytes.size() < sizeof kContainerMagic) {
    throw Error(Errc::kTruncatedFile, "container shorter than its magic (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kContainerMagic, sizeof kContainerMagic) != 0) {
    throw Error(Errc::kBadMagic, "container does not start with UMRE");
  }
  if (bytes.size() < kContainerHeaderSize) {
    throw Error(Errc::kTruncatedFile, "container header needs " + std::to_string(kContainerHeaderSize) +
                                          " bytes, got " + std::to_string(bytes.size()));
  }
  const char* p = bytes.data();
  ContainerHeader h;
  h.version = get_le<std::uint16_t>(p + 4);
  if (h.version != kContainerVersion) {
    throw Error(Errc::kVersionUnsupported, "container version " + std::to_string(h.version));
  }
  h.flags = get_le<std::uint16_t>(p + 6);
  h.dim = get_le<std::uint32_t>(p + 8);
  h.count = get_le<std::uint64_t>(p + 12);
  h.dtype = static_cast<std::uint8_t>(p[20]);
  if ((h.flags & ~(kFlagNormalized | kFlagStringIds)) != 0) {
    throw Error(Errc::kMalformedContainer, "unknown flag bits " + std::to_string(h.flags));
  }
  if (h.dtype != 0) throw Error(Errc::kMalformedContainer, "unsupported dtype " + std::to_string(h.dtype));
  for (std::size_t i = 21; i < kContainerHeaderSize; ++i) {
    if (p[i] != 0) throw Error(Errc::kMalformedContainer, "reserved header bytes are not zero");
  }
  if (h.dim == 0) throw Error(Errc::kMalformedContainer, "dim is zero");
  return h;
}

std::string encode_container(const EmbeddingMatrix& m) {
  if (m.dim() == 0) throw Error(Errc::kInvalidConfig, "cannot encode a matrix without dimension");
  if (m.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::kInvalidConfig, "dim does not fit the container header");
  }
  std::string out;
  out.reserve(kContainerHeaderSize + m.data().size() * sizeof(float));
  out.append(kContainerMagic, sizeof kContainerMagic);
  put_le<std::uint16_t>(out, kContainerVersion);
  std::uint16_t flags = 0;
  if (m.normalized()) flags |= kFlagNormalized;
  if (m.has_string_ids()) flags |= kFlagStringIds;
  put_le<std::uint16_t>(out, flags);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  put_le<std::uint64_t>(out, m.count());
  out.push_back(0);  // dtype
  out.append(7, '\0');
  for (float v : m.data()) put_le<float>(out, v);
  if (m.has_string_ids()) {
    for (const auto& id : *m.ids()) {
      if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw Error(Errc::kInvalidConfig, "id longer than 65535 bytes");
      }
      put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
      out.append(id);
    }
  }
  return out;
}

EmbeddingMatrix decode_container(std::string_view bytes) {
  const ContainerHeader h = parse_container_header(bytes);
  const std::size_t available = bytes.size() - kContainerHeaderSize;
  const std::uint64_t max_rows = available / sizeof(float) / h.dim;
  if (h.count > max_rows) {
    throw Error(Errc::kTruncatedFile, "body needs " + std::to_string(h.count) + " rows of dim " +
                                          std::to_string(h.dim) + ", file holds " + std::to_string(available) +
                                          " bytes after the header");
  }
  const std::size_t n = static_cast<std::size_t>(h.count) * h.dim;
  std::vector<float> data(n);
  const char* p = bytes.data() + kContainerHeaderSize;
  for (std::size_t i = 0; i < n; ++i, p += sizeof(float)) {
    data[i] = get_le<float>(p);
    if (!std::isfinite(data[i])) {
      throw Error(Errc::kMalformedContainer, "non-finite value in row " + std::to_string(i / h.dim));
    }
  }
  const char* end = bytes.data() + bytes.size();

  std::optional<std::vector<std::string>> ids;
  if (h.flags & kFlagStringIds) {
    ids.emplace();
    ids->reserve(static_cast<std::size_t>(h.count));
    for (std::uint64_t r = 0; r < h.count; ++r) {
      if (end - p < 2) throw Error(Errc::kTruncatedFile, "id trailer ends before row " + std::to_string(r));
      const auto len = get_le<std::uint16_t>(p);
      p += 2;
      if (end - p < len) throw Error(Errc::kTruncatedFile, "id of row " + std::to_string(r) + " is cut short");
      std::string id(p, len);
      p += len;
      if (!valid_utf8(id)) throw Error(Errc::kMalformedContainer, "id of row " + std::to_string(r) + " is not UTF-8");
      ids->push_back(std::move(id));
    }
  }
  if (p != end) {
    throw Error(Errc::kMalformedContainer, std::to_string(end - p) + " unexpected trailing bytes");
  }

  const bool normalized = (h.flags & kFlagNormalized) != 0;
  if (normalized) {
    for (std::size_t r = 0; r < h.count; r += kNormSampleStride) {
      const double norm = l2_norm(std::span<const float>(data.data() + r * h.dim, h.dim));
      if (std::abs(norm - 1.0) > kNormSampleTolerance) {
        throw Error(Errc::kMalformedContainer,
                    "row " + std::to_string(r) + " flagged normalized has norm " + std::to_string(norm));
      }
    }
  }
  try {
    return EmbeddingMatrix(h.dim, std::move(data), std::move(ids), normalized, EmbeddingMatrix::NormCheck::kSkip);
  } catch (const Error& e) {
    throw Error(Errc::kMalformedContainer, e.detail());
  }
}

void write_container(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  write_file(path, encode_container(m));
}

EmbeddingMatrix read_container(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_container(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace umr::io
