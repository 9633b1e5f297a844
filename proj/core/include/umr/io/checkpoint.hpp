#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "umr/toy/encoder.hpp"

namespace umr::io {

// Binary checkpoint, little-endian: magic "UMRC", u16 version (1),
// u8 pooling, u8 instruction mode, u32 feature_dim, u32 embed_dim,
// u64 hash seed, f64 context decay, then feature_dim * embed_dim f64.

std::string encode_checkpoint(const toy::ToyEncoderParams& p);

/// Throws kTruncatedFile, kBadMagic, kVersionUnsupported, kMalformedContainer.
toy::ToyEncoderParams decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const toy::ToyEncoderParams& p);
toy::ToyEncoderParams read_checkpoint(const std::filesystem::path& path);

}  // namespace umr::io
