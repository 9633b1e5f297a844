#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace umr::toy {

enum class Pooling { kLastToken, kMean };
enum class InstructionMode { kQueryOnly, kNone };

/// Disjoint token ranges stand in for input modalities; kFused items carry
/// tokens from both the text and image ranges.
enum class Modality { kText, kImage, kVisualDoc, kFused };

std::string_view pooling_name(Pooling p) noexcept;
std::string_view instruction_mode_name(InstructionMode m) noexcept;
std::string_view modality_name(Modality m) noexcept;

struct ToyItem {
  std::string id;
  std::vector<std::int32_t> tokens;
  Modality modality = Modality::kText;
  /// Task instruction; only ever read on the query side.
  std::vector<std::int32_t> instruction;
  int cluster = -1;
};

/// Hashed-feature linear encoder.
///
/// Each token hashes to one signed feature. A causal running state
/// h_t = decay * h_{t-1} + phi(x_t) plays the role of the per-position
/// hidden state; pooling takes either the final state or the mean over
/// positions, and the pooled features are projected by a trainable F x d
/// matrix and L2-normalized.
struct ToyEncoderParams {
  std::size_t feature_dim = 0;
  std::size_t embed_dim = 0;
  /// Row-major feature_dim x embed_dim.
  std::vector<double> projection;
  Pooling pooling = Pooling::kLastToken;
  InstructionMode instruction_mode = InstructionMode::kQueryOnly;
  std::uint64_t hash_seed = 0;
  double context_decay = 0.8;

  /// Gaussian N(0, scale^2) projection from `init_seed`.
  static ToyEncoderParams random(std::size_t feature_dim, std::size_t embed_dim, std::uint64_t hash_seed,
                                 std::uint64_t init_seed, double scale = 1.0);

  /// Throws kInvalidConfig.
  void validate() const;

  bool operator==(const ToyEncoderParams&) const = default;
};

/// Sparse pooled feature vector, sorted by feature index.
using SparseFeatures = std::vector<std::pair<std::size_t, double>>;

/// Signed hashed feature of one token.
std::pair<std::size_t, double> token_feature(const ToyEncoderParams& params, std::int32_t token);

/// Token sequence the encoder actually sees: the instruction is prepended
/// only for queries under InstructionMode::kQueryOnly.
std::vector<std::int32_t> encoder_input(const ToyEncoderParams& params, const ToyItem& item, bool is_query);

SparseFeatures pooled_features(const ToyEncoderParams& params, const ToyItem& item, bool is_query);

struct Encoding {
  SparseFeatures features;
  /// features^T * projection, before normalization.
  std::vector<double> raw;
  std::vector<double> unit;
};

/// Throws kInvalidConfig on an empty item and kZeroVector when the
/// projection annihilates the pooled features.
Encoding encode_detailed(const ToyEncoderParams& params, const ToyItem& item, bool is_query);

inline std::vector<double> encode(const ToyEncoderParams& params, const ToyItem& item, bool is_query) {
  return encode_detailed(params, item, is_query).unit;
}

}  // namespace umr::toy
