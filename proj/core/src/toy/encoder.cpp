#include "umr/toy/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "umr/embedding.hpp"
#include "umr/error.hpp"
#include "umr/rng.hpp"

namespace umr::toy {

std::string_view pooling_name(Pooling p) noexcept {
  return p == Pooling::kLastToken ? "last_token" : "mean";
}

std::string_view instruction_mode_name(InstructionMode m) noexcept {
  return m == InstructionMode::kQueryOnly ? "query_only" : "none";
}

std::string_view modality_name(Modality m) noexcept {
  switch (m) {
    case Modality::kText: return "text";
    case Modality::kImage: return "image";
    case Modality::kVisualDoc: return "visual_doc";
    case Modality::kFused: return "fused";
  }
  return "";
}

ToyEncoderParams ToyEncoderParams::random(std::size_t feature_dim, std::size_t embed_dim, std::uint64_t hash_seed,
                                          std::uint64_t init_seed, double scale) {
  ToyEncoderParams p;
  p.feature_dim = feature_dim;
  p.embed_dim = embed_dim;
  p.hash_seed = hash_seed;
  p.projection.resize(feature_dim * embed_dim);
  Rng rng(init_seed);
  for (double& w : p.projection) w = scale * rng.normal();
  p.validate();
  return p;
}

void ToyEncoderParams::validate() const {
  if (feature_dim == 0 || embed_dim == 0) throw Error(Errc::kInvalidConfig, "encoder dims must be positive");
  if (projection.size() != feature_dim * embed_dim) {
    throw Error(Errc::kInvalidConfig, "projection size does not match feature_dim x embed_dim");
  }
  if (!(context_decay >= 0.0 && context_decay <= 1.0)) {
    throw Error(Errc::kInvalidConfig, "context_decay must lie in [0, 1]");
  }
  for (double w : projection) {
    if (!std::isfinite(w)) throw Error(Errc::kNonFinite, "projection has a non-finite entry");
  }
}

std::pair<std::size_t, double> token_feature(const ToyEncoderParams& params, std::int32_t token) {
  const std::uint64_t h = mix_seed(params.hash_seed, static_cast<std::uint64_t>(static_cast<std::uint32_t>(token)));
  return {static_cast<std::size_t>(h % params.feature_dim), (h >> 63) != 0 ? -1.0 : 1.0};
}

std::vector<std::int32_t> encoder_input(const ToyEncoderParams& params, const ToyItem& item, bool is_query) {
  std::vector<std::int32_t> seq;
  if (is_query && params.instruction_mode == InstructionMode::kQueryOnly) {
    seq.insert(seq.end(), item.instruction.begin(), item.instruction.end());
  }
  seq.insert(seq.end(), item.tokens.begin(), item.tokens.end());
  return seq;
}

SparseFeatures pooled_features(const ToyEncoderParams& params, const ToyItem& item, bool is_query) {
  if (item.tokens.empty()) throw Error(Errc::kInvalidConfig, "item '" + item.id + "' has no tokens");
  const auto seq = encoder_input(params, item, is_query);
  const std::size_t n = seq.size();
  const double decay = params.context_decay;

  // Weight of token t in the pooled state.
  //   last token: decay^(n-1-t)
  //   mean:       (1/n) * sum_{s>=t} decay^(s-t)
  std::vector<double> weight(n);
  if (params.pooling == Pooling::kLastToken) {
    double w = 1.0;
    for (std::size_t t = n; t-- > 0;) {
      weight[t] = w;
      w *= decay;
    }
  } else {
    double tail = 0.0;  // sum_{s>=t} decay^(s-t), built right to left
    for (std::size_t t = n; t-- > 0;) {
      tail = 1.0 + decay * tail;
      weight[t] = tail / static_cast<double>(n);
    }
  }

  std::map<std::size_t, double> acc;
  for (std::size_t t = 0; t < n; ++t) {
    const auto [idx, sign] = token_feature(params, seq[t]);
    acc[idx] += sign * weight[t];
  }
  SparseFeatures out;
  out.reserve(acc.size());
  for (const auto& [idx, v] : acc) {
    if (v != 0.0) out.emplace_back(idx, v);
  }
  return out;
}

Encoding encode_detailed(const ToyEncoderParams& params, const ToyItem& item, bool is_query) {
  Encoding e;
  e.features = pooled_features(params, item, is_query);
  const std::size_t d = params.embed_dim;
  e.raw.assign(d, 0.0);
  for (const auto& [idx, v] : e.features) {
    const double* row = params.projection.data() + idx * d;
    for (std::size_t j = 0; j < d; ++j) e.raw[j] += v * row[j];
  }
  const double norm = l2_norm(std::span<const double>(e.raw));
  if (norm <= kZeroNormThreshold) {
    throw Error(Errc::kZeroVector, "item '" + item.id + "' encodes to the zero vector");
  }
  e.unit.resize(d);
  for (std::size_t j = 0; j < d; ++j) e.unit[j] = e.raw[j] / norm;
  return e;
}

}  // namespace umr::toy
