#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "umr/error.hpp"

namespace umr {

/// Raw L2 norm at or below this value is treated as the zero vector.
inline constexpr double kZeroNormThreshold = 1e-12;

/// Rows of a matrix flagged normalized must have norm within this of 1.
inline constexpr double kUnitNormTolerance = 1e-4;

/// Dot product with eight fixed accumulation lanes. The reduction order is
/// part of the contract: search, rank_of and the similarity stream all go
/// through this function so equal inputs give bit-equal scores.
inline float dot_f32(const float* a, const float* b, std::size_t n) noexcept {
  float acc[8] = {0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (std::size_t l = 0; i < n; ++i, ++l) acc[l] += a[i] * b[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

/// Same lane structure as dot_f32 but accumulating in double.
inline double dot_f64(const float* a, const float* b, std::size_t n) noexcept {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      acc[l] += static_cast<double>(a[i + l]) * static_cast<double>(b[i + l]);
    }
  }
  for (std::size_t l = 0; i < n; ++i, ++l) {
    acc[l] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

template <typename T>
double l2_norm(std::span<const T> v) noexcept {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

/// Unit-length copy of v. Throws Errc::kZeroVector when ||v|| <= 1e-12 and
/// Errc::kNonFinite on NaN/Inf input.
template <typename T>
std::vector<T> l2_normalize(std::span<const T> v) {
  for (T x : v) {
    if (!std::isfinite(static_cast<double>(x))) throw Error(Errc::kNonFinite, "l2_normalize: non-finite entry");
  }
  const double norm = l2_norm(v);
  if (norm <= kZeroNormThreshold) throw Error(Errc::kZeroVector, "l2_normalize: vector norm <= 1e-12");
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<T>(static_cast<double>(v[i]) / norm);
  return out;
}

inline std::vector<float> l2_normalize(const std::vector<float>& v) {
  return l2_normalize(std::span<const float>(v));
}
inline std::vector<double> l2_normalize(const std::vector<double>& v) {
  return l2_normalize(std::span<const double>(v));
}

/// Cosine similarity computed in double precision.
template <typename T>
double cosine(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::kDimensionMismatch,
                "cosine: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ab += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na <= kZeroNormThreshold || nb <= kZeroNormThreshold) {
    throw Error(Errc::kZeroVector, "cosine: zero vector");
  }
  return ab / (na * nb);
}

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  return cosine(std::span<const float>(a), std::span<const float>(b));
}
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return cosine(std::span<const double>(a), std::span<const double>(b));
}

/// Immutable row-major float matrix with per-row record ids.
///
/// Ids are either implicit (row index, ordered numerically) or explicit
/// strings (ordered lexicographically). The id order is what search uses to
/// break score ties.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  enum class NormCheck { kEveryRow, kSkip };

  /// Validates dim > 0, data.size() == count * dim, finite entries, unique
  /// ids, and unit rows when `normalized` is set (unless the caller has
  /// already checked them and passes NormCheck::kSkip).
  EmbeddingMatrix(std::size_t dim, std::vector<float> data,
                  std::optional<std::vector<std::string>> ids = std::nullopt,
                  bool normalized = false, NormCheck check = NormCheck::kEveryRow);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return count() == 0; }
  bool normalized() const noexcept { return normalized_; }
  bool has_string_ids() const noexcept { return ids_.has_value(); }

  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const noexcept { return data_; }

  std::string id(std::size_t i) const;
  const std::optional<std::vector<std::string>>& ids() const noexcept { return ids_; }

  /// Row index of `id`, if present.
  std::optional<std::size_t> find(std::string_view id) const;

  /// Position of row i in ascending id order.
  std::size_t id_rank(std::size_t i) const noexcept { return ids_ ? id_rank_[i] : i; }

  /// Copy with every row scaled to unit norm. Throws kZeroVector naming the row.
  EmbeddingMatrix normalized_copy() const;

  /// Bitwise equality of dim, data bits, ids and the normalized flag.
  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::optional<std::vector<std::string>> ids_;
  std::vector<std::size_t> id_rank_;
  std::unordered_map<std::string, std::size_t> index_;
  bool normalized_ = false;
};

/// Scores (query row, candidate row) pairs as cosine similarity. Matrices
/// flagged normalized skip the norm division. Single-precision accumulation
/// is the bulk-search default; double accumulation serves loss and metric
/// paths.
class PairScorer {
 public:
  PairScorer(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
             bool accumulate_double);

  float operator()(std::size_t q, std::size_t c) const noexcept {
    const float* a = queries_->row(q).data();
    const float* b = candidates_->row(c).data();
    const std::size_t d = queries_->dim();
    if (accumulate_double_) {
      double s = dot_f64(a, b, d);
      if (!q_inv_.empty()) s *= q_inv_[q];
      if (!c_inv_.empty()) s *= c_inv_[c];
      return static_cast<float>(s);
    }
    float s = dot_f32(a, b, d);
    if (!q_inv_.empty() || !c_inv_.empty()) {
      const double scale = (q_inv_.empty() ? 1.0 : q_inv_[q]) * (c_inv_.empty() ? 1.0 : c_inv_[c]);
      s = static_cast<float>(static_cast<double>(s) * scale);
    }
    return s;
  }

 private:
  const EmbeddingMatrix* queries_;
  const EmbeddingMatrix* candidates_;
  bool accumulate_double_;
  std::vector<double> q_inv_;
  std::vector<double> c_inv_;
};

struct SimilarityOptions {
  bool accumulate_double = true;
  std::size_t block_rows = 1024;
  std::size_t workers = 1;
};

/// One candidate block of the query x candidate score matrix.
struct SimilarityBlock {
  std::size_t candidate_begin = 0;
  std::size_t candidate_end = 0;
  std::size_t query_count = 0;
  /// Row-major [query][candidate - candidate_begin].
  std::span<const float> scores;

  float at(std::size_t query, std::size_t candidate) const noexcept {
    return scores[query * (candidate_end - candidate_begin) + (candidate - candidate_begin)];
  }
};

/// Streams the score matrix one candidate block at a time. Blocks reach the
/// sink in ascending candidate order whatever the worker count; at most
/// `workers` blocks are resident at once.
void stream_similarity(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                       const SimilarityOptions& opts,
                       const std::function<void(const SimilarityBlock&)>& sink);

/// Dense queries.count() x candidates.count() score matrix, row-major.
std::vector<float> similarity_matrix(const EmbeddingMatrix& queries,
                                     const EmbeddingMatrix& candidates,
                                     const SimilarityOptions& opts = {});

}  // namespace umr
