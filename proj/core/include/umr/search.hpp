#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "umr/embedding.hpp"

namespace umr {

struct Hit {
  std::string candidate_id;
  float score = 0.f;
  std::size_t candidate_index = 0;
};

/// Hits sorted by score descending, ties by ascending candidate id.
struct TopKResult {
  std::string query_id;
  std::vector<Hit> hits;
};

struct SearchOptions {
  std::size_t workers = 1;
  std::size_t block_rows = 1024;
  /// Bulk search scores in single precision; set for loss/metric parity.
  bool accumulate_double = false;
};

/// Exact top-k by cosine for every query. `exclude`, when non-empty, holds
/// one list of candidate ids per query that must not be returned; ids absent
/// from the pool are ignored. Output does not depend on worker count or
/// block size.
///
/// Throws kDimensionMismatch, kEmptyPool, kInvalidConfig (k == 0).
std::vector<TopKResult> topk(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                             std::size_t k, std::span<const std::vector<std::string>> exclude = {},
                             const SearchOptions& opts = {});

/// 1-based rank of `target_candidate_id` for `query_id` under the topk
/// ordering. Throws kUnknownId.
std::size_t rank_of(std::string_view query_id, std::string_view target_candidate_id,
                    const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                    const SearchOptions& opts = {});

/// Same as rank_of with row indices instead of ids.
std::size_t rank_of_index(std::size_t query_index, std::size_t candidate_index,
                          const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                          const SearchOptions& opts = {});

}  // namespace umr
