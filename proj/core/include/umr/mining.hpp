#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "umr/embedding.hpp"
#include "umr/metrics.hpp"

namespace umr {

enum class MiningMode { kRank, kSample };

struct MiningConfig {
  std::size_t retrieve_k = 100;
  std::size_t negatives_out = 8;
  /// Inclusive 1-based rank range eligible for selection.
  std::optional<std::pair<std::size_t, std::size_t>> rank_window;
  MiningMode mode = MiningMode::kRank;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  /// Throws kInvalidConfig.
  void validate() const;
};

struct MinedInstance {
  std::string query_id;
  std::string positive_id;
  std::vector<std::string> hard_negative_ids;
  /// Set when the window held fewer than negatives_out non-relevant
  /// candidates and the list was padded from deeper ranks.
  bool padded = false;
};

struct MiningResult {
  /// Ordered by query id.
  std::vector<MinedInstance> instances;
  /// Queries with no positive judgment inside the candidate pool.
  std::size_t skipped_no_positive = 0;
  /// Queries whose pool held no non-relevant candidate at all.
  std::size_t skipped_no_negative = 0;
};

/// Retrieves the top retrieve_k candidates per query, removes the query's
/// relevant candidates and keeps negatives_out of the rest (first by rank,
/// or a seeded uniform sample) from the configured rank window.
MiningResult mine(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates, const Qrels& qrels,
                  const MiningConfig& cfg);

}  // namespace umr
