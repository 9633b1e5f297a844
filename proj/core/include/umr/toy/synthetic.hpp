#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "umr/metrics.hpp"
#include "umr/taxonomy.hpp"
#include "umr/toy/encoder.hpp"

namespace umr::toy {

/// Token layout: each modality owns `vocab_per_modality` ids starting at
/// modality_index * vocab_per_modality; instruction tokens follow the last
/// modality range.
struct SyntheticSpec {
  std::size_t clusters = 32;
  std::size_t queries_per_cluster = 10;
  std::size_t candidates_per_cluster = 10;
  Modality query_modality = Modality::kText;
  Modality candidate_modality = Modality::kImage;
  std::size_t vocab_per_modality = 4096;
  std::size_t topic_tokens = 6;
  std::size_t sequence_length = 8;
  /// Probability that a position holds a random in-modality token instead
  /// of one of the cluster's topic tokens.
  double noise = 0.5;
  std::size_t instruction_length = 3;
  /// Relevance namespace: clusters of different namespaces use unrelated
  /// topic tokens even inside the same modality.
  std::string topic_namespace = "default";
  /// Fixes the cluster topics; shared by the train and held-out splits.
  std::uint64_t world_seed = 1;
  /// Fixes the sampled items.
  std::uint64_t sample_seed = 1;
  std::string id_prefix;

  /// Throws kInvalidSpec.
  void validate() const;
};

struct SyntheticCorpus {
  std::vector<ToyItem> queries;
  std::vector<ToyItem> candidates;
  /// Every query is relevant (grade 1) to every candidate of its cluster.
  Qrels qrels;
  /// Nearest-centroid cluster recovery on bag-of-token features, computed
  /// at generation time as a separability check.
  double centroid_accuracy = 0.0;
};

std::int32_t modality_base(Modality m, std::size_t vocab_per_modality);

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Cluster recovery rate of a nearest-centroid classifier over raw token
/// counts, computed separately for the query side and the candidate side.
double nearest_centroid_accuracy(const SyntheticCorpus& corpus);

/// The five training-source types and the SyntheticSpec used for each in the toy
/// data-composition study.
SyntheticSpec source_spec(Category category, const SyntheticSpec& base);

/// Category of a (query, candidate) modality pair, if it is one of the nine.
std::optional<Category> category_for(Modality query, Modality candidate);

}  // namespace umr::toy
