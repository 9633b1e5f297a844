#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace umr {

/// Temperature and negative count default to the values used for the
/// published models (tau = 0.03, eight negatives per query).
struct LossConfig {
  double temperature = 0.03;
  std::size_t negatives_per_query = 8;
  /// When set, batched_infonce also scores each query against the positives
  /// of the other instances in the batch.
  bool share_in_batch_negatives = false;

  /// Throws Errc::kInvalidConfig.
  void validate() const;
};

/// One query with its positive and explicit negatives, all raw
/// (pre-normalization) vectors of one dimension.
struct LossBatch {
  std::vector<double> query;
  std::vector<double> positive;
  std::vector<std::vector<double>> negatives;
};

struct LossOutput {
  double loss = 0.0;
  std::vector<double> grad_query;
  std::vector<double> grad_positive;
  std::vector<std::vector<double>> grad_negatives;
};

/// -log softmax of the positive's cos/tau logit against the negatives,
/// evaluated with max-logit subtraction in double precision.
double infonce_forward(const LossBatch& batch, const LossConfig& cfg);

/// Loss plus gradients with respect to the raw input vectors, chained
/// through the L2 normalization inside cosine.
LossOutput infonce_backward(const LossBatch& batch, const LossConfig& cfg);

enum class Side { kQuery, kCandidate };

struct EmbeddingKey {
  Side side;
  std::string id;
  auto operator<=>(const EmbeddingKey&) const = default;
};

/// LossBatch annotated with the record ids its vectors came from. Vectors
/// sharing an id must be identical.
struct KeyedBatch {
  std::string query_id;
  std::string positive_id;
  std::vector<std::string> negative_ids;
  LossBatch batch;
};

struct BatchedLossOutput {
  double mean_loss = 0.0;
  std::vector<double> losses;
  /// Per record, gradient summed over instances then divided by batch size.
  std::map<EmbeddingKey, std::vector<double>> grads;
};

/// Mean InfoNCE over a mini-batch. Instances are reduced in input order so
/// the result is bit-reproducible. Throws Errc::kEmptyBatch on empty input.
BatchedLossOutput batched_infonce(std::span<const KeyedBatch> instances, const LossConfig& cfg);

}  // namespace umr
