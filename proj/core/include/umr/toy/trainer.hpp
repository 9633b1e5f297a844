#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "umr/dataflow.hpp"
#include "umr/embedding.hpp"
#include "umr/infonce.hpp"
#include "umr/mining.hpp"
#include "umr/rng.hpp"
#include "umr/toy/encoder.hpp"
#include "umr/toy/synthetic.hpp"

namespace umr::toy {

struct EncoderConfig {
  std::size_t feature_dim = 16384;
  std::size_t embed_dim = 16;
  Pooling pooling = Pooling::kLastToken;
  InstructionMode instruction_mode = InstructionMode::kQueryOnly;
  double context_decay = 0.8;
  std::uint64_t hash_seed = 11;
  std::uint64_t init_seed = 7;
  double init_scale = 0.1;

  ToyEncoderParams make() const;
};

struct TrainSettings {
  LossConfig loss;
  double learning_rate = 0.5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 7;
};

/// One query with its positive and negatives, pointing into a corpus.
struct ToyInstance {
  const ToyItem* query = nullptr;
  const ToyItem* positive = nullptr;
  std::vector<const ToyItem*> negatives;
};

/// Gradient rows of the projection touched by a batch.
using SparseRows = std::map<std::size_t, std::vector<double>>;

struct ToyBatchGradient {
  double mean_loss = 0.0;
  SparseRows grad_projection;
};

/// Mean InfoNCE of the batch and its gradient with respect to the
/// projection, chained from batched_infonce through the encoder.
ToyBatchGradient batch_gradient(const ToyEncoderParams& params, std::span<const ToyInstance> batch,
                                const LossConfig& loss);

/// Forward-only mean loss (encode then infonce_forward per instance).
double batch_loss(const ToyEncoderParams& params, std::span<const ToyInstance> batch, const LossConfig& loss);

struct TrainingSource {
  std::string name;
  const SyntheticCorpus* corpus = nullptr;
};

struct PoolEntry {
  std::size_t source = 0;
  std::size_t query = 0;
};

/// Plain SGD on the projection. Each step samples batch_size pool entries
/// with replacement, one positive per query from its relevant set and
/// negatives_per_query negatives: the query's mined hard negatives when
/// present, uniform non-relevant candidates otherwise. All randomness comes
/// from one stream, so stopping and continuing is the same as one long run.
class Trainer {
 public:
  Trainer(ToyEncoderParams init, std::vector<TrainingSource> sources, std::vector<PoolEntry> pool,
          TrainSettings settings);

  /// One SGD step; returns the batch loss before the update. Throws
  /// kDivergenceDetected when the loss or an updated weight is not
  /// finite.
  double step();
  void run(std::size_t steps);

  /// Candidate indices used as negatives for one source's queries.
  void set_hard_negatives(std::size_t source, std::vector<std::vector<std::size_t>> per_query);
  void clear_hard_negatives();

  const ToyEncoderParams& params() const noexcept { return params_; }
  const std::vector<double>& loss_trace() const noexcept { return trace_; }
  std::size_t steps_done() const noexcept { return trace_.size(); }

  /// Deterministic instances drawn with an independent stream, used to
  /// compare loss across checkpoints.
  std::vector<ToyInstance> probe_instances(std::size_t count, std::uint64_t seed) const;

 private:
  struct SourceIndex {
    std::vector<std::vector<std::size_t>> relevant;       // per query, sorted
    std::vector<std::vector<std::size_t>> hard_negatives;  // per query, may be empty
  };

  ToyInstance draw(const PoolEntry& e, Rng& rng, bool use_hard) const;

  ToyEncoderParams params_;
  std::vector<TrainingSource> sources_;
  std::vector<SourceIndex> index_;
  std::vector<PoolEntry> pool_;
  TrainSettings settings_;
  Rng rng_;
  std::vector<double> trace_;
};

/// Pool holding every query of `source` once.
std::vector<PoolEntry> full_pool(std::size_t source, const SyntheticCorpus& corpus);

/// Unit embeddings of a corpus as float matrices (queries with instruction
/// handling, candidates without).
std::pair<EmbeddingMatrix, EmbeddingMatrix> embed_corpus(const ToyEncoderParams& params,
                                                         const SyntheticCorpus& corpus);

/// Recall@k of the encoder on a corpus, via exact search.
double evaluate_recall(const ToyEncoderParams& params, const SyntheticCorpus& corpus, std::size_t k = 5);

// ---------------------------------------------------------------------------
// Two-stage recipe

struct TwoStageConfig {
  SyntheticSpec data;
  std::size_t eval_queries_per_cluster = 4;
  std::size_t eval_candidates_per_cluster = 4;
  std::uint64_t eval_sample_seed = 1001;
  EncoderConfig encoder;
  TrainSettings train;
  std::size_t stage1_steps = 200;
  std::size_t stage2_steps = 200;
  /// false continues stage 2 on random negatives.
  bool hard_negatives = true;
  MiningConfig mining;
  std::size_t eval_k = 5;
  std::size_t probe_instances = 64;
};

struct TwoStageResult {
  ToyEncoderParams initial;
  ToyEncoderParams stage1;
  ToyEncoderParams stage2;
  MiningResult mined;
  std::vector<double> stage1_trace;
  std::vector<double> stage2_trace;
  double recall_untrained = 0.0;
  double recall_stage1 = 0.0;
  double recall_stage2 = 0.0;
  double probe_loss_initial = 0.0;
  double probe_loss_stage1 = 0.0;
  double probe_loss_stage2 = 0.0;
  double train_centroid_accuracy = 0.0;
  SyntheticCorpus train_corpus;
  SyntheticCorpus eval_corpus;
};

/// Stage 1 on random negatives, mining on stage-1 embeddings of the
/// training split, stage 2 continued from stage 1 on the mined negatives,
/// Recall@k on a held-out split at each checkpoint.
TwoStageResult two_stage(const TwoStageConfig& cfg);

// ---------------------------------------------------------------------------
// Data-composition study

struct MixStudyConfig {
  SyntheticSpec base;
  std::vector<Category> sources = {Category::kTextToText, Category::kImageToImage, Category::kTextToImage,
                                   Category::kTextToVisualDoc, Category::kFusedToFused};
  std::size_t eval_queries_per_cluster = 4;
  std::size_t eval_candidates_per_cluster = 4;
  std::uint64_t eval_sample_seed = 1001;
  EncoderConfig encoder;
  TrainSettings train;
  std::size_t steps = 300;
  std::size_t eval_k = 5;
};

struct MixStudyResult {
  /// One per source followed by "mixed".
  std::vector<std::string> models;
  std::vector<Category> tasks;
  /// [model][task] Recall@k.
  std::vector<std::vector<double>> task_scores;
  /// [model][group] mean over the tasks of each modality group.
  std::vector<std::vector<double>> group_scores;
  std::vector<ModalityGroup> groups;
  /// [model] mean over group_scores.
  std::vector<double> macro;
  MixManifest mixed_manifest;
  /// [model] trained parameters and per-step loss.
  std::vector<ToyEncoderParams> params;
  std::vector<std::vector<double>> traces;
};

/// Trains one model per single source plus one on a uniform mix of all
/// sources (same total pool size and steps), and scores every model on the
/// held-out split of every source.
MixStudyResult mix_study(const MixStudyConfig& cfg);

}  // namespace umr::toy
