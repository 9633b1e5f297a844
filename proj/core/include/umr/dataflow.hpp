#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "umr/embedding.hpp"
#include "umr/taxonomy.hpp"

namespace umr {

// ---------------------------------------------------------------------------
// Training-source mixing

struct SourceSpec {
  std::string name;
  Category category = Category::kTextToText;
  std::size_t available = 0;
  /// Relative share of whatever `total` is left after fixed quotas.
  double weight = 1.0;
  /// Fixed record count; overrides weight.
  std::optional<std::size_t> quota;
};

struct MixEntry {
  std::string source;
  std::size_t record_index = 0;
  bool operator==(const MixEntry&) const = default;
};

struct MixManifest {
  /// Shuffled by seed.
  std::vector<MixEntry> entries;
  /// Final count drawn from each source, keyed by source name.
  std::map<std::string, std::size_t> per_source;
};

/// Stratified sample of `total` records. Fixed quotas are honoured exactly,
/// the remainder is split by weight with largest-remainder rounding (ties
/// go to the earlier source). Records inside a source are drawn without
/// replacement. Throws kQuotaExceedsSource and kInvalidConfig.
MixManifest mix(const std::vector<SourceSpec>& sources, std::size_t total, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthesized-record filters

enum class ImageSource { kGenerated, kRetrieved };

struct SynthRecord {
  std::string record_id;
  std::string query_text;
  std::string rewritten_query_text;
  std::string entity;
  std::string passage_id;
  ImageSource image_source = ImageSource::kGenerated;
  std::string image_caption;
  std::optional<double> relevance_score;
  std::optional<std::string> domain_label;
  std::optional<double> domain_confidence;
  bool operator==(const SynthRecord&) const = default;
};

enum class DiscardReason {
  kRankBeyondTopN,
  kLowRelevanceScore,
  kMissingRelevanceScore,
  kLowDomainConfidence,
  kMissingDomainLabel,
  kDomainQuota,
};

std::string_view discard_reason_name(DiscardReason r) noexcept;

struct Discarded {
  SynthRecord record;
  DiscardReason reason;
  std::string detail;
};

/// kept and discarded partition the input; both are ordered by record_id.
struct FilterResult {
  std::vector<SynthRecord> kept;
  std::vector<Discarded> discarded;
};

/// Record -> (query embedding id, source passage id). The default maps a
/// record to (record_id, passage_id).
using QueryPassageMap = std::function<std::pair<std::string, std::string>(const SynthRecord&)>;

inline constexpr std::size_t kDefaultRankTopN = 20;
inline constexpr double kDefaultScoreThreshold = 0.2;
inline constexpr double kDefaultMinDomainConfidence = 0.5;

/// Keeps a record iff its source passage ranks within top_n when the
/// record's query searches the passage pool. Throws kUnknownId.
FilterResult rank_filter(const std::vector<SynthRecord>& records, const EmbeddingMatrix& queries,
                         const EmbeddingMatrix& passages, std::size_t top_n = kDefaultRankTopN,
                         const QueryPassageMap& qmap = {}, std::size_t workers = 1);

/// Drops retrieved images scoring strictly below threshold or lacking a
/// score. Generated images are always kept.
FilterResult score_filter(const std::vector<SynthRecord>& records, double threshold = kDefaultScoreThreshold);

struct DomainBalanceResult {
  FilterResult result;
  /// Domains holding fewer confident records than the quota.
  std::vector<std::string> clamped_domains;
};

/// Drops records with confidence <= min_confidence (or no label), then
/// samples per_domain_quota records uniformly from each surviving domain.
DomainBalanceResult domain_balance(const std::vector<SynthRecord>& records, std::size_t per_domain_quota,
                                   std::uint64_t seed, double min_confidence = kDefaultMinDomainConfidence);

struct StageReport {
  std::string stage;
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t discarded = 0;
  /// discarded / input of this stage
  double stage_fraction = 0.0;
  /// discarded / input of the whole pipeline
  double absolute_fraction = 0.0;
  std::map<std::string, std::size_t> reasons;
};

struct PipelineReport {
  std::size_t total_input = 0;
  std::size_t total_kept = 0;
  double overall_discard_fraction = 0.0;
  std::vector<StageReport> stages;
};

struct PipelineConfig {
  /// rank_filter runs only when both matrices are supplied.
  const EmbeddingMatrix* queries = nullptr;
  const EmbeddingMatrix* passages = nullptr;
  std::size_t top_n = kDefaultRankTopN;
  double score_threshold = kDefaultScoreThreshold;
  /// domain_balance runs only when a quota is set.
  std::optional<std::size_t> domain_quota;
  double min_domain_confidence = kDefaultMinDomainConfidence;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct PipelineOutput {
  FilterResult result;
  PipelineReport report;
  std::vector<std::string> clamped_domains;
};

/// rank_filter -> score_filter -> domain_balance with per-stage bookkeeping.
PipelineOutput run_filter_pipeline(const std::vector<SynthRecord>& records, const PipelineConfig& cfg);

}  // namespace umr
