#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "umr/search.hpp"
#include "umr/taxonomy.hpp"

namespace umr {

using GradeMap = std::map<std::string, int, std::less<>>;

/// Graded relevance judgments: query id -> candidate id -> grade >= 0.
class Qrels {
 public:
  /// Throws kInvalidConfig on a negative grade and kDuplicateId when the
  /// (query, candidate) pair is already judged.
  void add(std::string query_id, std::string candidate_id, int grade);

  /// Judgments for one query, or nullptr.
  const GradeMap* find(std::string_view query_id) const;

  /// Candidates with grade > 0 for one query.
  std::vector<std::string> positives(std::string_view query_id) const;

  bool has_any_positive() const;
  std::size_t query_count() const noexcept { return judged_.size(); }
  const std::map<std::string, GradeMap, std::less<>>& queries() const noexcept { return judged_; }

 private:
  std::map<std::string, GradeMap, std::less<>> judged_;
};

enum class MetricKind { kNdcg, kRecall };

struct MetricSpec {
  MetricKind kind = MetricKind::kRecall;
  std::size_t cutoff = 5;

  /// "ndcg@10", "recall@5".
  std::string label() const;
  /// Inverse of label(); nullopt on malformed text.
  static std::optional<MetricSpec> parse(std::string_view text);
  bool operator==(const MetricSpec&) const = default;
};

/// Metric used when a task carries no override: NDCG@10 for T->T, NDCG@5
/// for T->VD, Recall@10 for datasets flagged recall10, Recall@5 otherwise.
MetricSpec default_metric(Category category, bool recall10);

/// DCG@k / IDCG@k with gain = grade and discount 1/log2(position + 1).
/// Unjudged ids count as grade 0; 0 when no judged grade is positive.
double ndcg_at_k(std::span<const std::string> ranking, const GradeMap& judged, std::size_t k);

/// Fraction of positives found in the top k. Throws kNoPositives.
double recall_at_k(std::span<const std::string> ranking, const GradeMap& judged, std::size_t k);

double metric_at_k(const MetricSpec& spec, std::span<const std::string> ranking, const GradeMap& judged);

struct DatasetEvaluation {
  double score = 0.0;
  std::size_t judged_queries = 0;
  /// Result queries missing from qrels or without any positive judgment.
  std::size_t skipped_queries = 0;
};

/// Mean per-query metric over judged queries. Throws kNoJudgedQueries.
DatasetEvaluation evaluate_dataset(std::span<const TopKResult> results, const Qrels& qrels,
                                   const MetricSpec& spec);

struct DatasetScore {
  std::string name;
  Category category;
  double score = 0.0;
};

struct AggregateReport {
  /// Sorted by (name, category).
  std::vector<DatasetScore> per_dataset;
  /// Mean over member datasets, categories with no dataset omitted.
  std::map<Category, double> per_category;
  /// Unweighted mean over datasets.
  double micro_average = 0.0;
};

/// Throws kEmptyInput, and kInvalidConfig for scores outside [0, 1] or a
/// repeated (name, category) pair.
AggregateReport aggregate(std::span<const DatasetScore> scores);

}  // namespace umr
