#include "umr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "umr/error.hpp"

namespace umr {

void Qrels::add(std::string query_id, std::string candidate_id, int grade) {
  if (grade < 0) {
    throw Error(Errc::kInvalidConfig, "negative grade for (" + query_id + ", " + candidate_id + ")");
  }
  auto& grades = judged_[std::move(query_id)];
  if (!grades.emplace(candidate_id, grade).second) {
    throw Error(Errc::kDuplicateId, "duplicate judgment for candidate '" + candidate_id + "'");
  }
}

const GradeMap* Qrels::find(std::string_view query_id) const {
  auto it = judged_.find(query_id);
  return it == judged_.end() ? nullptr : &it->second;
}

std::vector<std::string> Qrels::positives(std::string_view query_id) const {
  std::vector<std::string> out;
  if (const GradeMap* g = find(query_id)) {
    for (const auto& [id, grade] : *g) {
      if (grade > 0) out.push_back(id);
    }
  }
  return out;
}

bool Qrels::has_any_positive() const {
  for (const auto& [q, grades] : judged_) {
    for (const auto& [c, g] : grades) {
      if (g > 0) return true;
    }
  }
  return false;
}

std::string MetricSpec::label() const {
  return std::string(kind == MetricKind::kNdcg ? "ndcg" : "recall") + "@" + std::to_string(cutoff);
}

std::optional<MetricSpec> MetricSpec::parse(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) return std::nullopt;
  std::string kind(text.substr(0, at));
  std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char ch) { return std::tolower(ch); });
  MetricSpec spec;
  if (kind == "ndcg") {
    spec.kind = MetricKind::kNdcg;
  } else if (kind == "recall") {
    spec.kind = MetricKind::kRecall;
  } else {
    return std::nullopt;
  }
  const auto digits = text.substr(at + 1);
  std::size_t k = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || k == 0) return std::nullopt;
  spec.cutoff = k;
  return spec;
}

MetricSpec default_metric(Category category, bool recall10) {
  if (recall10) return {MetricKind::kRecall, 10};
  switch (category) {
    case Category::kTextToText: return {MetricKind::kNdcg, 10};
    case Category::kTextToVisualDoc: return {MetricKind::kNdcg, 5};
    default: return {MetricKind::kRecall, 5};
  }
}

namespace {

int grade_of(const GradeMap& judged, const std::string& id) {
  auto it = judged.find(id);
  return it == judged.end() ? 0 : it->second;
}

}  // namespace

double ndcg_at_k(std::span<const std::string> ranking, const GradeMap& judged, std::size_t k) {
  std::vector<int> ideal;
  for (const auto& [id, g] : judged) {
    if (g > 0) ideal.push_back(g);
  }
  if (ideal.empty() || k == 0) return 0.0;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  double dcg = 0.0;
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    if (!seen.insert(ranking[i]).second) continue;
    dcg += grade_of(judged, ranking[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double recall_at_k(std::span<const std::string> ranking, const GradeMap& judged, std::size_t k) {
  std::size_t positives = 0;
  for (const auto& [id, g] : judged) {
    if (g > 0) ++positives;
  }
  if (positives == 0) throw Error(Errc::kNoPositives, "recall_at_k: query has no positive judgment");
  std::set<std::string_view> found;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    if (grade_of(judged, ranking[i]) > 0) found.insert(ranking[i]);
  }
  return static_cast<double>(found.size()) / static_cast<double>(positives);
}

double metric_at_k(const MetricSpec& spec, std::span<const std::string> ranking, const GradeMap& judged) {
  return spec.kind == MetricKind::kNdcg ? ndcg_at_k(ranking, judged, spec.cutoff)
                                        : recall_at_k(ranking, judged, spec.cutoff);
}

DatasetEvaluation evaluate_dataset(std::span<const TopKResult> results, const Qrels& qrels,
                                   const MetricSpec& spec) {
  if (spec.cutoff == 0) throw Error(Errc::kInvalidConfig, "metric cutoff must be >= 1");
  DatasetEvaluation out;
  double sum = 0.0;
  std::vector<std::string> ranking;
  for (const TopKResult& r : results) {
    const GradeMap* judged = qrels.find(r.query_id);
    const bool has_positive =
        judged && std::any_of(judged->begin(), judged->end(), [](const auto& kv) { return kv.second > 0; });
    if (!has_positive) {
      ++out.skipped_queries;
      continue;
    }
    ranking.clear();
    for (const Hit& h : r.hits) ranking.push_back(h.candidate_id);
    sum += metric_at_k(spec, ranking, *judged);
    ++out.judged_queries;
  }
  if (out.judged_queries == 0) throw Error(Errc::kNoJudgedQueries, "no result query has positive judgments");
  out.score = sum / static_cast<double>(out.judged_queries);
  return out;
}

AggregateReport aggregate(std::span<const DatasetScore> scores) {
  if (scores.empty()) throw Error(Errc::kEmptyInput, "aggregate: no dataset scores");
  AggregateReport report;
  report.per_dataset.assign(scores.begin(), scores.end());
  std::sort(report.per_dataset.begin(), report.per_dataset.end(), [](const auto& a, const auto& b) {
    return a.name != b.name ? a.name < b.name : a.category < b.category;
  });
  for (std::size_t i = 0; i < report.per_dataset.size(); ++i) {
    const auto& d = report.per_dataset[i];
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(Errc::kInvalidConfig, "dataset '" + d.name + "' score outside [0, 1]");
    }
    if (i > 0 && report.per_dataset[i - 1].name == d.name && report.per_dataset[i - 1].category == d.category) {
      throw Error(Errc::kInvalidConfig, "dataset '" + d.name + "' listed twice for one category");
    }
  }
  std::map<Category, std::pair<double, std::size_t>> sums;
  double total = 0.0;
  for (const auto& d : report.per_dataset) {
    auto& [s, n] = sums[d.category];
    s += d.score;
    ++n;
    total += d.score;
  }
  for (const auto& [cat, sn] : sums) report.per_category[cat] = sn.first / static_cast<double>(sn.second);
  report.micro_average = total / static_cast<double>(report.per_dataset.size());
  return report;
}

}  // namespace umr
