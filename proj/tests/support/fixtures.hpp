#pragma once

// Random evaluation tasks on disk plus an in-memory copy for oracle checks.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "umr/io/container.hpp"
#include "umr/io/qrels_file.hpp"
#include "umr/metrics.hpp"
#include "umr/taxonomy.hpp"

namespace fixtures {

struct TaskData {
  std::string name;
  umr::Category category;
  bool recall10 = false;
  std::optional<umr::MetricSpec> metric;
  umr::EmbeddingMatrix queries;
  umr::EmbeddingMatrix candidates;
  std::map<std::string, oracle::Grades> qrels;
};

struct TaskShape {
  TaskShape(std::string name, umr::Category category, bool recall10 = false, std::size_t queries = 20,
            std::size_t candidates = 120, std::size_t dim = 8, std::optional<umr::MetricSpec> metric = std::nullopt)
      : name(std::move(name)),
        category(category),
        recall10(recall10),
        queries(queries),
        candidates(candidates),
        dim(dim),
        metric(metric) {}

  std::string name;
  umr::Category category;
  bool recall10;
  std::size_t queries;
  std::size_t candidates;
  std::size_t dim;
  std::optional<umr::MetricSpec> metric;
};

inline TaskData make_task(const TaskShape& s, std::mt19937_64& rng) {
  TaskData t;
  t.name = s.name;
  t.category = s.category;
  t.recall10 = s.recall10;
  t.metric = s.metric;
  std::vector<std::string> qids, cids;
  for (std::size_t i = 0; i < s.queries; ++i) qids.push_back(s.name + "-q" + std::to_string(i));
  for (std::size_t i = 0; i < s.candidates; ++i) cids.push_back(s.name + "-c" + std::to_string(i));
  t.queries = umr::EmbeddingMatrix(s.dim, oracle::random_rows(rng, s.queries, s.dim), qids);
  t.candidates = umr::EmbeddingMatrix(s.dim, oracle::random_rows(rng, s.candidates, s.dim), cids);
  std::uniform_int_distribution<std::size_t> pick(0, s.candidates - 1);
  std::uniform_int_distribution<int> grade(0, 3), judged(1, 6);
  for (const auto& q : qids) {
    auto& g = t.qrels[q];
    const int n = judged(rng);
    while (static_cast<int>(g.size()) < n) g[cids[pick(rng)]] = grade(rng);
    g[cids[pick(rng)]] = 1 + grade(rng) % 3;  // at least one positive
  }
  return t;
}

inline umr::Qrels to_qrels(const TaskData& t) {
  umr::Qrels q;
  for (const auto& [qid, grades] : t.qrels) {
    for (const auto& [cid, g] : grades) q.add(qid, cid, g);
  }
  return q;
}

/// Writes every task under dir/<name>/ and a manifest at dir/manifest.yaml.
inline std::filesystem::path write_tasks(const std::filesystem::path& dir, const std::vector<TaskData>& tasks,
                                         const std::string& manifest_name = "fixture") {
  std::string yaml = "name: " + manifest_name + "\ntasks:\n";
  for (const auto& t : tasks) {
    const auto sub = dir / t.name;
    umr::io::write_container(sub / "queries.umre", t.queries);
    umr::io::write_container(sub / "candidates.umre", t.candidates);
    umr::io::write_qrels(sub / "qrels.tsv", to_qrels(t));
    yaml += "  - name: " + t.name + "\n";
    yaml += "    category: \"" + std::string(umr::category_label(t.category)) + "\"\n";
    yaml += "    queries: " + t.name + "/queries.umre\n";
    yaml += "    candidates: " + t.name + "/candidates.umre\n";
    yaml += "    qrels: " + t.name + "/qrels.tsv\n";
    if (t.recall10) yaml += "    recall10: true\n";
    if (t.metric) yaml += "    metric: " + t.metric->label() + "\n";
  }
  const auto path = dir / "manifest.yaml";
  std::ofstream(path) << yaml;
  return path;
}

/// Metric the task should be scored with when no override applies.
inline umr::MetricSpec expected_metric(const TaskData& t) {
  using umr::Category;
  using umr::MetricKind;
  if (t.metric) return *t.metric;
  if (t.category == Category::kTextToText) return {MetricKind::kNdcg, 10};
  if (t.category == Category::kTextToVisualDoc) return {MetricKind::kNdcg, 5};
  return {MetricKind::kRecall, t.recall10 ? std::size_t{10} : std::size_t{5}};
}

/// Mean per-query metric from a full sort of every candidate.
inline double oracle_score(const TaskData& t, const umr::MetricSpec& m) {
  const auto ranked = oracle::full_sort_topk(t.queries, t.candidates, m.cutoff);
  double sum = 0.0;
  for (std::size_t q = 0; q < t.queries.count(); ++q) {
    std::vector<std::string> ids;
    for (auto c : ranked[q]) ids.push_back(t.candidates.id(c));
    const auto& g = t.qrels.at(t.queries.id(q));
    sum += m.kind == umr::MetricKind::kNdcg ? oracle::ndcg(ids, g, m.cutoff) : oracle::recall(ids, g, m.cutoff);
  }
  return sum / static_cast<double>(t.queries.count());
}

/// One plain task per category plus the benchmark's special cases: the
/// Recall@10 datasets (Fashion200K in both directions, FashionIQ, OKVQA)
/// and WebQA T->T, which the manifest pins to Recall@5.
inline std::vector<TaskShape> routing_shapes() {
  using umr::Category;
  std::vector<TaskShape> out;
  for (auto c : umr::kAllCategories) {
    std::string name(umr::category_label(c));
    for (auto& ch : name) {
      if (ch == '-' || ch == '>') ch = '_';
    }
    out.push_back({"plain_" + name, c, false, 12, 60, 6});
  }
  out.push_back({"Fashion200K_T_I", Category::kTextToImage, true, 12, 60, 6});
  out.push_back({"Fashion200K_I_T", Category::kImageToText, true, 12, 60, 6});
  out.push_back({"FashionIQ", Category::kFusedToImage, true, 12, 60, 6});
  out.push_back({"OKVQA", Category::kFusedToText, true, 12, 60, 6});
  out.push_back({"WebQA_T_T", Category::kTextToText, false, 12, 60, 6, umr::MetricSpec{umr::MetricKind::kRecall, 5}});
  return out;
}

}  // namespace fixtures
