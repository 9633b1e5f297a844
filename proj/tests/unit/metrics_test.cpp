#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "umr/metrics.hpp"

namespace umr {
namespace {

using Ranking = std::vector<std::string>;

TEST(Ndcg, HandExamples) {
  GradeMap one{{"a", 1}};
  EXPECT_DOUBLE_EQ(ndcg_at_k(Ranking{"a", "b", "c"}, one, 10), 1.0);
  EXPECT_NEAR(ndcg_at_k(Ranking{"b", "a", "c"}, one, 10), 0.63092975, 1e-8);
  EXPECT_NEAR(ndcg_at_k(Ranking{"b", "a", "c"}, one, 10), 1.0 / std::log2(3.0), 1e-15);

  GradeMap graded{{"A", 3}, {"B", 1}};
  const double l = std::log2(3.0);
  EXPECT_NEAR(ndcg_at_k(Ranking{"B", "A"}, graded, 2), (1 + 3 / l) / (3 + 1 / l), 1e-12);
  EXPECT_NEAR(ndcg_at_k(Ranking{"B", "A"}, graded, 2), 0.7967075809905066, 1e-12);
}

TEST(Ndcg, EdgeCases) {
  GradeMap none{{"a", 0}};
  EXPECT_EQ(ndcg_at_k(Ranking{"a"}, none, 5), 0.0);
  GradeMap one{{"a", 2}};
  EXPECT_EQ(ndcg_at_k(Ranking{}, one, 5), 0.0);
  EXPECT_EQ(ndcg_at_k(Ranking{"x", "y"}, one, 5), 0.0);
  // a repeated id is credited once
  GradeMap two{{"a", 1}, {"b", 1}};
  EXPECT_LT(ndcg_at_k(Ranking{"a", "a", "b"}, two, 3), ndcg_at_k(Ranking{"a", "b", "a"}, two, 3));
}

TEST(Recall, HandExamples) {
  GradeMap two{{"a", 1}, {"b", 2}, {"c", 0}};
  EXPECT_DOUBLE_EQ(recall_at_k(Ranking{"a", "x", "b"}, two, 5), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_k(Ranking{"a", "x", "y", "z", "w", "b"}, two, 5), 0.5);
  GradeMap three{{"a", 1}, {"b", 1}, {"c", 1}};
  EXPECT_DOUBLE_EQ(recall_at_k(Ranking{"x", "y"}, three, 10), 0.0);
}

TEST(Recall, NoPositivesThrows) {
  try {
    recall_at_k(Ranking{"a"}, GradeMap{{"a", 0}}, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNoPositives);
  }
}

TEST(Metrics, MatchOracleOnRandomRankings) {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 300; ++t) {
    const std::size_t pool = 1 + rng() % 40;
    oracle::Grades g;
    GradeMap gm;
    for (std::size_t i = 0; i < pool; ++i) {
      if (rng() % 3 == 0) {
        const int grade = static_cast<int>(rng() % 4);
        g["c" + std::to_string(i)] = grade;
        gm["c" + std::to_string(i)] = grade;
      }
    }
    Ranking r;
    for (std::size_t i = 0; i < pool; ++i) r.push_back("c" + std::to_string(rng() % (pool + 5)));
    for (std::size_t k : {1u, 5u, 10u, 50u}) {
      EXPECT_NEAR(ndcg_at_k(r, gm, k), oracle::ndcg(r, g, k), 1e-12);
      const bool any = std::any_of(g.begin(), g.end(), [](auto& kv) { return kv.second > 0; });
      if (any) {
        EXPECT_NEAR(recall_at_k(r, gm, k), oracle::recall(r, g, k), 1e-12);
      }
    }
  }
}

TEST(Metrics, RecallMonotoneAndTailPermutationInvariant) {
  std::mt19937_64 rng(103);
  for (int t = 0; t < 100; ++t) {
    GradeMap g;
    for (int i = 0; i < 30; ++i) {
      if (rng() % 4 == 0) g["c" + std::to_string(i)] = 1 + static_cast<int>(rng() % 3);
    }
    if (g.empty()) g["c0"] = 1;
    Ranking r;
    for (int i = 0; i < 30; ++i) r.push_back("c" + std::to_string(i));
    std::shuffle(r.begin(), r.end(), rng);
    double prev = 0.0;
    for (std::size_t k = 1; k <= 30; ++k) {
      const double v = recall_at_k(r, g, k);
      EXPECT_GE(v, prev);
      prev = v;
    }
    Ranking p = r;
    std::shuffle(p.begin() + 10, p.end(), rng);
    EXPECT_EQ(ndcg_at_k(r, g, 10), ndcg_at_k(p, g, 10));
    EXPECT_EQ(recall_at_k(r, g, 10), recall_at_k(p, g, 10));
    const double n = ndcg_at_k(r, g, 10);
    EXPECT_GE(n, 0.0);
    EXPECT_LE(n, 1.0 + 1e-12);
  }
}

TEST(MetricSpec, ParseAndLabel) {
  EXPECT_EQ(MetricSpec::parse("ndcg@10"), (MetricSpec{MetricKind::kNdcg, 10}));
  EXPECT_EQ(MetricSpec::parse("Recall@5"), (MetricSpec{MetricKind::kRecall, 5}));
  EXPECT_FALSE(MetricSpec::parse("recall@0"));
  EXPECT_FALSE(MetricSpec::parse("map@10"));
  EXPECT_FALSE(MetricSpec::parse("ndcg10"));
  EXPECT_FALSE(MetricSpec::parse("ndcg@1x"));
  EXPECT_EQ((MetricSpec{MetricKind::kNdcg, 10}).label(), "ndcg@10");
}

TEST(DefaultMetric, RoutingTable) {
  EXPECT_EQ(default_metric(Category::kTextToText, false), (MetricSpec{MetricKind::kNdcg, 10}));
  EXPECT_EQ(default_metric(Category::kTextToVisualDoc, false), (MetricSpec{MetricKind::kNdcg, 5}));
  EXPECT_EQ(default_metric(Category::kFusedToFused, true), (MetricSpec{MetricKind::kRecall, 10}));
  EXPECT_EQ(default_metric(Category::kTextToImage, true), (MetricSpec{MetricKind::kRecall, 10}));
  for (Category c : kAllCategories) {
    if (c == Category::kTextToText || c == Category::kTextToVisualDoc) continue;
    EXPECT_EQ(default_metric(c, false), (MetricSpec{MetricKind::kRecall, 5}));
  }
}

std::vector<TopKResult> results_for(const std::vector<std::pair<std::string, Ranking>>& rows) {
  std::vector<TopKResult> out;
  for (const auto& [q, r] : rows) {
    TopKResult t;
    t.query_id = q;
    for (const auto& id : r) t.hits.push_back(Hit{id, 0.f, 0});
    out.push_back(std::move(t));
  }
  return out;
}

TEST(EvaluateDataset, MeanOverJudgedQueries) {
  Qrels q;
  q.add("q1", "a", 1);
  q.add("q2", "b", 1);
  q.add("q3", "c", 0);
  const auto res = results_for({{"q1", {"a"}}, {"q2", {"x"}}, {"q3", {"c"}}, {"q4", {"a"}}});
  const auto ev = evaluate_dataset(res, q, {MetricKind::kRecall, 5});
  EXPECT_DOUBLE_EQ(ev.score, 0.5);
  EXPECT_EQ(ev.judged_queries, 2u);
  EXPECT_EQ(ev.skipped_queries, 2u);
}

TEST(EvaluateDataset, NoJudgedQueries) {
  Qrels q;
  q.add("q1", "a", 0);
  try {
    evaluate_dataset(results_for({{"q1", {"a"}}}), q, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNoJudgedQueries);
  }
}

TEST(EvaluateDataset, EqualsPerQueryOracleMean) {
  std::mt19937_64 rng(107);
  Qrels q;
  std::vector<oracle::Grades> grades(7);
  std::vector<std::pair<std::string, Ranking>> rows;
  for (int i = 0; i < 7; ++i) {
    const std::string qid = "q" + std::to_string(i);
    for (int c = 0; c < 12; ++c) {
      if (rng() % 3 == 0 || c == i) {
        const int g = c == i ? 2 : static_cast<int>(rng() % 4);
        q.add(qid, "c" + std::to_string(c), g);
        grades[i]["c" + std::to_string(c)] = g;
      }
    }
    Ranking r;
    for (int c = 0; c < 12; ++c) r.push_back("c" + std::to_string(c));
    std::shuffle(r.begin(), r.end(), rng);
    rows.emplace_back(qid, r);
  }
  double sum = 0.0;
  for (int i = 0; i < 7; ++i) sum += oracle::ndcg(rows[i].second, grades[i], 10);
  EXPECT_NEAR(evaluate_dataset(results_for(rows), q, {MetricKind::kNdcg, 10}).score, sum / 7, 1e-12);
}

TEST(Qrels, RejectsBadInput) {
  Qrels q;
  q.add("q", "a", 1);
  EXPECT_THROW(q.add("q", "a", 2), Error);
  EXPECT_THROW(q.add("q", "b", -1), Error);
  EXPECT_TRUE(q.has_any_positive());
  EXPECT_EQ(q.positives("q"), std::vector<std::string>{"a"});
  EXPECT_TRUE(q.positives("nope").empty());
}

TEST(Aggregate, HandArithmetic) {
  std::vector<DatasetScore> s{{"a1", Category::kTextToText, 0.2},
                              {"a2", Category::kTextToText, 0.4},
                              {"b", Category::kImageToImage, 0.9}};
  const auto r = aggregate(s);
  EXPECT_NEAR(r.per_category.at(Category::kTextToText), 0.3, 1e-15);
  EXPECT_NEAR(r.per_category.at(Category::kImageToImage), 0.9, 1e-15);
  EXPECT_NEAR(r.micro_average, 0.5, 1e-15);
}

TEST(Aggregate, SingleAndUniform) {
  std::vector<DatasetScore> one{{"x", Category::kFusedToText, 0.37}};
  const auto r1 = aggregate(one);
  EXPECT_EQ(r1.micro_average, 0.37);
  EXPECT_EQ(r1.per_category.at(Category::kFusedToText), 0.37);
  std::vector<DatasetScore> many;
  for (int i = 0; i < 47; ++i) many.push_back({"d" + std::to_string(i), kAllCategories[i % 9], 0.6});
  EXPECT_NEAR(aggregate(many).micro_average, 0.6, 1e-12);
}

TEST(Aggregate, Errors) {
  try {
    aggregate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyInput);
  }
  std::vector<DatasetScore> bad{{"x", Category::kTextToText, 1.5}};
  EXPECT_THROW(aggregate(bad), Error);
  std::vector<DatasetScore> dup{{"x", Category::kTextToText, 0.5}, {"x", Category::kTextToText, 0.5}};
  EXPECT_THROW(aggregate(dup), Error);
}

TEST(Aggregate, LeaderboardAverageIsDatasetWeighted) {
  // Category means and dataset counts of a reference leaderboard row whose
  // overall column reads 67.44.
  const std::vector<std::pair<Category, std::pair<double, int>>> row{
      {Category::kTextToText, {58.19, 16}},   {Category::kImageToImage, {31.89, 1}},
      {Category::kTextToImage, {61.35, 4}},   {Category::kTextToVisualDoc, {89.92, 10}},
      {Category::kImageToText, {65.83, 4}},   {Category::kTextToFused, {80.94, 2}},
      {Category::kFusedToText, {66.18, 5}},   {Category::kFusedToImage, {42.56, 2}},
      {Category::kFusedToFused, {73.62, 3}}};
  std::vector<DatasetScore> scores;
  for (const auto& [cat, mean_n] : row) {
    for (int i = 0; i < mean_n.second; ++i) {
      scores.push_back({std::string(category_label(cat)) + "#" + std::to_string(i), cat, mean_n.first / 100});
    }
  }
  ASSERT_EQ(scores.size(), 47u);
  const auto r = aggregate(scores);
  EXPECT_NEAR(100 * r.micro_average, 67.44, 0.01);
  // the unweighted mean of category means does not reproduce it
  double cat_mean = 0.0;
  for (const auto& [cat, v] : r.per_category) cat_mean += v;
  EXPECT_GT(std::abs(100 * cat_mean / 9 - 67.44), 1.0);
}

}  // namespace
}  // namespace umr
