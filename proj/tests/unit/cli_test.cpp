#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "cli/cli.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"
#include "umr/io/binary.hpp"
#include "umr/io/jsonl.hpp"

namespace umr::cli {
namespace {

using testing_util::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result umr(std::vector<std::string> args) {
  args.insert(args.begin(), "umr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<fixtures::TaskData> three_tasks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {fixtures::make_task({"alpha", Category::kTextToText}, rng),
          fixtures::make_task({"beta", Category::kTextToImage, false, 15, 80, 8}, rng),
          fixtures::make_task({"gamma", Category::kTextToVisualDoc, false, 25, 150, 8}, rng)};
}

nlohmann::json load_json(const std::filesystem::path& p) { return nlohmann::json::parse(io::read_file(p)); }

TEST(CliEval, ScoresMatchOracle) {
  TempDir dir("cli_eval");
  const auto tasks = three_tasks(1);
  const auto manifest = fixtures::write_tasks(dir.path(), tasks);
  const auto r = umr({"eval", "--manifest", manifest.string(), "--out", (dir / "out").string(), "--workers", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = load_json(dir / "out/report.json");
  ASSERT_EQ(report["datasets"].size(), 3u);
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& row = report["datasets"][i];
    EXPECT_EQ(row["name"], tasks[i].name);
    const auto metric = fixtures::expected_metric(tasks[i]);
    EXPECT_EQ(row["metric"], metric.label());
    EXPECT_NEAR(row["score"].get<double>(), fixtures::oracle_score(tasks[i], metric), 1e-9) << tasks[i].name;
    sum += row["score"].get<double>();
  }
  EXPECT_NEAR(report["micro_average"].get<double>(), sum / 3.0, 1e-12);
  EXPECT_NE(r.out.find("Avg"), std::string::npos);
}

TEST(CliEval, RepeatedRunsAreByteIdentical) {
  TempDir dir("cli_repeat");
  const auto manifest = fixtures::write_tasks(dir.path(), three_tasks(2));
  for (const char* w : {"1", "3"}) {
    ASSERT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", (dir / w).string(), "--workers", w}).code, 0);
  }
  ASSERT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", (dir / "again").string()}).code, 0);
  for (const char* f : {"report.json", "report.txt"}) {
    const auto a = io::read_file(dir / "1" / f);
    EXPECT_EQ(a, io::read_file(dir / "3" / f)) << f;
    EXPECT_EQ(a, io::read_file(dir / "again" / f)) << f;
  }
}

TEST(CliEval, CategoryFilterAndOverrides) {
  TempDir dir("cli_filter");
  const auto tasks = three_tasks(3);
  const auto manifest = fixtures::write_tasks(dir.path(), tasks);
  ASSERT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", (dir / "a").string(), "--category", "T->I"}).code,
            0);
  const auto a = load_json(dir / "a/report.json");
  ASSERT_EQ(a["datasets"].size(), 1u);
  EXPECT_EQ(a["datasets"][0]["name"], "beta");

  ASSERT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", (dir / "b").string(), "--metric-override",
                 "recall@10", "gamma=ndcg@3"})
                .code,
            0);
  const auto b = load_json(dir / "b/report.json");
  EXPECT_EQ(b["datasets"][0]["metric"], "recall@10");
  EXPECT_EQ(b["datasets"][1]["metric"], "recall@10");
  EXPECT_EQ(b["datasets"][2]["metric"], "ndcg@3");
  EXPECT_NEAR(b["datasets"][2]["score"].get<double>(),
              fixtures::oracle_score(tasks[2], {MetricKind::kNdcg, 3}), 1e-9);

  EXPECT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", (dir / "c").string(), "--category", "Q->Z"}).code,
            kExitUsage);
  EXPECT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", (dir / "c").string(), "--category", "IT->IT"}).code,
            kExitComputation);  // nothing left to evaluate
  EXPECT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", (dir / "c").string(), "--metric-override",
                 "nosuch=recall@5"})
                .code,
            kExitComputation);
}

TEST(CliEval, DefaultRoutingOverNineCategories) {
  TempDir dir("cli_route");
  std::mt19937_64 rng(4);
  std::vector<fixtures::TaskData> tasks;
  for (const auto& s : fixtures::routing_shapes()) tasks.push_back(fixtures::make_task(s, rng));
  const auto manifest = fixtures::write_tasks(dir.path(), tasks);
  ASSERT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", (dir / "out").string()}).code, 0);
  const auto report = load_json(dir / "out/report.json");
  ASSERT_EQ(report["datasets"].size(), tasks.size());
  std::map<std::string, std::string> metric_of;
  for (const auto& row : report["datasets"]) metric_of[row["name"]] = row["metric"];
  EXPECT_EQ(metric_of.at("plain_T__T"), "ndcg@10");
  EXPECT_EQ(metric_of.at("plain_T__VD"), "ndcg@5");
  EXPECT_EQ(metric_of.at("plain_IT__IT"), "recall@5");
  EXPECT_EQ(metric_of.at("FashionIQ"), "recall@10");
  EXPECT_EQ(metric_of.at("WebQA_T_T"), "recall@5");
  for (const auto& t : tasks) EXPECT_EQ(metric_of.at(t.name), fixtures::expected_metric(t).label()) << t.name;
  EXPECT_EQ(report["per_category"].size(), 9u);
}

TEST(CliExitCodes, EachClass) {
  TempDir dir("cli_codes");
  const auto tasks = three_tasks(5);
  const auto manifest = fixtures::write_tasks(dir.path(), tasks);
  const auto out = (dir / "out").string();

  EXPECT_EQ(umr({}).code, kExitUsage);
  EXPECT_EQ(umr({"eval"}).code, kExitUsage);
  EXPECT_EQ(umr({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", out, "--workers", "many"}).code, kExitUsage);
  EXPECT_EQ(umr({"--help"}).code, kExitOk);

  std::ofstream(dir / "bad.yaml") << "name: x\ntasks:\n  - name: a\n    colour: red\n";
  const auto schema = umr({"eval", "--manifest", (dir / "bad.yaml").string(), "--out", out});
  EXPECT_EQ(schema.code, kExitSchema);
  EXPECT_NE(schema.err.find("bad.yaml:4"), std::string::npos) << schema.err;

  EXPECT_EQ(umr({"eval", "--manifest", (dir / "none.yaml").string(), "--out", out}).code, kExitMissingFile);
  std::filesystem::remove(dir / "beta/qrels.tsv");
  EXPECT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", out}).code, kExitMissingFile);
  io::write_qrels(dir / "beta/qrels.tsv", fixtures::to_qrels(tasks[1]));

  auto bytes = io::read_file(dir / "alpha/candidates.umre");
  io::write_file(dir / "alpha/candidates.umre", bytes.substr(0, bytes.size() - 5));
  const auto corrupt = umr({"eval", "--manifest", manifest.string(), "--out", out});
  EXPECT_EQ(corrupt.code, kExitCorruptContainer);
  EXPECT_NE(corrupt.err.find("candidates.umre"), std::string::npos);
  bytes[0] = 'X';
  io::write_file(dir / "alpha/candidates.umre", bytes);
  EXPECT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", out}).code, kExitCorruptContainer);

  // candidates of another dimension
  io::write_container(dir / "alpha/candidates.umre", EmbeddingMatrix(3, {1.f, 0.f, 0.f}));
  EXPECT_EQ(umr({"eval", "--manifest", manifest.string(), "--out", out}).code, kExitComputation);
}

TEST(CliMine, WritesCleanInstances) {
  TempDir dir("cli_mine");
  std::mt19937_64 rng(6);
  const auto t = fixtures::make_task({"m", Category::kTextToImage, false, 30, 200, 8}, rng);
  fixtures::write_tasks(dir.path(), {t});
  std::ofstream(dir / "mine.yaml") << "queries: m/queries.umre\ncandidates: m/candidates.umre\nqrels: m/qrels.tsv\n"
                                      "retrieve_k: 40\nnegatives_out: 5\nmode: sample\nseed: 9\n";
  const auto r = umr({"mine", "--manifest", (dir / "mine.yaml").string(), "--out", (dir / "o1").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(umr({"mine", "--manifest", (dir / "mine.yaml").string(), "--out", (dir / "o2").string(), "--workers",
                 "4"})
                .code,
            0);
  EXPECT_EQ(io::read_file(dir / "o1/instances.jsonl"), io::read_file(dir / "o2/instances.jsonl"));
  EXPECT_EQ(io::read_file(dir / "o1/mining_report.json"), io::read_file(dir / "o2/mining_report.json"));
  const auto inst = io::parse_training_instances(io::read_file(dir / "o1/instances.jsonl"));
  EXPECT_EQ(inst.size(), 30u);
  for (const auto& i : inst) {
    const auto& g = t.qrels.at(i.query_id);
    EXPECT_GT(g.at(i.positive_id), 0);
    for (const auto& n : i.negative_ids) {
      auto it = g.find(n);
      EXPECT_TRUE(it == g.end() || it->second == 0);
    }
  }
  ASSERT_EQ(umr({"mine", "--manifest", (dir / "mine.yaml").string(), "--out", (dir / "o3").string(), "--seed",
                 "10"})
                .code,
            0);
  EXPECT_NE(io::read_file(dir / "o1/instances.jsonl"), io::read_file(dir / "o3/instances.jsonl"));
}

TEST(CliFilter, ScoreAndThresholdOverride) {
  TempDir dir("cli_filter_cmd");
  std::string lines;
  const double scores[] = {0.1, 0.19, 0.2, 0.5};
  for (int i = 0; i < 4; ++i) {
    lines += R"({"record_id":"r)" + std::to_string(i) +
             R"(","query_text":"q","rewritten_query_text":"q","entity":"e","passage_id":"p",)"
             R"("image_source":"retrieved","image_caption":"c","relevance_score":)" +
             std::to_string(scores[i]) + "}\n";
  }
  std::ofstream(dir / "records.jsonl") << lines;
  std::ofstream(dir / "filter.yaml") << "records: records.jsonl\n";
  ASSERT_EQ(umr({"filter", "--manifest", (dir / "filter.yaml").string(), "--out", (dir / "a").string()}).code, 0);
  EXPECT_EQ(io::parse_synth_records(io::read_file(dir / "a/kept.jsonl")).size(), 2u);
  ASSERT_EQ(umr({"filter", "--manifest", (dir / "filter.yaml").string(), "--out", (dir / "b").string(), "--threshold",
                 "0.15"})
                .code,
            0);
  EXPECT_EQ(io::parse_synth_records(io::read_file(dir / "b/kept.jsonl")).size(), 3u);
  const auto rep = load_json(dir / "a/filter_report.json");
  EXPECT_EQ(rep["total_input"], 4);
  EXPECT_DOUBLE_EQ(rep["overall_discard_fraction"].get<double>(), 0.5);

  std::ofstream(dir / "bad.jsonl") << lines << "{\"record_id\":\"x\"}\n";
  std::ofstream(dir / "bad.yaml") << "records: bad.jsonl\n";
  const auto bad = umr({"filter", "--manifest", (dir / "bad.yaml").string(), "--out", (dir / "c").string()});
  EXPECT_EQ(bad.code, kExitSchema);
  EXPECT_NE(bad.err.find("bad.jsonl:5"), std::string::npos) << bad.err;
}

TEST(CliTrainToy, SmallRunIsReproducible) {
  TempDir dir("cli_toy");
  std::ofstream(dir / "toy.yaml") << R"(name: small
mode: two_stage
seed: 3
data: {clusters: 8, queries_per_cluster: 4, candidates_per_cluster: 4}
encoder: {feature_dim: 1024}
train: {stage1_steps: 10, stage2_steps: 10}
mining: {retrieve_k: 20, negatives_out: 4}
ablations:
  - {name: mean_pooling, pooling: mean}
export_embeddings: true
)";
  const auto m = (dir / "toy.yaml").string();
  ASSERT_EQ(umr({"train-toy", "--manifest", m, "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(umr({"train-toy", "--manifest", m, "--out", (dir / "b").string()}).code, 0);
  for (const char* f : {"grid.json", "grid.txt", "base/stage2.umrc", "base/loss_trace.csv", "mean_pooling/mined.jsonl",
                        "base/heldout/queries.umre", "base/heldout/qrels.tsv"}) {
    EXPECT_EQ(io::read_file(dir / "a" / f), io::read_file(dir / "b" / f)) << f;
  }
  // exported held-out embeddings evaluate through the normal path
  ASSERT_EQ(umr({"eval", "--manifest", (dir / "a/base/heldout/manifest.yaml").string(), "--out",
                 (dir / "ev").string()})
                .code,
            0);
  ASSERT_EQ(umr({"train-toy", "--manifest", m, "--out", (dir / "c").string(), "--seed", "4"}).code, 0);
  EXPECT_NE(io::read_file(dir / "a/base/stage2.umrc"), io::read_file(dir / "c/base/stage2.umrc"));
}

}  // namespace
}  // namespace umr::cli
