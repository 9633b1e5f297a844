#include "umr/io/manifest.hpp"

#include <set>

#include "umr/error.hpp"
#include "umr/io/binary.hpp"
#include "yaml_util.hpp"

namespace umr::io {

using detail::YamlReader;

namespace {

Category category_at(const YamlReader& r, const YAML::Node& node) {
  const auto text = r.str(node, "category");
  const auto c = parse_category(text);
  if (!c) r.fail(node, "unknown category '" + text + "'");
  return *c;
}

MetricSpec metric_at(const YamlReader& r, const YAML::Node& node) {
  const auto text = r.str(node, "metric");
  const auto m = MetricSpec::parse(text);
  if (!m) r.fail(node, "metric must look like ndcg@10 or recall@5, got '" + text + "'");
  return *m;
}

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  const auto rel = p.lexically_relative(base);
  return rel.empty() ? p.generic_string() : rel.generic_string();
}

}  // namespace

EvalManifest parse_eval_manifest(std::string_view text, const std::string& source,
                                 const std::filesystem::path& base_dir) {
  const YamlReader r(source, base_dir);
  const YAML::Node root = r.load(text);
  r.expect_map(root, "manifest", {"name", "tasks"});
  r.require(root, "name");
  r.require(root, "tasks");

  EvalManifest m;
  m.name = r.str(root["name"], "name");
  const YAML::Node tasks = root["tasks"];
  r.expect_seq(tasks, "tasks");
  if (tasks.size() == 0) r.fail(tasks, "tasks is empty");
  std::set<std::string> names;
  for (const auto& t : tasks) {
    r.expect_map(t, "task",
                 {"name", "category", "queries", "candidates", "qrels", "metric", "recall10", "instruction",
                  "exclude_self"});
    for (auto key : {"name", "category", "queries", "candidates", "qrels"}) r.require(t, key);
    TaskSpec spec;
    spec.line = static_cast<std::size_t>(t.Mark().line) + 1;
    spec.name = r.str(t["name"], "name");
    if (spec.name.empty()) r.fail(t["name"], "task name is empty");
    if (!names.insert(spec.name).second) r.fail(t["name"], "task '" + spec.name + "' defined twice");
    spec.category = category_at(r, t["category"]);
    spec.queries = r.path(t["queries"], "queries");
    spec.candidates = r.path(t["candidates"], "candidates");
    spec.qrels = r.path(t["qrels"], "qrels");
    if (t["metric"]) spec.metric = metric_at(r, t["metric"]);
    if (t["recall10"]) spec.recall10 = r.boolean(t["recall10"], "recall10");
    if (t["instruction"]) spec.instruction = r.str(t["instruction"], "instruction");
    if (t["exclude_self"]) spec.exclude_self = r.boolean(t["exclude_self"], "exclude_self");
    m.tasks.push_back(std::move(spec));
  }
  return m;
}

EvalManifest load_eval_manifest(const std::filesystem::path& path) {
  return parse_eval_manifest(read_file(path), path.string(), path.parent_path());
}

std::string format_eval_manifest(const EvalManifest& m, const std::filesystem::path& base_dir) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << m.name;
  out << YAML::Key << "tasks" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : m.tasks) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << t.name;
    out << YAML::Key << "category" << YAML::Value << std::string(category_label(t.category));
    out << YAML::Key << "queries" << YAML::Value << relative_to(t.queries, base_dir);
    out << YAML::Key << "candidates" << YAML::Value << relative_to(t.candidates, base_dir);
    out << YAML::Key << "qrels" << YAML::Value << relative_to(t.qrels, base_dir);
    if (t.metric) out << YAML::Key << "metric" << YAML::Value << t.metric->label();
    if (t.recall10) out << YAML::Key << "recall10" << YAML::Value << true;
    if (t.instruction) out << YAML::Key << "instruction" << YAML::Value << *t.instruction;
    if (t.exclude_self) out << YAML::Key << "exclude_self" << YAML::Value << true;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

MineManifest parse_mine_manifest(std::string_view text, const std::string& source,
                                 const std::filesystem::path& base_dir) {
  const YamlReader r(source, base_dir);
  const YAML::Node root = r.load(text);
  r.expect_map(root, "mining manifest",
               {"queries", "candidates", "qrels", "retrieve_k", "negatives_out", "rank_window", "mode", "seed"});
  for (auto key : {"queries", "candidates", "qrels"}) r.require(root, key);
  MineManifest m;
  m.queries = r.path(root["queries"], "queries");
  m.candidates = r.path(root["candidates"], "candidates");
  m.qrels = r.path(root["qrels"], "qrels");
  auto& c = m.config;
  if (root["retrieve_k"]) c.retrieve_k = r.uint(root["retrieve_k"], "retrieve_k");
  if (root["negatives_out"]) c.negatives_out = r.uint(root["negatives_out"], "negatives_out");
  if (const auto w = root["rank_window"]) {
    r.expect_seq(w, "rank_window");
    if (w.size() != 2) r.fail(w, "rank_window must be [first, last]");
    c.rank_window = std::pair{static_cast<std::size_t>(r.uint(w[0], "rank_window")),
                              static_cast<std::size_t>(r.uint(w[1], "rank_window"))};
  }
  if (const auto mode = root["mode"]) {
    const auto s = r.str(mode, "mode");
    if (s == "rank") {
      c.mode = MiningMode::kRank;
    } else if (s == "sample") {
      c.mode = MiningMode::kSample;
    } else {
      r.fail(mode, "mode must be 'rank' or 'sample'");
    }
  }
  if (root["seed"]) c.seed = r.uint(root["seed"], "seed");
  try {
    c.validate();
  } catch (const Error& e) {
    r.fail(root, e.detail());
  }
  return m;
}

MineManifest load_mine_manifest(const std::filesystem::path& path) {
  return parse_mine_manifest(read_file(path), path.string(), path.parent_path());
}

FilterManifest parse_filter_manifest(std::string_view text, const std::string& source,
                                     const std::filesystem::path& base_dir) {
  const YamlReader r(source, base_dir);
  const YAML::Node root = r.load(text);
  r.expect_map(root, "filter manifest",
               {"records", "queries", "passages", "top_n", "score_threshold", "domain_quota",
                "min_domain_confidence", "seed"});
  r.require(root, "records");
  FilterManifest m;
  m.records = r.path(root["records"], "records");
  if (root["queries"]) m.queries = r.path(root["queries"], "queries");
  if (root["passages"]) m.passages = r.path(root["passages"], "passages");
  if (m.queries.has_value() != m.passages.has_value()) r.fail(root, "queries and passages go together");
  if (root["top_n"]) {
    m.top_n = r.uint(root["top_n"], "top_n");
    if (m.top_n == 0) r.fail(root["top_n"], "top_n must be at least 1");
  }
  if (root["score_threshold"]) m.score_threshold = r.real(root["score_threshold"], "score_threshold");
  if (root["domain_quota"]) m.domain_quota = r.uint(root["domain_quota"], "domain_quota");
  if (root["min_domain_confidence"]) {
    m.min_domain_confidence = r.real(root["min_domain_confidence"], "min_domain_confidence");
  }
  if (root["seed"]) m.seed = r.uint(root["seed"], "seed");
  return m;
}

FilterManifest load_filter_manifest(const std::filesystem::path& path) {
  return parse_filter_manifest(read_file(path), path.string(), path.parent_path());
}

std::pair<std::string, MetricSpec> parse_metric_override(std::string_view text) {
  std::string task;
  std::string_view spec = text;
  if (const auto eq = text.rfind('='); eq != std::string_view::npos) {
    task = std::string(text.substr(0, eq));
    spec = text.substr(eq + 1);
    if (task.empty()) throw Error(Errc::kInvalidConfig, "metric override '" + std::string(text) + "' has no task");
  }
  const auto m = MetricSpec::parse(spec);
  if (!m) {
    throw Error(Errc::kInvalidConfig, "metric override '" + std::string(text) + "' is not [task=]ndcg@k|recall@k");
  }
  return {task, *m};
}

}  // namespace umr::io
