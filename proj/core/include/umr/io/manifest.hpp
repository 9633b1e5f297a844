#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "umr/metrics.hpp"
#include "umr/mining.hpp"
#include "umr/taxonomy.hpp"

namespace umr::io {

// All manifests are YAML mappings with a closed key set: an unknown or
// misspelled key is a SchemaError naming its line. Relative paths resolve
// against the manifest's directory.

struct TaskSpec {
  std::string name;
  Category category = Category::kTextToText;
  std::filesystem::path queries;
  std::filesystem::path candidates;
  std::filesystem::path qrels;
  std::optional<MetricSpec> metric;
  /// Recall@10 convention for the datasets that report it.
  bool recall10 = false;
  /// Recorded only; embeddings are produced upstream.
  std::optional<std::string> instruction;
  /// Drop a candidate whose id equals the query id (shared pools).
  bool exclude_self = false;
  std::size_t line = 0;
};

struct EvalManifest {
  std::string name;
  std::vector<TaskSpec> tasks;
};

EvalManifest parse_eval_manifest(std::string_view text, const std::string& source,
                                 const std::filesystem::path& base_dir);
EvalManifest load_eval_manifest(const std::filesystem::path& path);

/// YAML text for `m` with paths written relative to `base_dir`.
std::string format_eval_manifest(const EvalManifest& m, const std::filesystem::path& base_dir);

struct MineManifest {
  std::filesystem::path queries;
  std::filesystem::path candidates;
  std::filesystem::path qrels;
  MiningConfig config;
};

MineManifest load_mine_manifest(const std::filesystem::path& path);
MineManifest parse_mine_manifest(std::string_view text, const std::string& source,
                                 const std::filesystem::path& base_dir);

struct FilterManifest {
  std::filesystem::path records;
  /// rank_filter inputs; both or neither.
  std::optional<std::filesystem::path> queries;
  std::optional<std::filesystem::path> passages;
  std::size_t top_n = 20;
  double score_threshold = 0.2;
  std::optional<std::size_t> domain_quota;
  double min_domain_confidence = 0.5;
  std::uint64_t seed = 0;
};

FilterManifest load_filter_manifest(const std::filesystem::path& path);
FilterManifest parse_filter_manifest(std::string_view text, const std::string& source,
                                     const std::filesystem::path& base_dir);

/// `kind@k` applies to every task, `task=kind@k` to one task.
/// Throws kInvalidConfig on malformed text.
std::pair<std::string, MetricSpec> parse_metric_override(std::string_view text);

}  // namespace umr::io
