#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "umr/io/manifest.hpp"
#include "umr/io/report.hpp"
#include "umr/io/run_manifest.hpp"

namespace umr {

struct EvalOptions {
  std::size_t workers = 1;
  /// Keep only tasks of this category.
  std::optional<Category> category;
  /// (task name or "" for every task, metric). Later entries win; a named
  /// task beats the blanket form, and both beat the manifest.
  std::vector<std::pair<std::string, MetricSpec>> overrides;
  /// Recorded in the report when set.
  std::optional<std::uint64_t> seed;
};

/// Loads every task's files, searches and scores datasets in parallel and
/// aggregates. Errors surface in manifest order whatever the worker count.
io::EvalReport run_eval(const io::EvalManifest& manifest, const std::string& manifest_sha256,
                        const EvalOptions& opts);

/// Writes report.json and report.txt into `out_dir`.
void write_eval_outputs(const io::EvalReport& report, const std::filesystem::path& out_dir);

/// Writes instances.jsonl and mining_report.json.
MiningResult run_mine(const io::MineManifest& manifest, const std::string& manifest_sha256,
                      const std::filesystem::path& out_dir);

/// Writes kept.jsonl, discarded.jsonl, filter_report.json, filter_report.txt.
PipelineOutput run_filter(const io::FilterManifest& manifest, const std::string& manifest_sha256,
                          std::size_t workers, const std::filesystem::path& out_dir);

struct ToyRunOutput {
  std::vector<io::TwoStageRun> runs;
  std::optional<toy::MixStudyResult> mix;
};

/// Runs the toy recipe and writes checkpoints, loss traces, grid.json and
/// grid.txt (plus held-out exports when requested) under `out_dir`.
ToyRunOutput run_toy(const io::ToyRunManifest& manifest, const std::string& manifest_sha256,
                     const std::filesystem::path& out_dir);

/// Directory-safe form of a run or model name ("IT->IT" -> "IT_to_IT").
std::string path_slug(std::string_view name);

}  // namespace umr
