#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "umr/dataflow.hpp"
#include "umr/metrics.hpp"
#include "umr/mining.hpp"
#include "umr/toy/trainer.hpp"

namespace umr::io {

struct Provenance {
  std::string engine_version;
  std::string manifest_sha256;
  std::map<std::string, std::uint64_t> seeds;
};

struct DatasetRow {
  std::string name;
  Category category = Category::kTextToText;
  MetricSpec metric;
  double score = 0.0;
  std::size_t queries = 0;
  std::size_t candidates = 0;
  std::size_t judged_queries = 0;
  std::size_t skipped_queries = 0;
  std::string instruction;
};

struct EvalReport {
  std::string manifest_name;
  Provenance provenance;
  /// Ordered by (name, category).
  std::vector<DatasetRow> datasets;
  AggregateReport aggregate;
};

std::string eval_report_json(const EvalReport& r);

/// Category columns grouped Single / Cross / Fused with the overall average,
/// scores x100 to two decimals, followed by the per-dataset listing.
std::string eval_report_table(const EvalReport& r);

std::string mining_report_json(const MiningResult& r, const MiningConfig& cfg, const Provenance& p);

std::string pipeline_report_json(const PipelineOutput& out, const Provenance& p);
std::string pipeline_report_table(const PipelineReport& r);

struct TwoStageRun {
  std::string name;
  toy::Pooling pooling = toy::Pooling::kLastToken;
  toy::InstructionMode instruction_mode = toy::InstructionMode::kQueryOnly;
  bool hard_negatives = true;
  std::size_t eval_k = 5;
  toy::TwoStageResult result;
};

std::string two_stage_grid_json(const std::vector<TwoStageRun>& runs, const Provenance& p);
std::string two_stage_grid_table(const std::vector<TwoStageRun>& runs);

std::string mix_grid_json(const toy::MixStudyResult& r, const Provenance& p);
std::string mix_grid_table(const toy::MixStudyResult& r);

/// `step,stage,loss` rows, loss printed with round-trip precision.
std::string loss_trace_csv(const std::vector<std::vector<double>>& stages,
                           const std::vector<std::string>& stage_names);

}  // namespace umr::io
