#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "umr/dataflow.hpp"
#include "umr/mining.hpp"

namespace umr::io {

struct TrainingInstance {
  std::string query_id;
  std::string positive_id;
  std::vector<std::string> negative_ids;
  bool operator==(const TrainingInstance&) const = default;
};

std::vector<TrainingInstance> to_training_instances(const MiningResult& mined);

/// One JSON object per line with exactly the keys query_id, positive_id,
/// negative_ids. Empty negative lists and negatives equal to the positive
/// are schema errors. Blank lines are skipped.
std::vector<TrainingInstance> parse_training_instances(std::string_view text,
                                                       const std::string& source = "<instances>");
std::string format_training_instances(const std::vector<TrainingInstance>& instances);

/// Synthesized records. Optional keys may be absent or null.
std::vector<SynthRecord> parse_synth_records(std::string_view text, const std::string& source = "<records>");
std::string format_synth_records(const std::vector<SynthRecord>& records);

/// Discarded records with `reason` and `detail` keys added.
std::string format_discarded(const std::vector<Discarded>& discarded);

}  // namespace umr::io
