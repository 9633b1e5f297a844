#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "umr/metrics.hpp"

namespace umr::io {

/// TREC-style judgments: `query_id iteration candidate_id grade` per line,
/// whitespace separated, `#` starts a comment. Throws SchemaError with the
/// offending line for malformed lines, negative grades and duplicates.
Qrels parse_qrels(std::string_view text, const std::string& source = "<qrels>");
Qrels read_qrels(const std::filesystem::path& path);

/// Sorted by query then candidate, iteration column 0.
std::string format_qrels(const Qrels& qrels);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);

}  // namespace umr::io
