#include "umr/io/qrels_file.hpp"

#include <charconv>
#include <limits>

#include "umr/error.hpp"
#include "umr/io/binary.hpp"

namespace umr::io {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

Qrels parse_qrels(std::string_view text, const std::string& source) {
  Qrels q;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto fields = split_ws(line);
    if (fields.empty() || fields[0].front() == '#') continue;
    if (!valid_utf8(line)) throw SchemaError(source, line_no, "line is not valid UTF-8");
    if (fields.size() != 4) {
      throw SchemaError(source, line_no,
                        "expected 'query_id iteration candidate_id relevance', got " + std::to_string(fields.size()) +
                            " fields");
    }
    long long grade = 0;
    const auto g = fields[3];
    const auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), grade);
    if (ec != std::errc() || ptr != g.data() + g.size()) {
      throw SchemaError(source, line_no, "relevance '" + std::string(g) + "' is not an integer");
    }
    if (grade < 0) throw SchemaError(source, line_no, "relevance must be non-negative");
    if (grade > std::numeric_limits<int>::max()) throw SchemaError(source, line_no, "relevance out of range");
    const auto* existing = q.find(fields[0]);
    if (existing != nullptr && existing->find(fields[2]) != existing->end()) {
      throw SchemaError(source, line_no,
                        "duplicate judgment for (" + std::string(fields[0]) + ", " + std::string(fields[2]) + ")");
    }
    q.add(std::string(fields[0]), std::string(fields[2]), static_cast<int>(grade));
  }
  return q;
}

Qrels read_qrels(const std::filesystem::path& path) {
  return parse_qrels(read_file(path), path.string());
}

std::string format_qrels(const Qrels& qrels) {
  std::string out;
  for (const auto& [query, grades] : qrels.queries()) {
    for (const auto& [cand, grade] : grades) {
      out += query;
      out += " 0 ";
      out += cand;
      out += ' ';
      out += std::to_string(grade);
      out += '\n';
    }
  }
  return out;
}

void write_qrels(const std::filesystem::path& path, const Qrels& qrels) {
  write_file(path, format_qrels(qrels));
}

}  // namespace umr::io
