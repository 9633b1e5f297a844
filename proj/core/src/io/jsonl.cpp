#include "umr/io/jsonl.hpp"

#include <set>

#include <json.hpp>

#include "umr/error.hpp"

namespace umr::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Calls fn(line_no, object) for every non-blank line.
template <typename Fn>
void for_each_object(std::string_view text, const std::string& source, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw SchemaError(source, line_no, "expected a JSON object");
    fn(line_no, obj);
  }
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::set<std::string>& required,
                const std::string& source, std::size_t line) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw SchemaError(source, line, "unknown key '" + key + "'");
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) throw SchemaError(source, line, "missing key '" + key + "'");
  }
}

std::string get_string(const json& obj, const char* key, const std::string& source, std::size_t line) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw SchemaError(source, line, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

template <typename T>
std::optional<T> get_optional(const json& obj, const char* key, const std::string& source, std::size_t line) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  const auto& v = obj.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw SchemaError(source, line, std::string("'") + key + "' must be a string or null");
  } else {
    if (!v.is_number()) throw SchemaError(source, line, std::string("'") + key + "' must be a number or null");
  }
  return v.get<T>();
}

}  // namespace

std::vector<TrainingInstance> to_training_instances(const MiningResult& mined) {
  std::vector<TrainingInstance> out;
  out.reserve(mined.instances.size());
  for (const auto& m : mined.instances) out.push_back({m.query_id, m.positive_id, m.hard_negative_ids});
  return out;
}

std::vector<TrainingInstance> parse_training_instances(std::string_view text, const std::string& source) {
  static const std::set<std::string> kKeys = {"query_id", "positive_id", "negative_ids"};
  std::vector<TrainingInstance> out;
  for_each_object(text, source, [&](std::size_t line, const json& obj) {
    check_keys(obj, kKeys, kKeys, source, line);
    TrainingInstance t;
    t.query_id = get_string(obj, "query_id", source, line);
    t.positive_id = get_string(obj, "positive_id", source, line);
    const auto& negs = obj.at("negative_ids");
    if (!negs.is_array()) throw SchemaError(source, line, "'negative_ids' must be a list");
    if (negs.empty()) throw SchemaError(source, line, "'negative_ids' is empty");
    std::set<std::string> seen;
    for (const auto& n : negs) {
      if (!n.is_string()) throw SchemaError(source, line, "'negative_ids' entries must be strings");
      auto id = n.get<std::string>();
      if (id == t.positive_id) throw SchemaError(source, line, "negative '" + id + "' is the positive");
      if (!seen.insert(id).second) throw SchemaError(source, line, "negative '" + id + "' repeated");
      t.negative_ids.push_back(std::move(id));
    }
    out.push_back(std::move(t));
  });
  return out;
}

std::string format_training_instances(const std::vector<TrainingInstance>& instances) {
  std::string out;
  for (const auto& t : instances) {
    ordered_json obj;
    obj["query_id"] = t.query_id;
    obj["positive_id"] = t.positive_id;
    obj["negative_ids"] = t.negative_ids;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

namespace {

ordered_json record_json(const SynthRecord& r) {
  ordered_json obj;
  obj["record_id"] = r.record_id;
  obj["query_text"] = r.query_text;
  obj["rewritten_query_text"] = r.rewritten_query_text;
  obj["entity"] = r.entity;
  obj["passage_id"] = r.passage_id;
  obj["image_source"] = r.image_source == ImageSource::kGenerated ? "generated" : "retrieved";
  obj["image_caption"] = r.image_caption;
  obj["relevance_score"] = r.relevance_score ? ordered_json(*r.relevance_score) : ordered_json(nullptr);
  obj["domain_label"] = r.domain_label ? ordered_json(*r.domain_label) : ordered_json(nullptr);
  obj["domain_confidence"] = r.domain_confidence ? ordered_json(*r.domain_confidence) : ordered_json(nullptr);
  return obj;
}

}  // namespace

std::vector<SynthRecord> parse_synth_records(std::string_view text, const std::string& source) {
  static const std::set<std::string> kRequired = {"record_id",  "query_text",   "rewritten_query_text", "entity",
                                                  "passage_id", "image_source", "image_caption"};
  static const std::set<std::string> kAllowed = [] {
    auto s = kRequired;
    s.insert({"relevance_score", "domain_label", "domain_confidence"});
    return s;
  }();
  std::vector<SynthRecord> out;
  std::set<std::string> ids;
  for_each_object(text, source, [&](std::size_t line, const json& obj) {
    check_keys(obj, kAllowed, kRequired, source, line);
    SynthRecord r;
    r.record_id = get_string(obj, "record_id", source, line);
    if (!ids.insert(r.record_id).second) throw SchemaError(source, line, "duplicate record_id '" + r.record_id + "'");
    r.query_text = get_string(obj, "query_text", source, line);
    r.rewritten_query_text = get_string(obj, "rewritten_query_text", source, line);
    r.entity = get_string(obj, "entity", source, line);
    r.passage_id = get_string(obj, "passage_id", source, line);
    const auto src = get_string(obj, "image_source", source, line);
    if (src == "generated") {
      r.image_source = ImageSource::kGenerated;
    } else if (src == "retrieved") {
      r.image_source = ImageSource::kRetrieved;
    } else {
      throw SchemaError(source, line, "image_source must be 'generated' or 'retrieved'");
    }
    r.image_caption = get_string(obj, "image_caption", source, line);
    r.relevance_score = get_optional<double>(obj, "relevance_score", source, line);
    r.domain_label = get_optional<std::string>(obj, "domain_label", source, line);
    r.domain_confidence = get_optional<double>(obj, "domain_confidence", source, line);
    out.push_back(std::move(r));
  });
  return out;
}

std::string format_synth_records(const std::vector<SynthRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_json(r).dump();
    out += '\n';
  }
  return out;
}

std::string format_discarded(const std::vector<Discarded>& discarded) {
  std::string out;
  for (const auto& d : discarded) {
    auto obj = record_json(d.record);
    obj["reason"] = std::string(discard_reason_name(d.reason));
    obj["detail"] = d.detail;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace umr::io
